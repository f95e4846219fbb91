"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from . import __version__
from . import balance as bal
from .catalog import named_source, named_sources
from .errors import ValidationError
from .morphisms import (BlockCode, FixedPointSource, block_code_apply, fixed_point_prefix, parse_substitution, sliding_block_presentation)
from .numeration import (Dfao, DfaoSource, recurrence_formula_table, appendix_b_suite, dfao_from_substitution,
                         recurrence_constant_series)
from .sadic import (TRIBONACCI_RECURRENCE_CONSTANT, ContinuedFraction, DirectiveSequence, SAdicSource,
                    ar_congenial, decisiveness_certificate, level_prefix, partial_quotients, q_values,
                    sadic_slope, sturmian_rotation, sturmian_sadic, theoretical_balance_bound)
from .scan import complexity_profile, factor_set, max_power, recurrence_profile
from .toeplitz import ToeplitzSource, complexity_growth_check, parse_spec, toeplitz_prefix, validate_spec
from .words import ExplicitSource, WordSource, format_word, materialize, parse_word


def _read(path_or_text: str) -> str:
    """File contents, or the argument itself when it is not an existing path."""
    if os.path.exists(path_or_text):
        try:
            with open(path_or_text, encoding="utf-8") as fh:
                return fh.read()
        except OSError as exc:
            raise ValidationError(f"cannot read {path_or_text}: {exc}") from None
    return path_or_text


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"not a number: {text!r}") from None


# ------------------------------------------------------------ source specs

def resolve_source(args) -> Tuple[WordSource, dict]:
    """The word source selected by --source/--sub/--cf/--directive/--spec/--word/--dfao."""
    given = [f for f in ("source", "sub", "cf", "directive", "spec", "word", "dfao") if getattr(args, f, None)]
    if len(given) > 1:
        raise ValidationError(f"give exactly one source option, got {', '.join('--' + g for g in given)}")
    if not given:
        raise ValidationError("no source given; use --source NAME or one of --sub/--cf/--directive/--spec/--word/--dfao")
    kind = given[0]
    value = getattr(args, kind)
    if kind == "source":
        return named_source(value), {"source": value}
    if kind == "sub":
        sub, seed = parse_substitution(_read(value))
        seed = getattr(args, "letter", None) or seed or sub.source.name(0)
        return FixedPointSource(sub, seed), {"sub": sub.rules(), "seed": seed}
    if kind == "cf":
        cf = ContinuedFraction.parse(_read(value).strip())
        return SAdicSource(sturmian_sadic(cf)), {"cf": cf.describe()}
    if kind == "directive":
        ds = DirectiveSequence.parse(_read(value))
        letter = getattr(args, "letter", None) or ds.alphabet.name(0)
        return SAdicSource(ar_congenial(ds, letter)), {"directive": ds.describe(), "seed": letter}
    if kind == "spec":
        spec = parse_spec(_read(value))
        return ToeplitzSource(spec), {"spec": spec.describe()}
    if kind == "word":
        w = parse_word(_read(value))
        return ExplicitSource(w), {"word_length": len(w)}
    dfao = Dfao.from_json(_read(value))
    return DfaoSource(dfao), {"dfao": json.loads(dfao.to_json())}


# ---------------------------------------------------------------- output

class Output:
    """Collects report files and writes them with a manifest."""

    def __init__(self, args, command: str):
        self.args = args
        self.command = command
        self.started = time.perf_counter()
        self.files: List[str] = []
        self.source_info: dict = {}

    def emit(self, name: str, report: Optional[dict] = None, table: Optional[List[Tuple]] = None,
             header: Optional[List[str]] = None, text: Optional[str] = None) -> None:
        mode = getattr(self.args, "emit", "json") or "json"
        if text is not None:
            body, ext = text, "txt"
        elif mode == "csv" and table is not None:
            buf = io.StringIO()
            wr = csv.writer(buf, lineterminator="\n")
            wr.writerow(header)
            wr.writerows(table)
            body, ext = buf.getvalue(), "csv"
        elif mode == "plotdata" and table is not None:
            body, ext = "".join(f"{r[0]} {r[1]}\n" for r in table), "dat"
        else:
            body, ext = json.dumps(report, indent=2, sort_keys=True, default=str) + "\n", "json"
        out = getattr(self.args, "out", None)
        if out:
            os.makedirs(out, exist_ok=True)
            path = os.path.join(out, f"{name}.{ext}")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(body)
            self.files.append(path)
        else:
            sys.stdout.write(body)

    def finish(self) -> None:
        out = getattr(self.args, "out", None)
        if not out:
            return
        params = {k: v for k, v in sorted(vars(self.args).items()) if k not in ("func", "out") and v is not None}
        manifest = {"command": self.command, "version": __version__, "parameters": params,
                    "source": self.source_info, "outputs": [os.path.basename(f) for f in self.files],
                    "seed": getattr(self.args, "seed", None),
                    "wall_clock_seconds": round(time.perf_counter() - self.started, 3)}
        with open(os.path.join(out, f"{self.command}.manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")


def _need(args, name: str):
    v = getattr(args, name, None)
    if v is None:
        raise ValidationError(f"--{name.replace('_', '-')} is required for this command")
    return v


def _positive(value: int, name: str) -> int:
    if value is None or value < 0:
        raise ValidationError(f"--{name} must be nonnegative")
    return value


# --------------------------------------------------------------- commands

def cmd_generate(args, out: Output) -> None:
    src, info = resolve_source(args)
    out.source_info = info
    n = _positive(_need(args, "len"), "len")
    w = materialize(src, n)
    if args.out:
        out.emit("word", text=format_word(w))
    elif n:
        sep = "" if w.alphabet.compact else " "
        sys.stdout.write(sep.join(w) + "\n")


def cmd_complexity(args, out: Output) -> None:
    src, info = resolve_source(args)
    out.source_info = info
    prof = complexity_profile(src, _need(args, "nmax"), _need(args, "horizon"))
    out.emit("complexity", prof.to_dict(), list(zip(prof.lengths, prof.counts)), ["n", "p"])


def cmd_balance(args, out: Output) -> None:
    src, info = resolve_source(args)
    out.source_info = info
    horizon, n_max = _need(args, "horizon"), _need(args, "nmax")
    if args.pattern:
        prof = bal.balance_profile(src, args.pattern, n_max, horizon)
        out.emit("balance", prof.to_dict(), list(zip(prof.lengths, prof.values)), ["n", "B"])
    else:
        rep = bal.uniform_balance_scan(src, args.umax or 1, n_max, horizon, jobs=args.jobs)
        rows = sorted(rep.per_length.items())
        out.emit("balance", rep.to_dict(), rows, ["u_length", "max_B"])


def cmd_discrepancy(args, out: Output) -> None:
    src, info = resolve_source(args)
    out.source_info = info
    mu = _fraction(args.mu) if args.mu is not None else None
    prof = bal.discrepancy_profile(src, _need(args, "pattern"), mu, _need(args, "nmax"), _need(args, "horizon"))
    rep = prof.to_dict()
    if args.check_consistency:
        B = bal.balance_profile(src, args.pattern, args.nmax, args.horizon)
        rep["consistency"] = bal.balance_discrepancy_consistency(B, prof).to_dict()
    out.emit("discrepancy", rep, list(zip(prof.lengths, prof.values)), ["n", "D"])


def cmd_recurrence(args, out: Output) -> None:
    src, info = resolve_source(args)
    out.source_info = info
    prof = recurrence_profile(src, _need(args, "nmax"), _need(args, "horizon"))
    rows = [(n, "inf" if v is None else v) for n, v in zip(prof.lengths, prof.values)]
    out.emit("recurrence", prof.to_dict(), rows, ["n", "R"])


def cmd_powerfree(args, out: Output) -> None:
    src, info = resolve_source(args)
    out.source_info = info
    w = materialize(src, _need(args, "horizon"))
    pw = max_power(w, args.pmax)
    out.emit("powerfree", {"horizon": len(w), "p_max": args.pmax, **pw.to_dict(),
                           "power_free_exponent": pw.exponent + 1 if pw.exponent < args.pmax else None})


BUILTIN_CODES = {
    # Thue-Morse 2-blocks to four letters
    "fig1": ({"01": "0", "11": "1", "10": "2", "00": "3"}, ["0", "1"], ["0", "1", "2", "3"]),
    # sum of two consecutive bits mod 2
    "sum2": ({"00": "0", "01": "1", "10": "1", "11": "0"}, ["0", "1"], ["0", "1"]),
}


def _block_code(text: str, source_alphabet) -> BlockCode:
    if text in BUILTIN_CODES:
        rules, _, target = BUILTIN_CODES[text]
        from .words import Alphabet
        return BlockCode.from_rules(rules, source_alphabet, Alphabet(target))
    try:
        d = json.loads(_read(text))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed block code: {exc}") from None
    if not isinstance(d, dict) or "rules" not in d:
        raise ValidationError("block code JSON needs a 'rules' object")
    from .words import Alphabet
    target = Alphabet(d["target"]) if "target" in d else None
    return BlockCode.from_rules(d["rules"], source_alphabet, target)


def cmd_blockcode(args, out: Output) -> None:
    if args.presentation:
        sub, seed = parse_substitution(_read(_need(args, "sub")))
        seed = args.letter or seed or sub.source.name(0)
        pres = sliding_block_presentation(sub, args.presentation, seed)
        rep = {"k": args.presentation, "seed": pres.seed, "rules": pres.substitution.rules(),
               "factors": {pres.substitution.source.name(i): f.text for i, f in enumerate(pres.factors)}}
        if args.len:
            rep["encoded_prefix"] = pres.encode.apply(fixed_point_prefix(sub, seed, args.len + args.presentation - 1)).text
        out.emit("presentation", rep)
        return
    src, info = resolve_source(args)
    out.source_info = info
    code = _block_code(_need(args, "code"), src.alphabet)
    coded = block_code_apply(code, src)
    n = _positive(_need(args, "len"), "len")
    w = materialize(coded, n)
    rep = {"k": code.k, "length": n, "prefix": w.text if w.alphabet.compact else " ".join(w)}
    if args.pattern and args.horizon and args.nmax:
        rep["balance"] = bal.balance_profile(coded, args.pattern, args.nmax, args.horizon).to_dict()
    out.emit("blockcode", rep)


def cmd_sturmian(args, out: Output) -> None:
    cf = ContinuedFraction.parse(_read(_need(args, "cf")).strip())
    n = _positive(_need(args, "len"), "len")
    depth = args.depth
    sadic = level_prefix(sturmian_sadic(cf.truncated(depth) if cf.depth is None else cf), 0, n)
    rot = sturmian_rotation(sadic_slope(cf), length=n, depth=depth, variant=args.variant)
    rep = {"cf": cf.describe(), "slope_cf": sadic_slope(cf).quotients(min(depth, 12)), "length": n,
           "sadic_equals_rotation": sadic.text == rot.text, "prefix": sadic.text[:200]}
    if args.nmax:
        prof = complexity_profile(sadic, args.nmax, n)
        rep["complexity_n_plus_1"] = all(c == k + 1 for k, c in zip(prof.lengths, prof.counts))
    out.emit("sturmian", rep)


def cmd_arnoux_rauzy(args, out: Output) -> None:
    ds = DirectiveSequence.parse(_read(_need(args, "directive")))
    letter = args.letter or ds.alphabet.name(0)
    src = SAdicSource(ar_congenial(ds, letter))
    pq = partial_quotients(ds, args.window)
    rep = {"directive": ds.describe(), "seed": letter, "window": args.window, "weak_quotients": list(pq.weak[:50]),
           "run_letters": list(pq.run_letters[:50]), "strong_quotients": list(pq.strong[:50])}
    if args.len:
        rep["prefix"] = materialize(src, args.len).text
    if args.nmax and args.horizon:
        prof = complexity_profile(src, args.nmax, args.horizon)
        d = len(ds.alphabet)
        rep["complexity"] = prof.to_dict()
        rep["complexity_matches_(d-1)n+1"] = all(c == (d - 1) * k + 1 for k, c in zip(prof.lengths, prof.counts))
    out.emit("arnoux-rauzy", rep)


def cmd_decisive(args, out: Output) -> None:
    sub, seed = parse_substitution(_read(_need(args, "sub")))
    seed = args.letter or seed or sub.source.name(0)
    ref = fixed_point_prefix(sub, seed, args.horizon or 10_000)
    cert = decisiveness_certificate(sub, factor_set(ref, 2), args.k)
    rep = {"k": args.k, "horizon": len(ref), "certificate": None if cert is None else {a: (None if v is None else v.text)
                                                                   for a, v in cert.r.items()}}
    if cert is not None and args.pattern:
        rep["q"] = q_values(cert, sub, args.pattern)
    out.emit("decisive", rep)


def cmd_bound(args, out: Output) -> None:
    L = TRIBONACCI_RECURRENCE_CONSTANT if args.L is None else args.L
    B = 2.0 if args.B is None else args.B
    K = 3.0 if args.K is None else args.K
    out.emit("bound", {"L": L, "B": B, "K": K, "bound": theoretical_balance_bound(L, B, K)})


def cmd_toeplitz(args, out: Output) -> None:
    spec = parse_spec(_read(_need(args, "spec")))
    out.source_info = {"spec": spec.describe()}
    rep = {"spec": spec.describe(), "validation": validate_spec(spec, seed=args.seed or 0).to_dict(),
           "periods": [str(p) for p in spec.periods]}
    if args.len:
        w = toeplitz_prefix(spec, args.len)
        rep["prefix"] = w.text if w.alphabet.compact else " ".join(w)
    if args.check_growth:
        rep["growth"] = [r.to_dict() for r in complexity_growth_check(spec, horizon=args.horizon)]
    out.emit("toeplitz", rep)


def cmd_dfao(args, out: Output) -> None:
    if args.from_sub:
        sub, seed = parse_substitution(_read(args.from_sub))
        outputs = json.loads(_read(_need(args, "outputs"))) if args.outputs else {a: a for a in sub.source}
        dfao = dfao_from_substitution(sub, outputs, seed, args.numeration)
    else:
        dfao = Dfao.from_json(_read(_need(args, "dfao")))
    n = _positive(_need(args, "len"), "len")
    w = materialize(DfaoSource(dfao), n)
    out.emit("dfao", {"numeration": dfao.numeration.kind, "length": n, "dfao": json.loads(dfao.to_json()),
                      "prefix": w.text if w.alphabet.compact else " ".join(w)})


def cmd_appendix_a(args, out: Output) -> None:
    rows = recurrence_formula_table(args.nmax or 28, args.horizon or 10_000)
    series = recurrence_constant_series(args.depth)
    rep = {"rows": rows, "all_match": all(r["match"] for r in rows), "series": series.to_dict(),
           "limit": TRIBONACCI_RECURRENCE_CONSTANT}
    out.emit("appendix-a", rep, [(r["n"], r["predicted"], r["brute_force"], r["match"]) for r in rows],
             ["n", "predicted", "brute_force", "match"])


def cmd_appendix_b(args, out: Output) -> None:
    rep = appendix_b_suite(args.horizon or 10_000, args.max_shift)
    out.emit("appendix-b", rep.to_dict())
    if not rep.passed:
        raise ValidationError("non-recurrent word checks failed; see report")


def cmd_reproduce_all(args, out: Output) -> int:
    from .experiments import run_all
    only = [int(x) for x in args.only.split(",")] if args.only else None
    results = run_all(only, jobs=args.jobs)
    for r in results:
        print(r.line(), f"({r.seconds:.1f}s)", file=sys.stderr if not args.out and args.emit == "json" else sys.stdout)
    passed = sum(r.passed for r in results)
    summary = {"passed": passed, "total": len(results), "results": [r.to_dict() for r in results]}
    out.emit("reproduce-all", summary)
    return 1 if args.strict and passed < len(results) else 0


# ------------------------------------------------------------------ parser

def _add_source(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("source")
    g.add_argument("--source", help=f"named source: {', '.join(named_sources())}, constant:W, periodic:W")
    g.add_argument("--sub", help="substitution file (rule lines or JSON)")
    g.add_argument("--letter", help="seed letter for --sub/--directive")
    g.add_argument("--cf", help="continued fraction, e.g. 'cf: 1 1 (2)'")
    g.add_argument("--directive", help="directive sequence file")
    g.add_argument("--spec", help="Toeplitz spec JSON")
    g.add_argument("--word", help="word file")
    g.add_argument("--dfao", help="DFAO JSON")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--len", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--nmax", type=int)
    p.add_argument("--umax", type=int)
    p.add_argument("--pattern")
    p.add_argument("--emit", choices=("json", "csv", "plotdata"), default="json")
    p.add_argument("--out", help="output directory; a manifest is written next to the reports")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, help="seed for sampled modes")


COMMANDS: Dict[str, Tuple[Callable, str]] = {
    "generate": (cmd_generate, "print a prefix of a word"),
    "complexity": (cmd_complexity, "factor complexity profile"),
    "balance": (cmd_balance, "balance profile of a pattern, or uniform scan over all short factors"),
    "discrepancy": (cmd_discrepancy, "discrepancy profile of a pattern"),
    "recurrence": (cmd_recurrence, "recurrence function profile"),
    "powerfree": (cmd_powerfree, "largest power in a prefix"),
    "blockcode": (cmd_blockcode, "apply a sliding block code, or build a k-block presentation"),
    "sturmian": (cmd_sturmian, "Sturmian word from a continued fraction"),
    "arnoux-rauzy": (cmd_arnoux_rauzy, "Arnoux-Rauzy word from a directive sequence"),
    "decisive": (cmd_decisive, "decisiveness certificate and q-values"),
    "bound": (cmd_bound, "evaluate 2(L+1)(B K^4 + 2 K^3 + 1)"),
    "toeplitz": (cmd_toeplitz, "build and validate a Toeplitz spec"),
    "dfao": (cmd_dfao, "word generated by a DFAO"),
    "appendix-a": (cmd_appendix_a, "Tribonacci recurrence formula against brute force"),
    "appendix-b": (cmd_appendix_b, "checks on the Fibonacci-automatic non-recurrent word"),
    "reproduce-all": (cmd_reproduce_all, "run every acceptance experiment"),
}

SOURCED = {"generate", "complexity", "balance", "discrepancy", "recurrence", "powerfree", "blockcode"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="balancelab", description="Balance, complexity and recurrence of infinite words.")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)
    for name, (fn, help_text) in COMMANDS.items():
        p = subs.add_parser(name, help=help_text, description=help_text)
        _common(p)
        if name in SOURCED:
            _add_source(p)
        p.set_defaults(func=fn)
        if name == "discrepancy":
            p.add_argument("--mu", help="exact frequency, e.g. 2/3; estimated when omitted")
            p.add_argument("--check-consistency", action="store_true")
        elif name == "powerfree":
            p.add_argument("--pmax", type=int, default=8)
        elif name == "blockcode":
            p.add_argument("--code", help="builtin (fig1, sum2) or JSON with 'rules'")
            p.add_argument("--presentation", type=int, metavar="K", help="k-block presentation of --sub")
        elif name == "sturmian":
            p.add_argument("--cf")
            p.add_argument("--depth", type=int, default=40)
            p.add_argument("--variant", choices=("left-closed", "right-closed"), default="left-closed")
        elif name == "arnoux-rauzy":
            p.add_argument("--directive")
            p.add_argument("--letter")
            p.add_argument("--window", type=int, default=10_000)
        elif name == "decisive":
            p.add_argument("--sub")
            p.add_argument("--letter")
            p.add_argument("--k", type=int, default=1)
        elif name == "bound":
            p.add_argument("--L", type=float)
            p.add_argument("--B", type=float)
            p.add_argument("--K", type=float)
        elif name == "toeplitz":
            p.add_argument("--spec")
            p.add_argument("--check-growth", action="store_true")
        elif name == "dfao":
            p.add_argument("--dfao")
            p.add_argument("--from-sub", help="substitution with images of length 1 or 2")
            p.add_argument("--outputs", help="JSON map state -> output symbol")
            p.add_argument("--numeration", choices=("fibonacci", "tribonacci"), default="fibonacci")
        elif name == "appendix-a":
            p.add_argument("--depth", type=int, default=20)
        elif name == "appendix-b":
            p.add_argument("--max-shift", type=int, default=32)
        elif name == "reproduce-all":
            p.add_argument("--only", help="comma-separated criterion numbers")
            p.add_argument("--strict", action="store_true", help="exit 1 when a criterion fails")
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = Output(args, args.command)
    try:
        code = args.func(args, out)
        out.finish()
        return int(code or 0)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and map to the internal-error exit code
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
