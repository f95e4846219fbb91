import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

from hypothesis import settings

# numba compiles kernels on first use, which would trip per-example deadlines
settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")
