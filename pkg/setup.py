"""Build script: compiles the optional rollout kernel extension.

The package works without the extension (a pure-Python fallback is selected
at import time), so a missing compiler or Cython only costs speed.
"""
import sys

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/planarpush/_kernels.pyx"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    print("planarpush: Cython not available, building without the compiled "
          "rollout kernel (pure-Python fallback will be used)", file=sys.stderr)

setup(ext_modules=ext_modules)
