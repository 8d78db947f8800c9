"""Build script: compiles the optional gradient-histogram kernel.

The package is fully functional without the compiled extension (a NumPy
implementation of the same kernel is selected at import time), so any
failure to build it is non-fatal.
"""
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "codetrack._gradhist",
                ["src/codetrack/_gradhist.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
