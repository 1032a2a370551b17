"""Build script: compiles the optional Cython kernel extension.

The extension is a pure speed-up; if Cython or a C compiler is missing
(or POLYMAX_NO_EXT=1 is set) the package installs without it and falls
back to the pure-Python kernels at import time.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("POLYMAX_NO_EXT", "0") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "polymax._kernels._ckernels",
                    sources=["src/polymax/_kernels/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
