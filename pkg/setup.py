"""Build the optional Cython kernels.

If Cython or a compiler is unavailable the package still installs and the
NumPy fallback in ``sgbn_lab._kernels_py`` is used at import time.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("SGBN_LAB_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "sgbn_lab._kernels",
                    ["src/sgbn_lab/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
