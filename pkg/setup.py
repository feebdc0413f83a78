import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("DIRACBATH_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "diracbath._kernels._core",
                    ["src/diracbath/_kernels/_core.pyx"],
                    # -fcx-limited-range: plain complex multiply without the
                    # over/underflow libcall (amplitudes here stay O(1))
                    extra_compile_args=["-O3", "-fcx-limited-range"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # pure-Python fallback kernels are selected at import time
        ext_modules = []

setup(ext_modules=ext_modules)
