"""Build script for the compiled plan-search core.

The extension is optional: if Cython or a C compiler is unavailable the
package still installs and ``ndtstream.kernels`` falls back to the
numpy implementation in ``_plancore_py``.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("NDTSTREAM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "ndtstream._plancore",
                    ["src/ndtstream/_plancore.pyx"],
                    # bit-identical results with the numpy fallback need plain IEEE ops
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )

setup(ext_modules=ext_modules)
