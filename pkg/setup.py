"""Build the optional Cython kernel.

The extension is marked optional: if compilation fails the package still
installs and ``menuabc.kernel`` falls back to the pure-Python backend.
"""
from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build without the extension
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "menuabc._kernel",
                ["src/menuabc/_kernel.pyx"],
                include_dirs=[np.get_include()],
                # no fast-math / FMA contraction: results must match the
                # pure-Python backend bit for bit
                extra_compile_args=["-O2", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
