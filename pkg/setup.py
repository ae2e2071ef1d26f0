"""Build script for the optional compiled Langevin kernel.

The package is fully functional without the extension (a NumPy kernel is
selected at import time); the extension is therefore marked optional so a
missing compiler degrades gracefully instead of failing the install.
"""

import os

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None and os.environ.get("TIMEARROW_PURE_PYTHON") != "1":
    ext = Extension(
        "timearrow._kernel_cy",
        ["src/timearrow/_kernel_cy.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # -ffp-contract=off: no FMA fusion, so the compiled step loop is
        # bit-identical to the NumPy kernel (same IEEE op sequence).
        extra_compile_args=["-O3", "-ffp-contract=off"],
        optional=True,
    )
    extensions = cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=extensions)
