"""Build script: compiles the optional top-k merge kernel.

The package works without the extension (a NumPy fallback is selected at
import time); set EMKIT_SKIP_NATIVE=1 to skip compiling it.
"""

import os

from setuptools import Extension, setup


def extensions():
    if os.environ.get("EMKIT_SKIP_NATIVE") == "1":
        return []
    import numpy as np
    from Cython.Build import cythonize

    ext = Extension(
        "emkit.blocking._topk_cy",
        ["src/emkit/blocking/_topk_cy.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=extensions())
