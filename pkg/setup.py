"""Build script: compiles the optional Cython kernel extension.

The package is fully functional without the extension (a NumPy fallback is
selected at import time); the extension only accelerates the decoder fit
loop. Set DCE_SKIP_EXT=1 to force a pure-Python build.
"""

import os

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("DCE_SKIP_EXT") == "1":
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "dce.decoder._kernels",
        ["src/dce/decoder/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions())
