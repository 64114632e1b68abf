import os

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext = Extension(
        "agdiff._speedups",
        ["src/agdiff/_speedups.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-fopenmp"],
        extra_link_args=["-fopenmp"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], language_level=3)
except ImportError:
    # no Cython available: install the pure-python package; the pairwise
    # module falls back to its numpy implementation at import time
    if os.environ.get("AGDIFF_REQUIRE_SPEEDUPS"):
        raise

setup(ext_modules=ext_modules)
