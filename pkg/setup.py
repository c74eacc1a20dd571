import numpy
from setuptools import Extension, setup

# The compiled kernel is optional: if Cython (or a C compiler) is missing the
# package falls back to the numpy implementation at import time.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "ampsi._kernels_c",
                ["src/ampsi/_kernels_c.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
