import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "rtimpute._kernels._core",
        ["src/rtimpute/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

# Without Cython the package installs pure-Python; the numpy kernel
# fallback is selected at import time.
setup(ext_modules=cythonize(extensions, language_level=3) if cythonize else [])
