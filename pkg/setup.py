from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext = Extension(
        "sparse_kmeans._kernels",
        ["src/sparse_kmeans/_kernels.pyx"],
        extra_compile_args=["-O3"],
    )
    # The package falls back to the pure-Python kernels when the compiled
    # extension is unavailable, so a failed build must not fail the install.
    ext.optional = True
    ext_modules = cythonize([ext], language_level="3")

setup(ext_modules=ext_modules)
