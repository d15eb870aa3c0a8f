import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "drivendecay._evolve_cy",
                ["src/drivendecay/_evolve_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3", "-ffast-math", "-march=native"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # pure-Python install; dynamics falls back to the NumPy stepper
    ext_modules = []

setup(ext_modules=ext_modules)
