"""Builds the optional compiled convolution kernels.

The package works without them (a numpy fallback is selected at import);
the extension just makes the hot conv loops faster.
"""
from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "hfguide.kernels._conv_cy",
                ["src/hfguide/kernels/_conv_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
