"""Builds the optional compiled search kernel.

Without Cython or a C compiler the package installs pure-Python and
``rocc.selector`` falls back to ``rocc._pykernel``.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("ROCC_NO_EXTENSION"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("rocc._kernel", ["src/rocc/_kernel.pyx"], extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
