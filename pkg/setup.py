import os

from setuptools import Extension, setup

# The compiled hashing kernel is optional: without Cython (or with
# PICOSPAN_NO_EXT=1) the package falls back to the pure-Python kernel.
ext_modules = []
if os.environ.get("PICOSPAN_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("picospan._hashkernel", ["src/picospan/_hashkernel.pyx"])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
