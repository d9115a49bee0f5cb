import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("FLOORCTL_SKIP_NATIVE") != "1":
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "floorctl.codec._native",
                ["src/floorctl/codec/_native.pyx"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
