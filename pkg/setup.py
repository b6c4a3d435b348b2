"""Build script for the optional compiled population kernel.

The package works without the extension: tgsim.backend falls back to a
pure-Python kernel that produces bit-identical results. The extension is
marked optional so a missing or broken C toolchain degrades the install
instead of failing it.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "tgsim._core",
                ["src/tgsim/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": 3},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
