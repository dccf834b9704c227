"""Build script for the optional compiled Monte Carlo kernels.

The compiled extension is an accelerator only: if Cython or a C compiler is
unavailable the package installs anyway and falls back to the pure-Python
kernels at import time.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

try:
    from setuptools.errors import CCompilerError, ExecError, PlatformError
except ImportError:  # very old setuptools
    from distutils.errors import (  # type: ignore[no-redef]
        CCompilerError,
        DistutilsExecError as ExecError,
        DistutilsPlatformError as PlatformError,
    )

BUILD_ERRORS = (CCompilerError, ExecError, PlatformError, FileNotFoundError)


class OptionalBuildExt(build_ext):
    """Try to build the accelerator; never fail the install over it."""

    def run(self):
        try:
            super().run()
        except BUILD_ERRORS:
            self._skip("the build environment lacks a working C toolchain")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except BUILD_ERRORS as exc:
            self._skip(f"compiling {ext.name} failed: {exc}")

    @staticmethod
    def _skip(reason):
        print(f"WARNING: {reason}; swapguard will use the pure-Python kernels.")


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        print("WARNING: Cython/numpy unavailable at build time; "
              "skipping the compiled kernels.")
        return []
    ext = Extension(
        "swapguard._mckernel",
        ["src/swapguard/_mckernel.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
