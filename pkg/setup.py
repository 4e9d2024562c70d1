import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext
from setuptools.errors import CCompilerError, ExecError, PlatformError


class OptionalBuildExt(build_ext):
    """Build the Cython kernels if possible; the package falls back to the
    pure-numpy implementations at import time when the extension is absent."""

    def run(self):
        try:
            super().run()
        except (PlatformError, FileNotFoundError):
            self._warn()

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except (CCompilerError, ExecError, PlatformError, ValueError):
            self._warn()

    @staticmethod
    def _warn():
        print("WARNING: compiled kernels failed to build; "
              "lopbsr will use the pure-Python fallback.")


try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "lopbsr._kernels",
                ["src/lopbsr/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": OptionalBuildExt})
