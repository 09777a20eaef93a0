"""Build script: compiles the optional assembly kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so a failing compiler must not fail the install.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build extensions, degrading to the pure-python fallback on failure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing entirely
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print("*" * 72)
        print("WARNING: could not build the compiled assembly kernel:")
        print(f"  {exc}")
        print("nlscn will fall back to the numpy kernel backend.")
        print("*" * 72)


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        OptionalBuildExt._warn(exc)
        return []
    ext = Extension(
        "nlscn.kernels._csr_scatter",
        sources=["src/nlscn/kernels/_csr_scatter.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
