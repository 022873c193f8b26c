"""Build the optional Cython kernel; the package works without it."""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any compiler failure falls back to numpy
            self.warn(f"compiled kernel not built ({exc}); the numpy backend will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            self.warn(f"building {ext.name} failed ({exc}); the numpy backend will be used")


def extensions():
    if os.environ.get("FSIRELAX_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    # contraction into FMA would change results relative to the numpy backend
    flags = ["-O3", "-fno-math-errno", "-ffp-contract=off",
             "--param", "vect-max-version-for-alias-checks=100"]
    if os.environ.get("FSIRELAX_NATIVE"):
        flags.append("-march=native")
    ext = Extension("fsirelax._ckernel", ["src/fsirelax/_ckernel.pyx"], extra_compile_args=flags)
    return cythonize([ext], compiler_directives={"language_level": 3}, quiet=True)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
