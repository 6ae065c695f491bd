"""Build script: compiles the optional dual-number accelerator.

The package works without the extension (pure-Python fallback is chosen
at import time), so a failed compile is tolerated.
"""

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - build-env dependent
            print(f"warning: skipping extension build ({exc})")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            print(f"warning: skipping {ext.name} ({exc})")


try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("gpdlab._dualaccel", ["src/gpdlab/_dualaccel.pyx"])],
        language_level=3,
    )
except ImportError:  # pragma: no cover
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
