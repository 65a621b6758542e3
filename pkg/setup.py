"""Builds the optional compiled core; without Cython or a compiler the pure
Python backend is used instead."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("DYSECT_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [Extension("dysect._core", ["src/dysect/_core.pyx"],
                       extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
        )


def _optional(cmdclass):
    # A failed compile leaves the pure backend in charge rather than aborting.
    from setuptools.command.build_ext import build_ext

    class build_ext_optional(build_ext):
        def run(self):
            try:
                super().run()
            except Exception as exc:
                print(f"warning: compiled core not built ({exc}); using pure Python")

        def build_extension(self, ext):
            try:
                super().build_extension(ext)
            except Exception as exc:
                print(f"warning: {ext.name} not built ({exc}); using pure Python")

    cmdclass["build_ext"] = build_ext_optional
    return cmdclass


setup(ext_modules=ext_modules, cmdclass=_optional({}))
