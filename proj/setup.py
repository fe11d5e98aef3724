"""CMake-driven extension build (the pybind11 cmake_example pattern)."""

import os
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        extdir = Path(self.get_ext_fullpath(ext.name)).parent.resolve()
        build_temp = Path(self.build_temp) / ext.name
        build_temp.mkdir(parents=True, exist_ok=True)
        source = Path(__file__).parent.resolve()
        subprocess.run(
            [
                "cmake",
                str(source),
                f"-DCMAKE_LIBRARY_OUTPUT_DIRECTORY={extdir}",
                f"-DPython3_EXECUTABLE={sys.executable}",
                "-DCMAKE_BUILD_TYPE=Release",
                "-DSKBUILD=ON",  # python-package build: skip tests and CLI
            ],
            cwd=build_temp,
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", ".", "--target", "_core", f"-j{os.cpu_count() or 2}"],
            cwd=build_temp,
            check=True,
        )


setup(
    packages=["edgechain"],
    package_dir={"": "python"},
    ext_modules=[CMakeExtension("edgechain._core")],
    cmdclass={"build_ext": CMakeBuild},
)
