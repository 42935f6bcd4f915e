"""CMake-backed build of the hhme._core extension.

The CMake project is the single source of truth for compilation; this file
only drives it and copies the produced module into the wheel layout.
Install with `pip install . --no-build-isolation` when build isolation
cannot reach an index.
"""

import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name: str, sourcedir: str = "") -> None:
        super().__init__(name, sources=[])
        self.sourcedir = str(Path(sourcedir).resolve())


class CMakeBuild(build_ext):
    def build_extension(self, ext: CMakeExtension) -> None:
        out_path = Path.cwd() / self.get_ext_fullpath(ext.name)
        build_dir = Path(self.build_temp) / "cmake"
        build_dir.mkdir(parents=True, exist_ok=True)

        cmake_args = [
            f"-DPYTHON_EXECUTABLE={sys.executable}",
            f"-DPython_EXECUTABLE={sys.executable}",
            "-DCMAKE_BUILD_TYPE=Release",
            "-DHHME_BUILD_TESTS=OFF",
            "-DHHME_BUILD_CLI=OFF",
            "-DHHME_BUILD_PYTHON=ON",
        ]
        subprocess.run(
            ["cmake", ext.sourcedir, *cmake_args], cwd=build_dir, check=True
        )
        subprocess.run(
            ["cmake", "--build", ".", "--target", "hhme_pymod", "-j"],
            cwd=build_dir,
            check=True,
        )

        produced = sorted((build_dir / "python" / "hhme").glob("_core*"))
        if not produced:
            raise RuntimeError("CMake did not produce the _core extension")
        out_path.parent.mkdir(parents=True, exist_ok=True)
        shutil.copy2(produced[0], out_path)


setup(
    packages=["hhme"],
    package_dir={"": "python"},
    ext_modules=[CMakeExtension("hhme._core")],
    cmdclass={"build_ext": CMakeBuild},
    zip_safe=False,
)
