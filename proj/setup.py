"""CMake-driven build of the depthtrim._core extension.

The extension and the C++ library are configured by the top-level
CMakeLists.txt; this shim points setuptools' build_ext at it so
`pip install -e . --no-build-isolation` works.
"""

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
        ext_path = Path(self.get_ext_fullpath(ext.name)).resolve()
        pkg_dir = ext_path.parent
        pkg_dir.mkdir(parents=True, exist_ok=True)
        source_dir = Path(__file__).parent.resolve()
        build_dir = Path(self.build_temp).resolve()
        build_dir.mkdir(parents=True, exist_ok=True)

        subprocess.run(
            [
                "cmake",
                "-S", str(source_dir),
                "-B", str(build_dir),
                f"-DPython3_EXECUTABLE={sys.executable}",
                "-DCMAKE_BUILD_TYPE=Release",
                "-DDEPTHTRIM_PYTHON_ONLY=ON",
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_core", "-j2"],
            check=True,
        )

        built = build_dir / "python_pkg" / "depthtrim"
        for so in built.glob("_core*.so"):
            self.copy_file(str(so), str(pkg_dir / so.name))


setup(
    ext_modules=[CMakeExtension("depthtrim._core")],
    cmdclass={"build_ext": CMakeBuild},
)
