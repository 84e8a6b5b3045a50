import glob

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

# The extension compiles the core library directly: it has no dependencies
# beyond the standard library and threads, so there is no need to route the
# wheel build through CMake.
sources = sorted(glob.glob("src/*.cpp")) + ["bindings/module.cpp"]

setup(
    ext_modules=[
        Pybind11Extension(
            "sped._sped",
            sources,
            include_dirs=["include"],
            cxx_std=20,
        )
    ],
    cmdclass={"build_ext": build_ext},
)
