"""Build the optional Cython kernels; the package falls back to NumPy without them."""
import os
import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

try:
    from Cython.Build import cythonize
except ImportError:
    warnings.warn("Cython not found; installing the pure-Python kernels only.")
    cythonize = None


class OptionalBuildExt(build_ext):
    """Treat a failed compile as a warning, not an install error."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - depends on toolchain
            warnings.warn(f"compiled kernels not built: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            warnings.warn(f"compiled kernel {ext.name} not built: {exc}")


ext_modules = []
if cythonize is not None:
    import numpy as np
if cythonize is not None and not os.environ.get("FRACNEUMANN_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "fracneumann._kernels",
                ["src/fracneumann/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False, "cdivision": True},
    )

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
