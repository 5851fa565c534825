"""Build script for the optional compiled kernels.

The package is pure Python plus one Cython extension with the hot loops
(banded solves and wall-bounded finite difference stencils).  If Cython or
a C compiler is unavailable the extension is skipped and the package falls
back to the numpy implementations at import time.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "benard.kernels._ckernels",
                ["src/benard/kernels/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O2"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    print(f"skipping compiled kernels ({exc}); pure numpy fallback will be used")

setup(ext_modules=ext_modules)
