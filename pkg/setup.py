# Build the optional compiled kernels in place with:
#     python setup.py build_ext --inplace
# A failed or skipped build leaves the pure-numpy fallback in charge.
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - cython missing
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "weightflow._core._ckernels",
                ["src/weightflow/_core/_ckernels.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
