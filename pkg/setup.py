"""Build script for the compiled kernel extension.

The package works without the extension (a pure-Python twin of every kernel
ships in hjb_pi._kernels_py); building it just makes the inner solver loops
fast.  -ffp-contract=off keeps the compiled arithmetic bit-for-bit comparable
with the Python fallback by forbidding FMA contraction.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "hjb_pi._kernels",
                ["src/hjb_pi/_kernels.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    extensions = []

setup(ext_modules=extensions)
