import os

from setuptools import Extension, setup

# The compiled core is optional: without Cython or a compiler the package
# installs with the pure-Python kernels only.
ext_modules = []
if os.environ.get("PALIGN_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "palign._kernels",
                    ["src/palign/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    # no -ffast-math / FMA contraction: scores must match the
                    # Python fallback bit for bit
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
