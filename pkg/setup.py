import os

from setuptools import Extension, setup

# Set MMVSIM_NO_EXT=1 to install the pure-Python engine only.
ext_modules = []
if not os.environ.get("MMVSIM_NO_EXT"):
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "mmvsim._kernel",
                ["src/mmvsim/_kernel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
