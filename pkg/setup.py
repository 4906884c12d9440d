import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # the pure-Python kernel is used instead
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("SSEP_LAB_NO_EXT"):
    npy_random_lib = os.path.join(os.path.dirname(np.__file__), "random", "lib")
    ext_modules = cythonize(
        [
            Extension(
                "ssep_lab.stirring._kernel",
                ["src/ssep_lab/stirring/_kernel.pyx"],
                include_dirs=[np.get_include()],
                library_dirs=[npy_random_lib],
                libraries=["npyrandom"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules)
