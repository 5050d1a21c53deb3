import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

openmp = os.environ.get("PERSISTPLAN_OPENMP", "1") != "0"
compile_args = ["-O3", "-ffp-contract=off"]
link_args = []
if openmp:
    compile_args.append("-fopenmp")
    link_args.append("-fopenmp")

extensions = [
    Extension(
        "persistplan._kernels",
        ["src/persistplan/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=compile_args,
        extra_link_args=link_args,
        optional=True,  # fall back to the numpy kernels if compilation fails
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
