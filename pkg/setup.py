"""Build the optional Cython extension; the package works without it."""

from setuptools import setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        ["src/lsbts/_kernels.pyx"],
        compiler_directives={"language_level": "3"},
    )
    for ext in ext_modules:
        ext.include_dirs.append(np.get_include())
        ext.extra_compile_args.append("-O3")

setup(ext_modules=ext_modules)
