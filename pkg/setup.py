from setuptools import Extension, setup

# The compiled sweep core is optional: without Cython (or a working compiler)
# the package falls back to the numpy implementation selected in circssm._hot.
try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "circssm._hot._sweepcore",
                ["src/circssm/_hot/_sweepcore.pyx"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
