#!/usr/bin/env python3

# ---------------------------------------------------------------------------
# Typoscope
#
# setup.py
#
# For installation of this package.
#
# usage: python setup.py install
# ---------------------------------------------------------------------------

from setuptools import setup
from typoscope import meta

setup(
    name="typoscope",
    version=meta.__version__,
    description="Dependency directionality prediction from POS sequences",
    author=meta.__author__,
    packages=["typoscope", "typoscope.features", "typoscope.model"],
    scripts=["typopredict.py"],
    python_requires=">=3.7",
    install_requires=[
        "numpy>=1.20.1",
        "pyyaml>=5.4"],
    extras_require={
        "tests": ["pytest>=6.2", "hypothesis>=6.0"]}
)
