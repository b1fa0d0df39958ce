#!/usr/bin/env python

from setuptools import find_packages, setup

version = "0.3.0"

with open("README.md") as f:
    readme = f.read()

with open("requirements.txt") as f:
    required = f.read().splitlines()

setup(
    name="macsolve",
    version=version,
    description="Solve square polynomial systems with Macaulay matrices and multiplication tables.",
    long_description=readme,
    long_description_content_type="text/markdown",
    keywords=[
        "polynomial systems",
        "macaulay matrix",
        "eigenvalue methods",
        "numerical algebraic geometry",
        "mixed volume",
        "toric",
        "multihomogeneous",
    ],
    license="MIT",
    entry_points={
        "console_scripts": ["macsolve=macsolve.__main__:run_macsolve"],
    },
    python_requires=">=3.8, <4",
    install_requires=required,
    packages=find_packages(exclude=("docs", "tests")),
    package_data={"macsolve": ["schemas/*.json"]},
    include_package_data=True,
    zip_safe=False,
)
