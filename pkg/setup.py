from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="distributed_safe_bo",
    description="Safe Bayesian optimization for distributed multi-agent systems",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*"]),
    version="0.1.1",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
        "pandas>=1.5.0",
    ],
    entry_points={
        "console_scripts": ["safe-mas-bo=distributed_safe_bo.experiments.cli:main"],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "Operating System :: OS Independent"
    ],
    license='Apache License, v2.0',
    python_requires='>=3.8',
)
