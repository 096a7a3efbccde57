from setuptools import find_packages, setup

setup(
    name="barload",
    version="1.0.0",
    packages=find_packages(include=["barload", "barload.*"]),
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.26.0",
        "scipy>=1.11.0",
        "pydantic>=2.5.0",
        "PyYAML>=6.0",
    ],
)
