from setuptools import setup

setup(
    name="plypart",
    version="0.1.0",
    packages=["plypart"],
    package_dir={"plypart": "."}
)
