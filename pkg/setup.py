from setuptools import setup, find_packages

setup(
    name="sfa-plsr",
    version="0.1",
    packages=find_packages(),
    package_data={"src.config": ["data/*.yaml"]},
    install_requires=[
        "numpy>=1.26.0",
        "pandas>=2.1.0",
        "scipy>=1.11.0",
        "matplotlib>=3.8.0",
        "seaborn>=0.13.0",
        "pillow>=10.0.0",
        "click>=8.1.0",
        "joblib>=1.3.0",
        "pyyaml>=6.0.1",
        "pytest>=7.4.0",
        "hypothesis>=6.90.0",
        "loguru>=0.7.0",
        "tqdm>=4.66.0",
    ],
    entry_points={
        "console_scripts": ["sfa=src.cli:main"],
    },
)
