#!/usr/bin/env python3
"""
Fire-Sale Engine Setup Script
Package manifest for the fire-sale contagion engine and its command line
"""

from pathlib import Path

from setuptools import find_packages, setup

ROOT = Path(__file__).parent


def _read_requirements():
    """Runtime requirements from requirements.txt"""
    lines = (ROOT / "requirements.txt").read_text(encoding="utf-8").splitlines()
    return [line.strip() for line in lines if line.strip() and not line.startswith("#")]


setup(
    name="firesale",
    version="1.0.0",
    description="Price-mediated contagion among capital-constrained banks: simulation, bounds and stress tests",
    long_description=(ROOT / "README.md").read_text(encoding="utf-8"),
    long_description_content_type="text/markdown",
    packages=find_packages(include=["firesale", "firesale.*"]),
    package_data={"firesale": ["firesale.config.json"]},
    python_requires=">=3.9",
    install_requires=_read_requirements(),
    extras_require={
        "test": ["pytest>=7.0.0", "pytest-cov>=4.0.0"],
    },
    entry_points={
        "console_scripts": ["firesale=firesale.src.commands.cli:main"],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Intended Audience :: Science/Research",
    ],
)
