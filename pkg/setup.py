#! /usr/bin/env python3
# -*- coding: utf-8 -*-
"""Setup-script for scenecraft."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

from setuptools import setup, find_namespace_packages

from src.scenecraft.__about__ import __version__

with open("README.md") as fh:
    # Load long description from readme file
    long_description = fh.read()

setup(
    name="scenecraft",
    version=__version__,

    packages=find_namespace_packages("src"),
    package_dir={'': 'src'},
    include_package_data=True,

    python_requires=">= 3.9",
    install_requires=[
        "httpx",
        "numpy",
        "Pillow",
        "scipy",
        "torch",
    ],
    entry_points={
        "console_scripts": [
            "scenecraft = scenecraft.cli:main",
        ],
    },

    platforms=["all"],

    license="LGPLv2",
    author="Scenecraft contributors",
    description="Desk scale text to movie pipeline with frozen backbone video diffusion",
    long_description=long_description,
    long_description_content_type="text/markdown",
    keywords=["text to video", "diffusion", "adapter", "audio retrieval", "movie"],
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Environment :: Console",
        "Intended Audience :: Developers",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: "
        "GNU Lesser General Public License v2 (LGPLv2)",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Topic :: Multimedia :: Video",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
)
