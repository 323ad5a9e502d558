#!/usr/bin/env python3

"""opengke - Group key exchange suite and deterministic protocol simulator"""

import os
from setuptools import setup


def read(fname):
    return open(os.path.join(os.path.dirname(__file__), fname)).read()

setup(
    name='opengke',
    version='0.1.0',
    license='GPLv2',
    description='Group key exchange with single-broadcast rekeying, eviction '
                'and mass join, plus a deterministic protocol simulator',
    long_description=read('README.md'),
    long_description_content_type='text/markdown',
    packages=['opengke', 'opengke.protocols'],
    python_requires='>=3.8',
    install_requires=[
        'gmpy2',
        'tabulate',
    ],
    extras_require={
        'test': ['pytest', 'hypothesis'],
    },
    entry_points={
        'console_scripts': ['opengke = opengke.cli:main'],
    },
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Operating System :: OS Independent',

        'License :: OSI Approved :: GNU General Public License v2 (GPLv2)',

        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',

        'Topic :: Security :: Cryptography',
        'Topic :: Scientific/Engineering :: Mathematics',
        'Topic :: Software Development :: Libraries :: Python Modules',
    ]
)
