from setuptools import setup, find_packages
# To use a consistent encoding
from codecs import open
from os import path

here = path.abspath(path.dirname(__file__))

# Get the long description from the README file
with open(path.join(here, 'README.md'), encoding='utf-8') as f:
    long_description = f.read()

setup(
    name='mvtlasso',

    # Versions should comply with PEP440. Keep in sync with mvtlasso/__init__.py.
    version='0.1.0',

    description='Robust sparse precision matrix (gene co-expression network) estimation from multiple '
                + 'expression data sets via an EM over multivariate t latent loadings.',
    long_description=long_description,

    # Choose your license
    license='Apache License 2.0',

    # See https://pypi.python.org/pypi?%3Aaction=list_classifiers
    classifiers=[
        # How mature is this project? Common values are
        #   3 - Alpha
        #   4 - Beta
        #   5 - Production/Stable
        'Development Status :: 3 - Alpha',

        # Indicate who your project is intended for
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Bio-Informatics',

        # Pick your license as you wish (should match "license" above)
        'License :: OSI Approved :: Apache Software License',

        # Specify the Python versions you support here.
        'Programming Language :: Python :: 3.8'
    ],

    # What does your project relate to?
    keywords='graphical-lasso precision-matrix multivariate-t em ica stability-selection',

    packages=find_packages(exclude=['contrib', 'docs', 'tests']),

    python_requires='>=3.8',

    # List run-time dependencies here.  These will be installed by pip when
    # your project is installed.
    install_requires=['numpy', 'scipy', 'pandas', 'numba', 'joblib', 'torch', 'tqdm', 'orderedattrdict',
                      'tensorboardX'],

    # $ pip install -e .[test]
    extras_require={
        'dev': ['check-manifest'],
        'test': ['coverage', 'mock'],
    },

    entry_points={
        'console_scripts': [
            'mvtlasso=apps.cli:main',
        ],
    },
)
