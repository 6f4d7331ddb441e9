#!/usr/bin/env python

from setuptools import setup

with open("README.md", "r") as fh:
    long_description = fh.read()

setup(name="keymix",
      version='0.1.0',
      description="Keystroke timing mixes and the identification attacks they resist",
      python_requires=">=3.8.0",
      long_description=long_description,
      long_description_content_type="text/markdown",
      classifiers=[
          'License :: OSI Approved :: Apache Software License',
          'Programming Language :: Python :: 3 :: Only'
      ],
      install_requires=[
          'jsonschema==3.2.0',
          'orjson>=3.8.0',
          'numpy>=1.21',
          'joblib>=1.1',
      ],
      extras_require={
          'dev': [
              'pylint==2.11.1',
              'pytest==7.1.2',
              'coverage[toml]~=6.3',
              'scipy>=1.7',
              'ipython',
              'ipdb',
          ]
      },
      packages=['keymix'],
      package_data={
          'keymix': [
              'logging.conf'
          ]
      },
      include_package_data=True,
      entry_points={
          'console_scripts': [
              'keymix=keymix.cli:main',
          ]
      },
      )
