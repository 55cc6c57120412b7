import os
from setuptools import setup, find_packages

readme_path = os.path.join(os.path.dirname(__file__), 'README.md')
with open(readme_path) as readme:
    long_description = readme.read()

setup(name='coupling-cli',
      description='Measure the coupled development of two indicator subsystems across regions and years',
      long_description=long_description,
      long_description_content_type='text/markdown',
      version='0.1.0',
      packages=find_packages(exclude=['tests']),
      package_data={
          '': ['data/*'],
      },
      python_requires='>=3.9',
      install_requires=[
          'esda',
          'libpysal',
          'numpy>=1.20',
          'pandas>=1.5',
          'prettytable',
          'PyYAML',
          'scipy',
      ],
      extras_require={
          'test': ['pytest'],
      },
      entry_points={
          'console_scripts': [
              'coupling-cli = coupling_cli.cli:main',
          ]
      },
      classifiers=[
        'Programming Language :: Python :: 3'
      ])
