from setuptools import setup

config = {'setup_requires': ['pbr'], 'pbr': True}
setup(**config)
