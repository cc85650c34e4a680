from setuptools import setup, find_packages

setup(
    name='rydberg_dressing',
    version='0.1.0',
    packages=find_packages(exclude=['tests']),
    package_data={'rydberg_dressing': ['presets/*.json']},
    python_requires='>=3.9',
    install_requires=[
        'numpy>=1.22',
        'scipy>=1.9',
        'click>=8.1',
        'pydantic>=2.0',
        'python-dotenv',
        'tqdm',
    ],
    extras_require={
        'tests': ['pytest>=7'],
    },
    entry_points={
        'console_scripts': [
            'ryd=rydberg_dressing.cli:main',
        ],
    },
)
