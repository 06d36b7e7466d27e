import setuptools

setuptools.setup(
    name="pyrds",
    version="0.1.0",
    description="A simulation lab for respondent-driven sampling on attributed networks",
    long_description="""pyrds is a Python package for studying respondent-driven sampling (RDS) by simulation. It generates attributed networks with planted homophily, transforms them (denser, rewired, weighted or directed variants), simulates recruitment chains with realistic participant behaviour and reports the accuracy of the RDS-II and stationary-weighted estimators over many replications.""",
    long_description_content_type='text/markdown',
    packages=["pyrds",],
    python_requires='>=3.8',
    install_requires=['numpy',
        'scipy',
        'pandas>=1.5',
        'tqdm',
        'asdf',
        ],
    extras_require={'test': ['pytest']},
    entry_points={'console_scripts': ['pyrds=pyrds.cli:main']},
 )
