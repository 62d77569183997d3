from setuptools import setup, find_packages

setup(
    name="TariffMenu",
    version="0.1.0",
    description="Exact and approximate solvers for selling a service with two-part tariff menus.",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    license="MIT",
    packages=find_packages(exclude=["tests"]),
    install_requires=[
        "terminaltables",
        "termcolor",
        "questionary",
    ],
    extras_require={
        "test": [
            "pytest",
            "hypothesis",
        ],
    },
    python_requires=">=3.8",
    entry_points={
        "console_scripts": [
            "tariffmenu = tariffmenu.cli:main",
            "tm = tariffmenu.cli:main",
            "tmh = tariffmenu.main_help:main",
        ],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
)
