from setuptools import setup, find_packages

setup(
    name="pxlab",
    version="0.3.0",
    description="pxlab - Numerical lab for the normalized p(x)-Laplacian eigenvalue problem.",
    package_dir={'': 'src'},
    packages=find_packages(where='src'),
    python_requires=">=3.8",
    entry_points={
        'console_scripts': [
            'pxlab=pxlab.commands.command_line:main',
            'pxlab-app=pxlab.commands.app:main',
        ],
    },
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
        "sympy>=1.10",
        "rich>=12.0.0",
        "questionary>=1.10.0",
        "pyfiglet>=0.8.post1",
        "python-dotenv>=0.19.0",
    ],
    extras_require={
        'test': [
            'pytest>=7.0',
        ],
    },
)
