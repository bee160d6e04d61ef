"""
setup.py for ClipForge project
"""

from setuptools import setup, find_packages

setup(
    name="clipforge",
    version="1.0.0",
    description="Control-conditioned video editing with key-frame and temporal attention at desk scale",
    packages=find_packages(exclude=["examples", "examples.*"]),
    install_requires=[
        "torch>=2.0.0",
        "numpy>=1.24.0",
        "einops>=0.6.0",
        "tqdm>=4.64.0",
        "pydantic>=2.0.0",
        "pyyaml>=6.0",
        "flask>=2.0.0",
        "flask-cors>=3.0.0",
    ],
    extras_require={
        "test": ["pytest>=7.0.0"],
    },
    python_requires=">=3.9",
    include_package_data=True,
    entry_points={
        'console_scripts': [
            'clipforge=src.cli:main',
        ],
    },
)
