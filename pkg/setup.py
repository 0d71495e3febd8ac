#!/usr/bin/env python3
"""
mondcli 安装脚本
"""

from setuptools import find_packages, setup

setup(
    name="mondcli",
    version="0.1.0",
    description="MOND Vlasov-Poisson / Euler-Poisson 稳态求解与校验 CLI",
    packages=find_packages(exclude=["tests", "tests.*"]),
    python_requires=">=3.10",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.10",
        "rich>=13.0",
        "mcp>=1.0,<2.0",
    ],
    entry_points={
        "console_scripts": [
            "mondcli=mondcli.cli:main",
            "mondcli-mcp=mondcli.mcp_server:main",
        ],
    },
)
