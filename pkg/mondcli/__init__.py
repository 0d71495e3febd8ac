"""
mondcli - MOND 球对称稳态构造与验证 CLI 工具
"""

__version__ = "0.1.0"
