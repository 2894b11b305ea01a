"""
etaspec：伪厄米哈密顿量的物理 Hilbert 空间、可观测量与等价厄米哈密顿量的数值工具
"""
__version__ = "0.1.0"
