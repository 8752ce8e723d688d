"""
ncerg - Non-Commutative ERGodic laboratory

有限トレース付き行列環上の対称空間と Dunford-Schwartz 核のエルゴード定理を
数値的に検証するためのパッケージ
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
