"""
ncerg Tests Module - テストスイート

このモジュールは ncerg の各パッケージのテストを提供します：
- algebra - ブロック行列環・スペクトル計算
- rearrangement - 再配列と対称ノルム
- kernels - Dunford-Schwartz 核
- ergodic - Cesàro 平均と射影による証拠
- expcli - 設定・実行・出力
"""

__version__ = "0.1.0"
