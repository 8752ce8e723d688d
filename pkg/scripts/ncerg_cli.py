#!/usr/bin/env python3
"""
ncerg CLI launcher

インストールせずにリポジトリから ncerg CLI を実行するためのラッパー
"""

import sys
from pathlib import Path

# プロジェクトルートをPythonパスに追加
sys.path.insert(0, str(Path(__file__).parent.parent))

from ncerg.expcli.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
