"""ncerg.expcli のテスト"""
