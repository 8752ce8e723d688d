"""ncerg.rearrangement のテスト"""
