"""ncerg パッケージのテスト"""
