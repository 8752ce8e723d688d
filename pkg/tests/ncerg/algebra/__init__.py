"""ncerg.algebra のテスト"""
