"""ncerg.kernels のテスト"""
