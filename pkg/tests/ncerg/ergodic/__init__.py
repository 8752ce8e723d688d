"""ncerg.ergodic のテスト"""
