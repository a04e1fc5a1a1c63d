"""独立实现的测试对照"""
