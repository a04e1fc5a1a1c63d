"""数据模型与持久化"""
