"""
子图模块
"""
