"""
Interleaved training and feedback simulator - Main package
"""
