"""
Configuration and logging for the simulator
"""
