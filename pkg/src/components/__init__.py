"""
Channel model, quantizers, schemes, closed forms and the Monte Carlo engine
"""
