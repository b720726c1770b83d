"""
Mathematical modules: domains, Remez constants, rigidity, extrema and level sets
"""
