"""
Numerical lab for the critical Fujita exponent of u_t - u_xx + V u = <x>^{-m} u^p.
"""
