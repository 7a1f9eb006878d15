"""
Numeric - Noyau numérique (tenseurs numpy, couches, gradients)
"""
