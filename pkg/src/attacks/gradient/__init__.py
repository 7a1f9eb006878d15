"""
Gradient - Attaques boîte blanche (FGSM, PGD, CW-PGD)
"""
