"""
Attacks - Attaques par gradient sous contrainte L∞
"""
