"""
Adaptive - Attaques adaptatives contre les défenses aléatoires (EOT)
"""
