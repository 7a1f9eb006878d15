"""
Harness - Interface en ligne de commande et manifestes de reproductibilité
"""
