"""
Evaluation - Taux de succès, précision, balayages et rapports
"""
