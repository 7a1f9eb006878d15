"""
Defense - Commutation aléatoire de modèles entraînés adversarialement
"""
