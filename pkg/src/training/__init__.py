"""
Training - Entraînement standard et adversarial des sous-modèles
"""
