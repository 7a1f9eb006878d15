"""
DataIO - Chargement MNIST / CIFAR-10 et données synthétiques
"""
