"""
Core - Composants centraux (UI, utilitaires, erreurs)
"""
