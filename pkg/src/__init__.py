"""
AdvMS - Package principal
"""
