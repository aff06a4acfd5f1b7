"""
Experiment scripts, one per command of app.py
"""
