"""Utilities: categorical encoding helpers."""
