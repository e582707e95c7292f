"""Tests for core.utils."""
