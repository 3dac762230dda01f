"""
Test suite for camforge
"""
