"""
Integration Tests
Corpus-level refinement and sweep runs
"""
