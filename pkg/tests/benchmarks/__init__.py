"""
Performance Benchmarks
Runtime bounds for the acceptance workloads
"""
