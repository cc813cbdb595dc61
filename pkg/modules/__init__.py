"""Malware Detection Benchmark Modules Package"""
