"""Malware Detection Benchmark Utilities Package"""
