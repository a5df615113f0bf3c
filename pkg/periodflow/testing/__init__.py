"""Helpers shared by the test suite: brute-force oracles and task utilities."""
