"""Verifiable exponential-mechanism median estimation."""
