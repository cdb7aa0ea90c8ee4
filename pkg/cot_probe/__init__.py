"""Perturbation engine and evaluation harness for reasoning-chain answer extraction."""
