"""Labelled seed derivation so each subsystem draws from its own stream."""

import hashlib

import numpy as np


def derive_seed(master, label):
    """Stable 63-bit seed from a master seed and a text label."""
    digest = hashlib.sha256(f"{int(master)}/{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def rng_for(master, label):
    return np.random.default_rng(derive_seed(master, label))
