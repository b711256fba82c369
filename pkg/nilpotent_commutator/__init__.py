"""Nilpotent matrices written as single commutators `A = BC − CB`."""
