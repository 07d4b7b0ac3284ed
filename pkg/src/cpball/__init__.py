"""Numerical laboratory for completely positive functions on balls of involutive algebras."""
