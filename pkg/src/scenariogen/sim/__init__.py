"""Simulator backends: the built-in kinematic world and the external bridge."""
