"""DOPO quantum battery simulator."""
