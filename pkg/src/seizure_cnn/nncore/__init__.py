"""Minimal numpy neural-network core: layers, loss and optimizer."""
