"""Integration tests driving the lclab command line."""
