"""Random-matrix core: MP law, samplers, ensembles, Green functions, TW1 and statistics."""
