# Null frames, chi and Raychaudhuri diagnostics along characteristics
