# Metric families g^{ab}(u) and their geometry
