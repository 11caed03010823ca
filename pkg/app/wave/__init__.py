# Radial quasilinear wave evolution, oracles and manufactured fields
