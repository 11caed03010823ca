# Asymptotic coordinates, limit fits and scattering data
