# Characteristics from H and the optical function
