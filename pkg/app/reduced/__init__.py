# Geometric reduced system and Hormander comparison models
