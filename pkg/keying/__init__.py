# Keying module
