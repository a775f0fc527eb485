# Test package for the Galton-Watson lab
