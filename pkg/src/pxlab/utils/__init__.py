# Shared helpers: console output, root bracketing, tanh-sinh quadrature
