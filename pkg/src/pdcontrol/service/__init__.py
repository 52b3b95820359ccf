"""HTTP service wrapping the solvers, trainer and benchmark runner."""
