"""First-passage times of Brownian motion to convex moving boundaries."""
