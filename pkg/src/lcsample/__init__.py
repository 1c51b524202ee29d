"""Log-concave sampling with Renyi-divergence accounting and an exact Gaussian oracle."""

__version__ = "0.1.0"
