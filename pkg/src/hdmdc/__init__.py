"""Data-driven identification of forced linear surrogates (DMDc, Hankel-DMDc,
Bayesian Hankel-DMDc) with the tooling needed to score and validate them."""

__version__ = "0.1.0"
