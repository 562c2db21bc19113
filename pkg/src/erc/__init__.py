"""Experience-replay stabilization for on-policy actor-critic: discriminator, counteraction and mining."""

__version__ = "0.1.0"
