"""Pricing and hedging toolkit for a cash/fuel market with proportional
transaction costs and an optional thermal generation asset."""

__version__ = "0.1.0"
