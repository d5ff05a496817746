"""Covert-rate analysis of a two-hop relay network with cooperative jamming.

Closed-form detection and outage metrics for random (RRS) and max-min
(MMRS) relay selection, Monte Carlo oracles for each of them, and a
covert-rate optimizer over the transmit power.
"""

__version__ = "0.1.0"
