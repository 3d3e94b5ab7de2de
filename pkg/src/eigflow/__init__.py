"""Numerical laboratory for the evolution u_t = lambda_j(D^2 u) on bounded convex domains.

Three routes compute the same solutions: the game dynamic programming
principle (:mod:`eigflow.dpp`), an explicit finite-difference scheme
(:mod:`eigflow.fdiff`) and Monte-Carlo play of the underlying game
(:mod:`eigflow.game`).  Envelope oracles (:mod:`eigflow.envelope`) and the
long-time analysis in :mod:`eigflow.asymptotics` check them against each other.
"""

__version__ = "0.1.0"
