"""Multi-objective symbolic regression over expression trees.

Evolves prediction models that trade off dataset RMSE against tree size,
using either decomposition (weighted-worst-deviation subproblems) or
Pareto-rank selection, next to a single-objective baseline, over a
diurnal/seasonal/solar-index feature encoding.
"""

__version__ = "0.1.0"
