"""Container for multiple-reflection expansions."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["ReflectionSeries"]


@dataclass(frozen=True)
class ReflectionSeries:
    """Energy contributions of the terms ``-(1/n) tr N^n``.

    ``orders[k]`` is the electromagnetic contribution of ``k + 1``
    reflections, the sum of the Dirichlet and Neumann entries.
    """

    orders: tuple
    partial_sums: tuple
    errors: tuple = ()
    dirichlet: tuple = ()
    neumann: tuple = ()
    converged: bool = True
    space_dimension: int = field(default=3, init=False)

    @classmethod
    def from_polarized(cls, dirichlet, neumann, errors=None, converged=True):
        d = np.asarray(dirichlet, dtype=float)
        n = np.asarray(neumann, dtype=float)
        total = d + n
        errs = np.zeros_like(total) if errors is None else np.asarray(errors, dtype=float)
        return cls(tuple(total.tolist()), tuple(np.cumsum(total).tolist()),
                   tuple(errs.tolist()), tuple(d.tolist()), tuple(n.tolist()), bool(converged))

    def order(self, n: int) -> float:
        """Contribution of ``n`` reflections, 1-based."""
        return self.orders[n - 1]

    def ratios(self) -> np.ndarray:
        """``orders[n] / orders[1]``."""
        o = np.asarray(self.orders)
        return o / o[0]
