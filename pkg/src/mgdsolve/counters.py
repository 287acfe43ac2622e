from collections import Counter
from dataclasses import dataclass, field

__all__ = ["OperationCounters"]

_SCALARS = ("matrix_inverse", "matvec", "hadamard", "vector_update", "matrix_update")


@dataclass
class OperationCounters:
    """Tallies of the block-level operations a preconditioner performs.

    ``matrix_inverse`` counts approximate block inverse applications,
    ``matvec`` sparse block products, ``hadamard`` elementwise vector
    products (diagonal coupling actions), ``vector_update`` vector sums and
    differences, and ``matrix_update`` in-place matrix modifications.
    ``inner_cycles`` maps a block label to the Jacobi sweeps or V-cycles
    spent inside its inverses.
    """

    matrix_inverse: int = 0
    matvec: int = 0
    hadamard: int = 0
    vector_update: int = 0
    matrix_update: int = 0
    inner_cycles: Counter = field(default_factory=Counter)

    def reset(self):
        for name in _SCALARS:
            setattr(self, name, 0)
        self.inner_cycles = Counter()

    def merge(self, other):
        for name in _SCALARS:
            setattr(self, name, getattr(self, name) + getattr(other, name))
        self.inner_cycles.update(other.inner_cycles)
        return self

    @property
    def inner_cycles_total(self):
        return sum(self.inner_cycles.values())

    def snapshot(self):
        out = {name: getattr(self, name) for name in _SCALARS}
        out["inner_cycles"] = dict(sorted(self.inner_cycles.items()))
        return out
