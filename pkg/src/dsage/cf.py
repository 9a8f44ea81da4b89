"""Certainty-factor arithmetic for combining uncertain evidence.

Confidence values live in the closed unit interval [0, 1]. Four operations
cover everything the advisory engine needs:

* ``aggregate_and`` / ``aggregate_or`` reduce the confidences of a rule's
  matched premises: minimum for a conjunctive premise set, maximum for a
  disjunctive one.
* ``fire`` scales a rule's expert confidence by the premise confidence.
* ``combine`` merges independent contributions to the same conclusion via
  the parallel-evidence update ``a + (1 - a) * b``, algebraically equal to
  ``1 - (1 - a) * (1 - b)``.

``combine`` is commutative and associative with identity 0 and absorbing
element 1, so the result of merging any number of contributions does not
depend on the order in which they arrive. All functions are pure.
"""

from __future__ import annotations

from collections.abc import Iterable

__all__ = [
    "CertaintyFactor",
    "aggregate_and",
    "aggregate_or",
    "combine",
    "combine_all",
    "fire",
]


class CertaintyFactor(float):
    """A confidence value constrained to [0.0, 1.0].

    Behaves as a plain float in arithmetic; construction outside the unit
    interval (including NaN) raises ``ValueError``.
    """

    __slots__ = ()

    def __new__(cls, value: float) -> "CertaintyFactor":
        v = float(value)
        if not 0.0 <= v <= 1.0:  # comparison is False for NaN as well
            raise ValueError(f"certainty factor must lie in [0, 1], got {value!r}")
        return super().__new__(cls, v)

    def __repr__(self) -> str:
        return f"CertaintyFactor({float.__repr__(self)})"


def _unit(value: float) -> CertaintyFactor:
    # Guards against the last-ulp spill of intermediate rounding; inputs are
    # already domain-checked, so clamping never moves a value materially.
    if value < 0.0:
        value = 0.0
    elif value > 1.0:
        value = 1.0
    return CertaintyFactor(value)


def combine(old: float, new: float) -> CertaintyFactor:
    """Merge two independent confidences in the same conclusion.

    Returns ``old + (1 - old) * new``: the prior confidence plus the share
    of remaining doubt removed by the new evidence.
    """
    old_cf = CertaintyFactor(old)
    new_cf = CertaintyFactor(new)
    return _unit(old_cf + (1.0 - old_cf) * new_cf)


def combine_all(cfs: Iterable[float]) -> CertaintyFactor:
    """Fold :func:`combine` over ``cfs``, starting from the identity 0."""
    total = CertaintyFactor(0.0)
    for cf in cfs:
        total = combine(total, cf)
    return total


def aggregate_and(cfs: Iterable[float]) -> CertaintyFactor:
    """Confidence of a conjunctive premise set: the minimum element."""
    values = [CertaintyFactor(cf) for cf in cfs]
    if not values:
        raise ValueError("cannot aggregate an empty premise set (rule with no premises)")
    return min(values)


def aggregate_or(cfs: Iterable[float]) -> CertaintyFactor:
    """Confidence of a disjunctive premise set: the maximum element."""
    values = [CertaintyFactor(cf) for cf in cfs]
    if not values:
        raise ValueError("cannot aggregate an empty premise set (rule with no premises)")
    return max(values)


def fire(rule_cf: float, premise_cf: float) -> CertaintyFactor:
    """Confidence contributed by one rule: expert confidence times premise confidence."""
    return _unit(CertaintyFactor(rule_cf) * CertaintyFactor(premise_cf))
