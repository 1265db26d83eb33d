"""Exception types raised by the solvers and the model layer."""

from __future__ import annotations

__all__ = [
    "NomaMecError",
    "NomaOrderViolated",
    "ZeroSlot",
    "BitOverflow",
    "NoBracket",
    "MaxIters",
    "Infeasible",
    "CaseInfeasible",
    "AllInfeasible",
]


class NomaMecError(Exception):
    """Base class for every error raised by this package."""


class NomaOrderViolated(NomaMecError, ValueError):
    """The user-helper CGNR is below the user-AP CGNR while cooperation is requested."""


class ZeroSlot(NomaMecError, ValueError):
    """A slot of zero duration was asked to carry a nonzero number of bits."""


class BitOverflow(NomaMecError, ValueError):
    """Offloaded bits exceed the task size they are taken from."""


class NoBracket(NomaMecError, ValueError):
    """Strict bisection was called on an interval without a sign change."""


class MaxIters(NomaMecError, RuntimeError):
    """An iterative routine hit its iteration cap before converging."""


class Infeasible(NomaMecError):
    """No allocation satisfies the latency and capacity constraints."""


class CaseInfeasible(NomaMecError):
    """One candidate case of the data-maximization problem has an empty domain."""


class AllInfeasible(NomaMecError):
    """Every point of an oracle mesh violates some constraint."""
