"""Ethical vectors over a deployment-declared axis list.

A deployment declares an ordered list of named axes (for example privacy,
transparency, safety); each policy states its stance as coordinates over
those axes, normalized to unit Euclidean length. Pairwise dot products of
these vectors drive conflict classification: -1 is complete opposition,
+1 full agreement.

Axes may carry context tags. An axis with tags only counts in contexts
that share one of them, which is how conditional (context-dependent)
opposition is modeled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .errors import AxisMismatch, GuardgateError

UNIT_NORM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Axis:
    name: str
    tags: frozenset[str] = frozenset()


@dataclass(frozen=True)
class AxisSpace:
    """Ordered axis declaration shared by every vector in a deployment."""

    axes: tuple[Axis, ...]

    def __post_init__(self):
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise GuardgateError("axis names must be unique")
        if len(names) < 2:
            raise GuardgateError("a deployment needs at least 2 axes")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    def activation_mask(self, context: frozenset[str]) -> tuple[float, ...]:
        """1.0 for axes counting in this context, 0.0 for masked-out axes.

        An axis with no declared tags always counts; a tagged axis counts
        only when the context shares one of its tags. The universal (empty)
        context carries no narrowing information, so nothing is masked
        there - conditional opposition only shows up in specific contexts.
        """
        if not context:
            return (1.0,) * len(self.axes)
        return tuple(
            1.0 if not a.tags or a.tags & context else 0.0 for a in self.axes
        )

    @classmethod
    def plain(cls, *names: str) -> AxisSpace:
        return cls(axes=tuple(Axis(name=n) for n in names))


@dataclass(frozen=True)
class EthicalVector:
    """Unit vector over the deployment's axes."""

    axes: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.axes) != len(self.values):
            raise GuardgateError("axis list and value list differ in length")
        if len(self.axes) < 2:
            raise GuardgateError("ethical vectors need dimension >= 2")
        norm = math.sqrt(sum(v * v for v in self.values))
        if abs(norm - 1.0) > UNIT_NORM_TOLERANCE:
            raise GuardgateError(f"ethical vector norm {norm!r} is not 1 within 1e-9")

    @classmethod
    def unit(cls, axes: Sequence[str], values: Sequence[float]) -> EthicalVector:
        """Normalize arbitrary coordinates into a unit vector."""
        norm = math.sqrt(sum(v * v for v in values))
        if norm == 0.0:
            raise GuardgateError("cannot normalize the zero vector")
        return cls(axes=tuple(axes), values=tuple(v / norm for v in values))

    @classmethod
    def from_mapping(cls, space: AxisSpace, coords: Mapping[str, float]) -> EthicalVector:
        """Build from an axis-name -> coordinate mapping; missing axes are 0."""
        unknown = set(coords) - set(space.names)
        if unknown:
            raise GuardgateError(f"unknown axes in vector: {sorted(unknown)}")
        return cls.unit(space.names, [coords.get(n, 0.0) for n in space.names])

    def masked(self, mask: Sequence[float]) -> Optional[EthicalVector]:
        """Apply an activation mask and renormalize.

        Returns None when every surviving component is zero. When the mask
        changes nothing the vector is returned as-is (no renormalization
        noise).
        """
        if len(mask) != len(self.values):
            raise AxisMismatch("mask length does not match vector dimension")
        if all(m == 1.0 for m in mask):
            return self
        scaled = [v * m for v, m in zip(self.values, mask)]
        norm = math.sqrt(sum(v * v for v in scaled))
        if norm == 0.0:
            return None
        return EthicalVector(axes=self.axes, values=tuple(v / norm for v in scaled))


def dot(a: EthicalVector, b: EthicalVector) -> float:
    """Inner product of two vectors sharing one axis list."""
    if a.axes != b.axes:
        raise AxisMismatch(f"axis lists differ: {a.axes} vs {b.axes}")
    return sum(x * y for x, y in zip(a.values, b.values))
