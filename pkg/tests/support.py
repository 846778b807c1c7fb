"""Shared test constructors for conflict-resolution scenarios."""

import math

from guardgate.conflicts import GuardrailHandle
from guardgate.vectors import Axis, AxisSpace, EthicalVector


def pair_with_context_dots(dots, weight_a=1.0, weight_b=1.0, priority_a=1, priority_b=2):
    """Build a guardrail pair whose context-wise dot products are ``dots``.

    Uses one dedicated axis block (x_k, y_k) per context, tagged with that
    context's tag, so masking to context k leaves exactly the k-th block:
    A reduces to (1, 0) and B to (d_k, sqrt(1 - d_k^2)), giving dot d_k.
    The universal context sees the full vectors, whose dot is the mean of
    the per-context dots (always inside [min, max], so it never changes
    the classification).

    Returns (a, b, contexts, axis_space); contexts[0] is the universal one.
    """
    k = len(dots)
    axes = []
    for i in range(k):
        tag = frozenset({f"c{i}"})
        axes.append(Axis(name=f"x{i}", tags=tag))
        axes.append(Axis(name=f"y{i}", tags=tag))
    space = AxisSpace(axes=tuple(axes))
    scale = 1.0 / math.sqrt(k)

    a_values = []
    b_values = []
    for d in dots:
        a_values += [scale, 0.0]
        b_values += [d * scale, math.sqrt(max(0.0, 1.0 - d * d)) * scale]

    names = space.names
    a = GuardrailHandle(
        policy_id="A",
        base_vector=EthicalVector(axes=names, values=tuple(a_values)),
        weight=weight_a,
        priority=priority_a,
    )
    b = GuardrailHandle(
        policy_id="B",
        base_vector=EthicalVector(axes=names, values=tuple(b_values)),
        weight=weight_b,
        priority=priority_b,
    )
    contexts = [frozenset()] + [frozenset({f"c{i}"}) for i in range(k)]
    return a, b, contexts, space


def expected_case_kind(dots, eps=1e-6, theta=-0.8):
    """Independent classification oracle over the nominal per-context dots."""
    lo, hi = min(dots), max(dots)
    if hi <= -1.0 + eps:
        return "case1"
    if lo <= -1.0 + eps:
        return "case3"
    if hi <= theta:
        return "case2"
    if lo <= theta:
        return "case4"
    return "no-conflict"


def plain_handle(policy_id, values, weight=1.0, priority=0, tags=(), axes=None):
    """Untagged-axis guardrail over a shared plain axis space."""
    names = axes or tuple(f"a{i}" for i in range(len(values)))
    return GuardrailHandle(
        policy_id=policy_id,
        base_vector=EthicalVector.unit(names, values),
        weight=weight,
        priority=priority,
        context_tags=frozenset(tags),
    )
