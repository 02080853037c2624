"""Adaptive Simpson quadrature with absolute error control."""

from __future__ import annotations

import math
from typing import Callable, Iterable


class QuadratureError(RuntimeError):
    pass


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_depth: int = 40,
) -> float:
    """Integrate ``f`` over ``[a, b]`` to absolute tolerance ``tol``.

    Raises :class:`QuadratureError` if some subinterval still fails the
    Richardson test at ``max_depth``.
    """
    if b == a:
        return 0.0
    if b < a:
        return -adaptive_simpson(f, b, a, tol, max_depth)
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _refine(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _refine(f, a, b, fa, fm, fb, whole, tol, depth):
    # explicit stack keeps deep refinements off the Python call stack
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, depth)]
    while stack:
        a, b, fa, fm, fb, whole, tol, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        # floor the tolerance at rounding level so smooth integrands terminate
        floor = 4.0 * math.ulp(max(abs(left), abs(right), 1e-300))
        if abs(delta) <= 15.0 * max(tol, floor):
            total += left + right + delta / 15.0
            continue
        if depth <= 0:
            raise QuadratureError(
                f"adaptive Simpson did not converge on [{a!r}, {b!r}] (residual {abs(delta):.3g})"
            )
        stack.append((m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))
        stack.append((a, m, fa, flm, fm, left, 0.5 * tol, depth - 1))
    return total


def integrate_piecewise(
    f: Callable[[float], float],
    a: float,
    b: float,
    breakpoints: Iterable[float] = (),
    tol: float = 1e-10,
    max_depth: int = 40,
) -> float:
    """Integrate over ``[a, b]``, splitting at any breakpoints inside it.

    The tolerance is shared evenly between the pieces.
    """
    cuts = sorted({x for x in breakpoints if a < x < b})
    edges = [a, *cuts, b]
    pieces = len(edges) - 1
    return math.fsum(
        adaptive_simpson(f, lo, hi, tol / pieces, max_depth)
        for lo, hi in zip(edges[:-1], edges[1:])
    )
