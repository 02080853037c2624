"""Age- and count-dependent transition rate fields and their derived laws.

A :class:`RateModel` holds one rate shape per ordered pair ``(i, j)`` of
distinct states, ``i, j`` in ``1..K``.  Shapes are vectorized: they accept
scalar or array ages ``y`` and counts ``n`` and broadcast.  From the rates
we derive the cumulative hazard ``gamma``, the holding-time cdf/pdf, the
embedded jump probabilities and the semi-Markov kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from .quadrature import QuadratureError, integrate_piecewise

Pair = tuple[int, int]

DEFAULT_TOL = 1e-10


class RateShape(Protocol):
    sup: float
    n_dependent: bool
    breakpoints: tuple[float, ...]

    def __call__(self, y, n): ...


# -- shapes ---------------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    value: float
    n_dependent: bool = field(default=False, init=False)
    breakpoints: tuple[float, ...] = field(default=(), init=False)

    @property
    def sup(self) -> float:
        return float(self.value)

    def __call__(self, y, n):
        return np.broadcast_to(np.float64(self.value), np.broadcast(np.asarray(y), np.asarray(n)).shape)[()]

    def integral(self, y, n):
        return self.value * np.asarray(y, dtype=float)


@dataclass(frozen=True)
class LinearCapped:
    """``min(alpha * y, cap)``."""

    alpha: float
    cap: float
    n_dependent: bool = field(default=False, init=False)

    @property
    def sup(self) -> float:
        return float(self.cap)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.cap / self.alpha,)

    def __call__(self, y, n):
        y = np.asarray(y, dtype=float)
        return (np.minimum(self.alpha * y, self.cap) + np.zeros(np.shape(n)))[()]

    def integral(self, y, n):
        y = np.asarray(y, dtype=float)
        knee = self.cap / self.alpha
        below = 0.5 * self.alpha * y * y
        above = 0.5 * self.cap * knee + self.cap * (y - knee)
        return (np.where(y <= knee, below, above) + np.zeros(np.shape(n)))[()]


@dataclass(frozen=True)
class PowerCapped:
    """``min(alpha * y**power, cap)`` -- a capped Weibull hazard."""

    alpha: float
    power: float
    cap: float
    n_dependent: bool = field(default=False, init=False)

    @property
    def sup(self) -> float:
        return float(self.cap)

    @property
    def knee(self) -> float:
        return (self.cap / self.alpha) ** (1.0 / self.power)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.knee,)

    def __call__(self, y, n):
        y = np.asarray(y, dtype=float)
        return (np.minimum(self.alpha * y**self.power, self.cap) + np.zeros(np.shape(n)))[()]

    def integral(self, y, n):
        y = np.asarray(y, dtype=float)
        k, knee = self.power, self.knee
        below = self.alpha * y ** (k + 1) / (k + 1)
        above = self.alpha * knee ** (k + 1) / (k + 1) + self.cap * (y - knee)
        return (np.where(y <= knee, below, above) + np.zeros(np.shape(n)))[()]


@dataclass(frozen=True)
class CountDecay:
    """``alpha / (1 + n)``: constant in age, slowing with every jump."""

    alpha: float
    n_dependent: bool = field(default=True, init=False)
    breakpoints: tuple[float, ...] = field(default=(), init=False)

    @property
    def sup(self) -> float:
        return float(self.alpha)

    def __call__(self, y, n):
        n = np.asarray(n, dtype=float)
        return (self.alpha / (1.0 + n) + np.zeros(np.shape(y)))[()]

    def integral(self, y, n):
        n = np.asarray(n, dtype=float)
        return (np.asarray(y, dtype=float) * self.alpha / (1.0 + n))[()]


@dataclass(frozen=True)
class StepTable:
    """Right-continuous step function of age, one row of values per count class.

    ``breaks`` starts at 0; value ``values[c][k]`` applies on
    ``[breaks[k], breaks[k+1])`` (the last value extends to infinity) for
    counts ``n`` in ``[count_classes[c], count_classes[c+1])``.
    """

    breaks: tuple[float, ...]
    values: tuple[tuple[float, ...], ...]
    count_classes: tuple[int, ...] = (0,)

    def __post_init__(self):
        if not self.breaks or self.breaks[0] != 0.0:
            raise ValueError("step table breaks must start at 0")
        if any(b1 <= b0 for b0, b1 in zip(self.breaks, self.breaks[1:])):
            raise ValueError("step table breaks must be strictly increasing")
        if not self.count_classes or self.count_classes[0] != 0:
            raise ValueError("count classes must start at 0")
        if len(self.values) != len(self.count_classes):
            raise ValueError("need one value row per count class")
        for row in self.values:
            if len(row) != len(self.breaks):
                raise ValueError("need one value per break in every row")
        vals = np.asarray(self.values, dtype=float)
        widths = np.diff(np.asarray(self.breaks, dtype=float))
        cum = np.zeros_like(vals)
        cum[:, 1:] = np.cumsum(vals[:, :-1] * widths, axis=1)
        object.__setattr__(self, "_vals", vals)
        object.__setattr__(self, "_cum", cum)
        object.__setattr__(self, "_breaks", np.asarray(self.breaks, dtype=float))
        object.__setattr__(self, "_classes", np.asarray(self.count_classes))

    @property
    def sup(self) -> float:
        return float(self._vals.max())

    @property
    def n_dependent(self) -> bool:
        return bool(np.any(self._vals != self._vals[0]))

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(self.breaks[1:])

    def _index(self, y, n):
        y = np.asarray(y, dtype=float)
        n = np.asarray(n)
        c = np.searchsorted(self._classes, n, side="right") - 1
        k = np.searchsorted(self._breaks, y, side="right") - 1
        return y, c, k

    def __call__(self, y, n):
        y, c, k = self._index(y, n)
        return self._vals[c, k][()]

    def integral(self, y, n):
        y, c, k = self._index(y, n)
        return (self._cum[c, k] + self._vals[c, k] * (y - self._breaks[k]))[()]


@dataclass(frozen=True)
class CallableRate:
    """Arbitrary rate callable ``fn(y, n)``; its sup-norm must be given exactly."""

    fn: Callable
    sup_norm: float
    n_dependent: bool = True
    breakpoints: tuple[float, ...] = ()

    @property
    def sup(self) -> float:
        return float(self.sup_norm)

    def __call__(self, y, n):
        if np.ndim(y) == 0 and np.ndim(n) == 0:
            return float(self.fn(float(y), int(n)))
        y_b, n_b = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(n))
        out = np.array([self.fn(float(a), int(b)) for a, b in zip(y_b.ravel(), n_b.ravel())])
        return out.reshape(y_b.shape)


class _Zero:
    sup = 0.0
    n_dependent = False
    breakpoints = ()

    def __call__(self, y, n):
        return np.zeros(np.broadcast(np.asarray(y), np.asarray(n)).shape)[()]

    def integral(self, y, n):
        return self(y, n)


ZERO = _Zero()


# -- model ----------------------------------------------------------------


class RateModel:
    """Finite-state rate field ``lambda_ij(y, n)`` with exact sup-norms.

    ``rates`` maps ``(i, j)`` to a shape; absent pairs are identically zero.
    ``sup_norms`` defaults to the shapes' own exact sup-norms; passing it
    explicitly overrides them (used to exercise invalid layouts).
    """

    def __init__(
        self,
        num_states: int,
        rates: Mapping[Pair, RateShape],
        sup_norms: Sequence[Sequence[float]] | None = None,
        *,
        name: str = "custom",
        quad_tol: float = DEFAULT_TOL,
    ):
        if num_states < 1:
            raise ValueError("num_states must be positive")
        K = num_states
        for i, j in rates:
            if not (1 <= i <= K and 1 <= j <= K) or i == j:
                raise ValueError(f"invalid pair ({i}, {j}) for {K} states")
        self.num_states = K
        self.name = name
        self.quad_tol = quad_tol
        self._shapes = {
            (i, j): rates.get((i, j), ZERO) for i in range(1, K + 1) for j in range(1, K + 1) if i != j
        }
        if sup_norms is None:
            sup = np.zeros((K, K))
            for (i, j), s in self._shapes.items():
                sup[i - 1, j - 1] = s.sup
        else:
            sup = np.array(sup_norms, dtype=float)
            if sup.shape != (K, K):
                raise ValueError(f"sup_norms must be {K}x{K}")
            np.fill_diagonal(sup, 0.0)
        if np.any(sup < 0) or not np.all(np.isfinite(sup)):
            raise ValueError("sup_norms must be finite and nonnegative")
        sup.setflags(write=False)
        self.sup_norms = sup
        self.n_dependent = any(s.n_dependent for s in self._shapes.values())
        self._closed_form = all(hasattr(s, "integral") for s in self._shapes.values())

    def __repr__(self):
        return f"RateModel({self.name!r}, num_states={self.num_states})"

    @property
    def states(self) -> range:
        return range(1, self.num_states + 1)

    def shape(self, i: int, j: int) -> RateShape:
        return self._shapes[(i, j)]

    def rate(self, i: int, j: int, y, n):
        if i == j:
            return 0.0
        return self._shapes[(i, j)](y, n)

    def exit_rate(self, i: int, y, n):
        """``lambda_i(y, n)``, the total rate out of ``i``."""
        total = 0.0
        for j in self.states:
            if j != i:
                total = total + self._shapes[(i, j)](y, n)
        return total

    @property
    def row_bounds(self) -> np.ndarray:
        """``c_i`` for each state (index ``i-1``)."""
        return self.sup_norms.sum(axis=1)

    @property
    def c(self) -> float:
        return float(self.row_bounds.max())

    def breakpoints(self, i: int) -> tuple[float, ...]:
        pts: set[float] = set()
        for j in self.states:
            if j != i:
                pts.update(self._shapes[(i, j)].breakpoints)
        return tuple(sorted(pts))


# -- derived quantities ---------------------------------------------------


def gamma(model: RateModel, i: int, y, n):
    """Cumulative exit hazard ``int_0^y lambda_i(s, n) ds``.

    Exact when every shape carries a closed-form integral (catalog and step
    tables); adaptive Simpson otherwise.
    """
    if np.any(np.asarray(y) < 0):
        raise ValueError("age must be nonnegative")
    if model._closed_form:
        total = 0.0
        for j in model.states:
            if j != i:
                total = total + model.shape(i, j).integral(y, n)
        return total
    if np.ndim(y) or np.ndim(n):
        y_b, n_b = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(n))
        out = [_gamma_quad(model, i, float(a), int(b)) for a, b in zip(y_b.ravel(), n_b.ravel())]
        return np.array(out).reshape(y_b.shape)
    return _gamma_quad(model, i, float(y), int(n))


def _gamma_quad(model: RateModel, i: int, y: float, n: int) -> float:
    try:
        return integrate_piecewise(
            lambda s: float(model.exit_rate(i, s, n)), 0.0, y, model.breakpoints(i), model.quad_tol
        )
    except QuadratureError as exc:
        raise QuadratureError(f"gamma(i={i}, n={n}, y={y}): {exc}") from None


def holding_survival(model: RateModel, i: int, y, n):
    """``1 - F(y | i, n) = exp(-gamma)``, computed without cancellation."""
    return np.exp(-np.asarray(gamma(model, i, y, n)))[()]


def holding_cdf(model: RateModel, i: int, y, n):
    return (-np.expm1(-np.asarray(gamma(model, i, y, n))))[()]


def holding_pdf(model: RateModel, i: int, y, n):
    return (np.asarray(model.exit_rate(i, y, n)) * holding_survival(model, i, y, n))[()]


def embedded_probs(model: RateModel, i: int, y: float, n: int) -> np.ndarray:
    """Row ``p_i.(y, n)`` of jump-target probabilities (index ``j-1``).

    A state with zero exit rate at ``(y, n)`` gets the degenerate row
    ``p_ii = 1``.
    """
    row = np.array([float(model.rate(i, j, y, n)) for j in model.states])
    total = row.sum()
    if total > 0:
        return row / total
    row[i - 1] = 1.0
    return row


def kernel(model: RateModel, i: int, j: int, y: float, n: int) -> float:
    """``Q_ij(y, n) = int_0^y exp(-gamma_i(s, n)) lambda_ij(s, n) ds``."""
    if i == j:
        raise ValueError("kernel is defined for i != j")
    if y < 0:
        raise ValueError("age must be nonnegative")
    shape = model.shape(i, j)

    def integrand(s: float) -> float:
        return float(shape(s, n)) * math.exp(-float(gamma(model, i, s, n)))

    try:
        return integrate_piecewise(integrand, 0.0, float(y), model.breakpoints(i), model.quad_tol)
    except QuadratureError as exc:
        raise QuadratureError(f"kernel(i={i}, j={j}, n={n}, y={y}): {exc}") from None


def rate_identity_residual(model: RateModel, i: int, j: int, y: float, n: int) -> float:
    """``p_ij * f / (1 - F) - lambda_ij``; zero for ``i == j`` by definition."""
    if i == j:
        return 0.0
    p = embedded_probs(model, i, y, n)[j - 1]
    hazard = float(holding_pdf(model, i, y, n)) / float(holding_survival(model, i, y, n))
    return p * hazard - float(model.rate(i, j, y, n))


# -- validation -----------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    assumption: str
    i: int
    j: int | None
    y: float | None
    n: int | None
    detail: str


@dataclass
class ValidationReport:
    violations: list[Violation]
    row_bounds: tuple[float, ...]
    c: float

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "c": self.c,
            "row_bounds": list(self.row_bounds),
            "violations": [v.__dict__ for v in self.violations],
        }


def validate(
    model: RateModel,
    y_check: float = 10.0,
    gamma_min: float = 1.0,
    *,
    counts: Sequence[int] = tuple(range(6)),
    grid_points: int = 201,
) -> ValidationReport:
    """Check that rates are bounded and that every exit hazard diverges.

    Rates are probed on an age grid over ``[0, y_check]`` (plus every shape
    breakpoint) for each count in ``counts`` (only the first when no rate
    depends on the count).  Violations are returned as
    data with the first offending witness per pair.
    """
    violations: list[Violation] = []
    if not model.n_dependent:
        counts = tuple(counts)[:1]
    sup = model.sup_norms
    bounds = model.row_bounds
    if not np.isfinite(bounds).all():
        violations.append(Violation("bounded", 0, None, None, None, "row bound c_i is not finite"))
    for i in model.states:
        ys = np.union1d(np.linspace(0.0, y_check, grid_points), [b for b in model.breakpoints(i) if b <= y_check])
        for j in model.states:
            if j == i:
                continue
            s = sup[i - 1, j - 1]
            for n in counts:
                vals = np.asarray(model.rate(i, j, ys, n), dtype=float)
                bad = np.flatnonzero(~(vals >= 0))
                if bad.size:
                    k = bad[0]
                    violations.append(
                        Violation("bounded", i, j, float(ys[k]), n, f"negative rate {float(vals[k]):.6g}")
                    )
                    break
                over = np.flatnonzero(vals > s)
                if over.size:
                    k = over[0]
                    violations.append(
                        Violation("bounded", i, j, float(ys[k]), n, f"rate {float(vals[k]):.6g} exceeds sup-norm {float(s):.6g}")
                    )
                    break
        for n in counts:
            g = float(gamma(model, i, y_check, n))
            if not g > gamma_min:
                violations.append(
                    Violation("divergent", i, None, y_check, n, f"gamma={float(g):.6g} does not exceed {float(gamma_min):.6g}")
                )
    return ValidationReport(violations, tuple(float(b) for b in bounds), float(bounds.max()))
