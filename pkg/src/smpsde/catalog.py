"""Built-in rate models satisfying the boundedness and divergence assumptions."""

from __future__ import annotations

from typing import Callable

from .rates import Constant, CountDecay, LinearCapped, PowerCapped, RateModel


def ctmc2(rate12: float = 2.0, rate21: float = 3.0) -> RateModel:
    """Two-state continuous-time Markov chain."""
    return RateModel(2, {(1, 2): Constant(rate12), (2, 1): Constant(rate21)}, name="ctmc2")


def ctmc3(
    rates: dict | None = None,
) -> RateModel:
    """Three-state continuous-time Markov chain."""
    table = {(1, 2): 2.0, (1, 3): 1.0, (2, 1): 1.0, (2, 3): 2.0, (3, 1): 1.5, (3, 2): 0.5}
    if rates:
        table.update({_pair(k): v for k, v in rates.items()})
    return RateModel(3, {p: Constant(v) for p, v in table.items()}, name="ctmc3")


def agelinear(alpha: float = 1.0, cap: float = 2.0) -> RateModel:
    """Two states, each leaving at ``min(alpha*y, cap)``."""
    shape = LinearCapped(alpha, cap)
    return RateModel(2, {(1, 2): shape, (2, 1): shape}, name="agelinear")


def weibull3(alpha: float = 1.0, power: float = 2.0, cap: float = 3.0, back: float = 0.5) -> RateModel:
    """Three-state cycle: forward at a capped Weibull hazard, backward at a constant rate.

    The forward/backward split varies with age, so the embedded jump
    probabilities are genuinely age dependent.
    """
    fwd = PowerCapped(alpha, power, cap)
    bwd = Constant(back)
    return RateModel(
        3,
        {(1, 2): fwd, (2, 3): fwd, (3, 1): fwd, (1, 3): bwd, (2, 1): bwd, (3, 2): bwd},
        name="weibull3",
    )


def ndecay(alpha12: float = 2.0, alpha21: float = 3.0) -> RateModel:
    """Two-state chain whose rates decay as ``alpha / (1 + n)`` with the jump count."""
    return RateModel(2, {(1, 2): CountDecay(alpha12), (2, 1): CountDecay(alpha21)}, name="ndecay")


def split4(rate: float = 2.0, alpha: float = 1.0, cap: float = 2.0) -> RateModel:
    """Two non-communicating blocks ``{1, 2}`` and ``{3, 4}``.

    Paths started in different blocks never share a state, so their
    acceptance intervals never overlap.
    """
    lin = LinearCapped(alpha, cap)
    return RateModel(
        4,
        {(1, 2): Constant(rate), (2, 1): lin, (3, 4): lin, (4, 3): Constant(rate)},
        name="split4",
    )


CATALOG: dict[str, Callable[..., RateModel]] = {
    "ctmc2": ctmc2,
    "ctmc3": ctmc3,
    "agelinear": agelinear,
    "weibull3": weibull3,
    "ndecay": ndecay,
    "split4": split4,
}


def build(name: str, **params) -> RateModel:
    try:
        factory = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown catalog model {name!r}; choose from {sorted(CATALOG)}") from None
    return factory(**params)


def _pair(key) -> tuple[int, int]:
    if isinstance(key, str):
        a, b = key.replace("-", ",").split(",")
        return int(a), int(b)
    return int(key[0]), int(key[1])
