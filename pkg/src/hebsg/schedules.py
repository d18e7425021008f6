"""Stepsize rules ``k -> alpha_k`` (k >= 1), each built from its defining parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from hebsg.core import HebParams

KINDS = (
    "constant",
    "polynomial",
    "optimal_polynomial",
    "fixed_eps_constant",
    "harmonic_qg",
    "karimi_qg",
    "shor_geometric",
)


@dataclass(frozen=True)
class StepsizeSchedule:
    """An immutable stepsize rule.

    ``params`` always holds the numbers needed to evaluate the rule; the
    originating inputs (``eps``, ``heb`` ...) are kept alongside for
    reporting and serialization.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    def __call__(self, k: int) -> float:
        if k < 1:
            raise ValueError("iterations are numbered from 1")
        p = self.params
        if self.kind in ("constant", "fixed_eps_constant"):
            return p["alpha"]
        if self.kind in ("polynomial", "optimal_polynomial"):
            return p["alpha1"] * k ** (-p["p"])
        if self.kind == "harmonic_qg":
            return p["alpha1"] / k
        if self.kind == "karimi_qg":
            return (2 * k + 1) / (2.0 * p["c"] * (k + 1) ** 2)
        # shor_geometric
        return p["alpha1"] * p["q"] ** (k - 1)

    def label(self) -> str:
        p = self.params
        if self.kind in ("constant", "fixed_eps_constant"):
            return f"alpha={p['alpha']:g}"
        if self.kind in ("polynomial", "optimal_polynomial"):
            return f"alpha={p['alpha1']:g}k^-{p['p']:g}"
        if self.kind == "harmonic_qg":
            return f"alpha={p['alpha1']:g}/k"
        if self.kind == "karimi_qg":
            return f"karimi(c={p['c']:g})"
        return f"shor(q={p['q']:.4g})"

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, d: dict) -> "StepsizeSchedule":
        d = dict(d)
        return cls(d.pop("kind"), d)


def constant(alpha: float) -> StepsizeSchedule:
    if not alpha > 0:
        raise ValueError(f"constant stepsize must be positive, got {alpha}")
    return StepsizeSchedule("constant", {"alpha": float(alpha)})


def fixed_eps_constant(eps: float, heb: HebParams) -> StepsizeSchedule:
    """Constant ``alpha = 2 c eps^(1/(2 theta)) / G^2``, which makes the noise floor equal ``eps``."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    alpha = 2.0 * heb.c * eps ** (1.0 / (2.0 * heb.theta)) / heb.G ** 2
    return StepsizeSchedule("fixed_eps_constant", {"alpha": alpha, "eps": eps})


def polynomial(alpha1: float, p: float) -> StepsizeSchedule:
    if not alpha1 > 0:
        raise ValueError(f"alpha1 must be positive, got {alpha1}")
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    return StepsizeSchedule("polynomial", {"alpha1": float(alpha1), "p": float(p)})


@dataclass(frozen=True)
class OptimalDecayParams:
    p: float
    alpha1: float
    k_start: int
    rate_constant: float


def optimal_decay_params(heb: HebParams) -> OptimalDecayParams:
    theta = heb.theta
    if not 0 < theta < 1:
        raise ValueError("optimal polynomial decay needs theta < 1 (use shor_geometric for theta = 1)")
    p = 1.0 / (2.0 * (1.0 - theta))
    r = theta / (1.0 - theta)
    alpha1 = (heb.c / heb.G ** 2) * (r * heb.kappa ** 2) ** p
    k_start = math.ceil(2.0 * r - 1e-12) if theta >= 0.5 else 2
    rate_constant = r ** r * heb.kappa ** (2.0 * r)
    return OptimalDecayParams(p, alpha1, k_start, rate_constant)


def optimal_polynomial(heb: HebParams):
    """``alpha_k = alpha1 k^-p`` with ``p = 1/(2(1-theta))`` and ``alpha1 = (c/G^2)(theta kappa^2/(1-theta))^p``.

    Returns the schedule and its :class:`OptimalDecayParams`; the claimed rate
    is ``e_k <= rate_constant * k^(-theta/(1-theta))`` for ``k >= k_start``.
    """
    od = optimal_decay_params(heb)
    sched = StepsizeSchedule("optimal_polynomial", {"alpha1": od.alpha1, "p": od.p})
    return sched, od


def shor_geometric(heb: HebParams, d1_bound: float) -> StepsizeSchedule:
    """Geometric stepsize ``alpha_k = sqrt(d1_bound)/(G kappa) q^(k-1)``, ``q = sqrt(1 - 1/kappa^2)``.

    Each ``alpha_k`` minimises the one-step bound at ``e_k = d1_bound q^(2(k-1))``,
    so ``e_k <= d1_bound q^(2(k-1))`` follows by induction whenever
    ``kappa^2 >= 2`` and ``d1_bound >= d(x_1, X)^2``.
    """
    if heb.theta != 1:
        raise ValueError("the geometric stepsize requires theta = 1")
    if not d1_bound > 0:
        raise ValueError("d1_bound must be positive")
    kappa = heb.kappa
    if kappa < 1:
        raise ValueError(f"kappa = G/c must be >= 1, got {kappa}")
    q = math.sqrt(max(0.0, 1.0 - 1.0 / kappa ** 2))
    alpha1 = math.sqrt(d1_bound) / (heb.G * kappa)
    return StepsizeSchedule("shor_geometric", {"alpha1": alpha1, "q": q, "d1_bound": d1_bound})


def harmonic_qg(alpha1: float, heb: HebParams) -> StepsizeSchedule:
    if heb.theta != 0.5:
        raise ValueError("the harmonic rate applies to theta = 1/2")
    if not 0 < alpha1 <= (1.0 / heb.c) * (1 + 1e-12):
        raise ValueError(f"need 0 < alpha1 <= 1/c = {1.0 / heb.c}, got {alpha1}")
    return StepsizeSchedule("harmonic_qg", {"alpha1": float(alpha1)})


def karimi_qg(heb: HebParams) -> StepsizeSchedule:
    """``alpha_k = (2k+1) / (2c (k+1)^2)`` for quadratic growth."""
    if heb.theta != 0.5:
        raise ValueError("this stepsize applies to theta = 1/2")
    return StepsizeSchedule("karimi_qg", {"c": heb.c})
