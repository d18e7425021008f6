"""Closed-form convergence bounds and empirical rate fitting.

Every bound is returned as a :class:`RateBound`, a callable ``k -> bound``
valid for ``k >= k_start``.  ``offset`` shifts the index the bound applies to:
``bound(k)`` limits ``e_{k + offset}``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from hebsg.core import ConditionError, HebParams, RunTrace
from hebsg.schedules import optimal_decay_params
from hebsg.solvers import Ds2SgConfig, DsSgConfig


@dataclass(frozen=True)
class RateBound:
    kind: str
    constants: dict
    exponent: Optional[float]
    k_start: int
    func: Callable = field(repr=False, compare=False)
    offset: int = 0

    def __call__(self, k):
        return self.func(np.asarray(k, dtype=float)) if np.ndim(k) else float(self.func(float(k)))

    def bound(self, k):
        return self(k)


class DominanceCheck(NamedTuple):
    ok: bool
    first_violation: Optional[int]
    worst_slack: float


def check_dominance(bound: RateBound, k, e, rel_tol: float = 1e-9, k_max: Optional[int] = None) -> DominanceCheck:
    """Check ``e_j <= bound(j - offset) (1 + rel_tol)`` for every observed index ``j`` in range.

    ``k`` and ``e`` are aligned arrays of iteration indices and observed
    squared distances.  ``worst_slack`` is the smallest ``(bound - e) / bound``.
    """
    k = np.asarray(k)
    e = np.asarray(e, dtype=float)
    j = k - bound.offset
    mask = j >= bound.k_start
    if k_max is not None:
        mask &= j <= k_max
    if not mask.any():
        raise ValueError("no observations inside the bound's validity range")
    b = np.asarray(bound(j[mask].astype(float)), dtype=float)
    slack = (b - e[mask]) / b
    bad = np.nonzero(slack < -rel_tol)[0]
    first = int(k[mask][bad[0]]) if bad.size else None
    return DominanceCheck(first is None, first, float(slack.min()))


def check_trace(bound: RateBound, trace: RunTrace, rel_tol: float = 1e-9, k_max=None) -> DominanceCheck:
    if trace.dist_sq is None:
        raise ValueError("bound checks need an instrumented trace")
    return check_dominance(bound, trace.k, trace.dist_sq, rel_tol, k_max)


# -- constant stepsize --------------------------------------------------------

def fixed_alpha_max(heb: HebParams, D: Optional[float] = None) -> float:
    """Largest admissible constant stepsize for the linear-phase bound.

    Without ``D`` (requires ``theta <= 1/2``) this is
    ``2^((1-2t)/(2(1-t))) t^(1/(2(1-t))) G^((2t-1)/(1-t)) c^(t/(t-1))``, equal to
    ``1/(2c)`` at ``t = 1/2``; with ``D`` (``theta >= 1/2``) it is
    ``theta D^(1-1/(2 theta)) / c``.
    """
    t, c, G = heb.theta, heb.c, heb.G
    if D is None:
        if t > 0.5:
            raise ConditionError("dbound_missing", "theta > 1/2 needs a bound D on the squared distances")
        return (2 ** ((1 - 2 * t) / (2 * (1 - t))) * t ** (1 / (2 * (1 - t)))
                * G ** ((2 * t - 1) / (1 - t)) * c ** (t / (t - 1)))
    if t < 0.5:
        raise ConditionError("theta_range", "the D-based bound needs theta >= 1/2")
    return t * D ** (1 - 1 / (2 * t)) / c


def fixed_floor(alpha: float, heb: HebParams) -> float:
    """``e_* = (alpha G^2 / (2c))^(2 theta)``."""
    return (alpha * heb.G ** 2 / (2.0 * heb.c)) ** (2.0 * heb.theta)


def fixed_bound(alpha: float, heb: HebParams, d1_sq: float, D: Optional[float] = None) -> RateBound:
    """Bound on ``e_k`` for FixedSG with stepsize ``alpha``.

    * ``theta <= 1/2`` and no ``D``: ``e_* + q1^(k-1) (e_1 - e_*)``.
    * ``theta >= 1/2`` with ``D >= sup e_k``: ``e_* + max(q2^(k-1) (e_1 - e_*), alpha^2 G^2)``.

    For ``theta > 1/2`` without ``D`` the a-priori bound
    ``max(e_1, e_* + alpha^2 G^2)`` is used as ``D``.
    """
    t, c, G = heb.theta, heb.c, heb.G
    e_star = fixed_floor(alpha, heb)
    if D is None and t > 0.5:
        D = max(d1_sq, e_star + alpha ** 2 * G ** 2)
    amax = fixed_alpha_max(heb, D)
    if alpha > amax * (1 + 1e-12):
        raise ConditionError("alpha_max", f"alpha={alpha} exceeds the admissible {amax}")
    if D is None:
        q = 1 - (1 / t) * alpha * c * e_star ** ((1 - 2 * t) / (2 * t))
        consts = {"e_star": e_star, "q1": q, "e1": d1_sq, "alpha_max": amax}

        def func(k):
            return e_star + q ** (k - 1) * (d1_sq - e_star)

        return RateBound("fixed_linear", consts, None, 1, func)
    q = 1 - alpha * c * D ** (1 / (2 * t) - 1) / t
    floor = alpha ** 2 * G ** 2
    consts = {"e_star": e_star, "q2": q, "e1": d1_sq, "D": D, "alpha_max": amax}

    def func(k):
        return e_star + np.maximum(q ** (k - 1) * (d1_sq - e_star), floor)

    return RateBound("fixed_max", consts, None, 1, func)


# -- staircase evaluation counts ----------------------------------------------

def dssg_eval_bound(cfg: DsSgConfig) -> float:
    """Closed-form bound on the subgradient evaluations of DS-SG to reach ``cfg.eps``."""
    if cfg.eps is None:
        raise ValueError("the evaluation bound needs cfg.eps")
    t, kappa, beta = cfg.heb.theta, cfg.heb.kappa, cfg.beta
    stairs = math.log(cfg.Omega1 / cfg.eps) / math.log(beta) + 1
    if t == 1:
        return (math.sqrt(beta) * kappa ** 2 * math.log(2 * beta) + 1) * stairs
    lead = (t * beta ** (3 / (2 * t) - 1) * math.log(2 * beta) / (beta ** (1 / t - 1) - 1)
            * kappa ** 2 * cfg.eps ** (1 - 1 / t))
    return lead + stairs


def ds2sg_eval_bound(cfg: Ds2SgConfig, true_c: float) -> float:
    """Closed-form bound on the evaluations of DS2-SG when the true constant is ``true_c``."""
    if cfg.eps is None:
        raise ValueError("the evaluation bound needs cfg.eps")
    t, beta = cfg.theta, cfg.beta
    kappa, kappa1 = cfg.G / true_c, cfg.G / cfg.c1
    kbar = max(kappa, kappa1)
    stairs = math.log(cfg.Omega_C / cfg.eps) / math.log(beta) + 1
    ratio = kbar / kappa1
    if t == 1:
        return (4 / 3) * (math.sqrt(beta) * kbar ** 2 * math.log(2 * beta) + ratio ** 2
                          + math.log2(ratio) + 1) * stairs
    lead = (4 * t * beta ** (3 / (2 * t) - 1) * math.log(2 * beta)
            / (3 * (beta ** (1 / t - 1) - 1)) * kbar ** 2 * cfg.eps ** (1 - 1 / t))
    return lead + (4 * ratio ** 2 / 3 + math.log2(ratio) + 2) * stairs


# -- decaying stepsizes -------------------------------------------------------

def optimal_decay_bound(heb: HebParams, Omega_C: Optional[float] = None) -> RateBound:
    """``e_k <= r^r kappa^(2r) k^-r``, ``r = theta/(1-theta)``, for the optimal polynomial stepsize.

    With ``Omega_C`` the curvature condition is enforced: ``kappa >= sqrt(3)
    Omega_C^((1-theta)/(2 theta))`` for ``theta >= 1/2`` and ``kappa^2 >=
    (2(1-theta)/theta) Omega_C^((1-theta)/theta)`` below.  Without it the
    condition is recorded as unchecked.
    """
    od = optimal_decay_params(heb)
    t, kappa = heb.theta, heb.kappa
    r = t / (1 - t)
    checked = "unchecked"
    if Omega_C is not None:
        if t >= 0.5:
            need = math.sqrt(3) * Omega_C ** ((1 - t) / (2 * t))
            if kappa < need * (1 - 1e-12):
                raise ConditionError("kappa_curvature", f"need kappa >= {need}, got {kappa}")
        else:
            need = (2 * (1 - t) / t) * Omega_C ** ((1 - t) / t)
            if kappa ** 2 < need * (1 - 1e-12):
                raise ConditionError("kappa_curvature", f"need kappa^2 >= {need}, got {kappa ** 2}")
        checked = "ok"
    C = od.rate_constant

    def func(k):
        return C * k ** (-r)

    return RateBound("optimal_decay", {"C": C, "p": od.p, "alpha1": od.alpha1, "condition": checked},
                     -r, od.k_start, func)


def _powprod(*pairs) -> float:
    """``prod(base ** exp)`` in log space; ``inf`` when the product overflows (a vacuous bound)."""
    if any(b == 0 for b, _ in pairs):
        return 0.0
    log = sum(e * math.log(b) for b, e in pairs)
    return math.exp(log) if log < 709 else math.inf


@dataclass
class DecayConstants:
    C1: float
    C2: Optional[float]
    C3: Optional[float]
    C4: Optional[float]
    C5: Optional[float]
    conditions: dict
    bound: Optional[RateBound]
    note: str = ""


def decay_constants(alpha1: float, p: float, heb: HebParams, d1_sq: Optional[float] = None,
                    k0: Optional[int] = None) -> DecayConstants:
    """Constants of the nonsummable-stepsize bounds for ``alpha_k = alpha1 k^-p``.

    ``conditions`` maps each precondition to ``True``/``False`` or
    ``"unverifiable"`` (when ``d1_sq`` or ``k0`` is missing).  ``bound`` is the
    applicable :class:`RateBound`, or ``None`` when no result applies.

    * ``theta < 1/2``: the ``max(C1, C2) max(k^(-2p theta), k^(2 theta (1-p)/(2 theta - 1)))``
      bound for ``k >= k0``, or, at ``p = 1/(2(1-theta))`` under its extra
      condition, the ``k^(-theta/(1-theta))`` bound for ``k >= 1``.
    * ``1/2 <= theta <= 1`` with ``p < 1``: ``4 max(C1, C3, C4, C5) k^(-2p theta)``
      for ``k >= 4``.
    """
    t, c, G = heb.theta, heb.c, heb.G
    if not (alpha1 > 0 and 0 < p <= 1):
        raise ValueError("need alpha1 > 0 and 0 < p <= 1")
    C1 = 2 ** (2 * p * t + 1) * ((alpha1 * G ** 2 / c) ** (2 * t) + alpha1 ** 2 * G ** 2)
    d1 = math.sqrt(d1_sq) if d1_sq is not None else None
    conds = {}
    if t < 0.5:
        C2 = (alpha1 * (1 - 2 * t) / (2 * t * (1 - p))) ** (2 * t / (2 * t - 1)) if p < 1 else None
        conds["p_range"] = 1 / (2 * (1 - t)) <= p * (1 + 1e-12) and p <= 1
        if p < 1 and k0 is not None:
            rhs = ((2 * t * (1 - p) / (alpha1 * (1 - 2 * t))) ** (2 * t / (1 - 2 * t))
                   * (k0 + 1) ** (2 * t * (2 * p * (1 - t) - 1) / (1 - 2 * t)))
            conds["C1_vs_k0"] = C1 <= rhs * (1 + 1e-12)
        else:
            conds["C1_vs_k0"] = "unverifiable"
        if p < 1 and d1 is not None:
            conds["alpha1_vs_d1"] = alpha1 <= 2 * t * (1 - p) * d1 ** ((2 * t - 1) / t) / (1 - 2 * t) * (1 + 1e-12)
        else:
            conds["alpha1_vs_d1"] = "unverifiable"
        p_opt = 1 / (2 * (1 - t))
        bound = None
        note = ""
        if abs(p - p_opt) <= 1e-12:
            lhs = alpha1 ** (2 * t / (1 - 2 * t)) * C1
            rhs = (t / (1 - t)) ** (2 * t / (1 - 2 * t))
            conds["corollary_alpha1"] = lhs <= rhs * (1 + 1e-12)
            if conds["corollary_alpha1"] is True and conds["alpha1_vs_d1"] is True:
                const = alpha1 ** (2 * t / (2 * t - 1)) * (t / (1 - t)) ** (2 * t / (1 - 2 * t))
                r = t / (1 - t)
                bound = RateBound("decay_small_theta_optimal", {"C": const, "C1": C1}, -r, 1,
                                  lambda k, C=const, r=r: C * k ** (-r))
        if bound is None and all(conds[k] is True for k in ("p_range", "C1_vs_k0", "alpha1_vs_d1")):
            M = max(C1, C2)
            e1, e2 = -2 * p * t, 2 * t * (1 - p) / (2 * t - 1)
            bound = RateBound("decay_small_theta", {"C1": C1, "C2": C2, "C": M}, max(e1, e2), k0,
                              lambda k, M=M, e1=e1, e2=e2: M * np.maximum(k ** e1, k ** e2))
        if bound is None:
            note = "preconditions not verified; no bound issued"
        return DecayConstants(C1, C2, None, None, None, conds, bound, note)

    if p >= 1:
        return DecayConstants(C1, None, None, None, None, {"p_below_1": False}, None,
                              "p = 1 is only covered for theta = 1/2 (see qg_harmonic_bound)")
    conds["p_below_1"] = True
    E = math.e
    C3 = _powprod((C1, (1 + 2 * p * (t - 1)) / (1 - p)),
                  (alpha1 * (1 - 2 ** (p - 1)) * c * E / (4 * p * t), -2 * p * t / (1 - p)))
    C4 = 16 * (8 * t * C1 / (alpha1 * c * E)) ** (2 * t)
    C5 = None
    bound = None
    note = ""
    if d1 is not None:
        C5 = _powprod((d1, (2 + 4 * p * (t - 1)) / (1 - p)), (alpha1 * c * E / (4 * p * t), -2 * p * t / (1 - p)))
        M = 4 * max(C1, C3, C4, C5)
        ex = -2 * p * t
        bound = RateBound("decay_large_theta", {"C1": C1, "C3": C3, "C4": C4, "C5": C5, "C": M}, ex, 4,
                          lambda k, M=M, ex=ex: M * k ** ex)
    else:
        conds["d1_known"] = "unverifiable"
        note = "C5 needs d(x1, X); no bound issued"
    return DecayConstants(C1, None, C3, C4, C5, conds, bound, note)


def qg_harmonic_bound(alpha1: float, heb: HebParams, d1_sq: float) -> RateBound:
    """``e_k <= max(2 alpha1 G^2 / c, e_1) k^(-c alpha1)`` for ``alpha_k = alpha1/k``, ``theta = 1/2``."""
    if heb.theta != 0.5:
        raise ConditionError("theta_half", "the harmonic bound needs theta = 1/2")
    if not 0 < alpha1 <= (1 / heb.c) * (1 + 1e-12):
        raise ConditionError("alpha1_le_inv_c", f"need alpha1 <= 1/c = {1 / heb.c}")
    C = max(2 * alpha1 * heb.G ** 2 / heb.c, d1_sq)
    ex = -heb.c * alpha1
    return RateBound("qg_harmonic", {"C": C}, ex, 1, lambda k: C * k ** ex)


def karimi_bound(heb: HebParams, d1_sq: float) -> RateBound:
    """``e_{k+1} <= e_1/(k+1)^2 + G^2/(c^2 (k+1))``; note ``offset = 1``."""
    if heb.theta != 0.5:
        raise ConditionError("theta_half", "this bound needs theta = 1/2")
    a, b = d1_sq, heb.G ** 2 / heb.c ** 2
    return RateBound("karimi_qg", {"d1_sq": a, "G2_over_c2": b}, -1.0, 1,
                     lambda k: a / (k + 1) ** 2 + b / (k + 1), offset=1)


# -- rate fitting -------------------------------------------------------------

class RateFit(NamedTuple):
    slope: float
    constant: float
    n_points: int


def fit_power_law(k, y) -> RateFit:
    """Least-squares fit of ``ln y = ln C + slope ln k``."""
    k = np.asarray(k, dtype=float)
    y = np.asarray(y, dtype=float)
    if k.size < 10:
        raise ValueError(f"need at least 10 points to fit a rate, got {k.size}")
    if np.any(y <= 0) or np.any(k <= 0):
        raise ValueError("rate fitting needs positive values on the window")
    slope, intercept = np.polyfit(np.log(k), np.log(y), 1)
    return RateFit(float(slope), float(math.exp(intercept)), int(k.size))


def fit_rate(trace: RunTrace, tail_fraction: float = 0.5, *, k_range=None,
             h_ref: Optional[float] = None, square_gap: bool = False) -> RateFit:
    """Log-log slope of the squared distance (or objective gap) over a window.

    By default the window is the last ``tail_fraction`` of the rows; ``k_range``
    ``(k_lo, k_hi)`` overrides it.  With ``h_ref`` the fitted quantity is the
    gap ``h(x_k) - h_ref`` (squared when ``square_gap``) instead of ``e_k``.
    The terminal row is excluded.
    """
    k = trace.k[:-1]
    if h_ref is not None:
        y = trace.gap(h_ref)[:-1]
        if square_gap:
            y = y ** 2
    else:
        if trace.dist_sq is None:
            raise ValueError("trace has no squared distances; pass h_ref to fit the gap")
        y = trace.dist_sq[:-1]
    if k_range is not None:
        mask = (k >= k_range[0]) & (k <= k_range[1])
    else:
        if not 0 < tail_fraction <= 1:
            raise ValueError("tail_fraction must lie in (0, 1]")
        mask = np.zeros(k.size, dtype=bool)
        mask[k.size - int(math.floor(tail_fraction * k.size)):] = True
    return fit_power_law(k[mask], y[mask])


# -- export -------------------------------------------------------------------

def bound_table(bounds: dict, ks) -> str:
    """CSV text with a ``k`` column and one column per named bound (empty outside validity)."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    names = list(bounds)
    w.writerow(["k"] + names)
    for k in ks:
        row = [int(k)]
        for n in names:
            b = bounds[n]
            row.append(f"{b(float(k)):.17g}" if k >= b.k_start else "")
        w.writerow(row)
    return out.getvalue()

