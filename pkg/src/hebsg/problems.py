"""Test problems, the two applications (LAD regression, sparse SVM) and projections.

Random instances draw from ``numpy.random.default_rng(seed)`` (PCG64 seeded
through ``SeedSequence``) in a fixed order, so a seed pins the instance.

Subgradient selections are deterministic: ``sign(0) = 0`` for absolute values
and hinge terms with margin exactly 1 contribute nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from hebsg.core import HebParams, ProblemInstance


# -- projections --------------------------------------------------------------

def project_box(v, radius: float):
    return np.clip(v, -radius, radius)


def project_ball(v, radius: float):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n <= radius:
        return v.copy()
    return v * (radius / n)


def l1_threshold_sort(u, tau: float) -> float:
    """Soft threshold ``lam`` with ``sum(max(u - lam, 0)) == tau`` for ``u >= 0``, ``sum(u) > tau``."""
    s = np.sort(u)[::-1]
    css = np.cumsum(s)
    j = np.arange(1, len(s) + 1)
    rho = np.nonzero(s - (css - tau) / j > 0)[0][-1]
    return (css[rho] - tau) / (rho + 1)


def l1_threshold_pivot(u, tau: float, rng=None) -> float:
    """Same threshold as :func:`l1_threshold_sort` by randomized pivoting (expected O(n))."""
    rng = np.random.default_rng(0) if rng is None else rng
    U = np.asarray(u, dtype=float)
    s = 0.0
    rho = 0
    while U.size:
        i = int(rng.integers(U.size))
        pivot = U[i]
        upper = U >= pivot
        ds = U[upper].sum()
        drho = int(upper.sum())
        if (s + ds) - (rho + drho) * pivot < tau:
            s += ds
            rho += drho
            U = U[~upper]
        else:
            upper[i] = False
            U = U[upper]
    return (s - tau) / rho


def project_l1_ball(v, tau: float, method: str = "sort"):
    """Euclidean projection of ``v`` onto ``{x : ||x||_1 <= tau}``.

    Parameters
    ----------
    v : array_like
        Point to project.
    tau : float
        Radius, must be positive.
    method : {"sort", "pivot"}
        ``"sort"`` finds the threshold in O(n log n); ``"pivot"`` uses the
        expected-linear randomized pivoting scheme.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.sum() <= tau:
        return v.copy()
    if method == "sort":
        lam = l1_threshold_sort(a, tau)
    elif method == "pivot":
        lam = l1_threshold_pivot(a, tau)
    else:
        raise ValueError(f"unknown method {method!r}")
    x = np.maximum(a - lam, 0.0)
    total = x.sum()
    if total > tau:
        # cancellation in a - lam can leave the sum a few ulps of max|v| above tau
        x *= tau / total
    return np.sign(v) * x


# -- power growth: h(x) = c ||x||^(1/theta) -----------------------------------

@dataclass(frozen=True)
class PowerGrowthProblem:
    """``h(x) = c ||x||^(1/theta)`` on a centred ball or box; the bound holds with equality."""

    c: float
    theta: float
    dim: int
    radius: float = 1.0
    constraint: str = "ball"

    def __post_init__(self):
        if self.constraint not in ("ball", "box"):
            raise ValueError("constraint must be 'ball' or 'box'")
        HebParams(self.c, self.theta, 1.0)

    @property
    def max_norm(self) -> float:
        if self.constraint == "ball":
            return self.radius
        return self.radius * math.sqrt(self.dim)

    @property
    def G(self) -> float:
        return (self.c / self.theta) * self.max_norm ** (1.0 / self.theta - 1.0)

    def instance(self) -> ProblemInstance:
        if self.constraint == "ball":
            proj = partial(project_ball, radius=self.radius)
            diam = 4.0 * self.radius ** 2
        else:
            proj = partial(project_box, radius=self.radius)
            diam = 4.0 * self.radius ** 2 * self.dim
        return ProblemInstance(
            dim=self.dim,
            oracle=partial(power_growth_oracle, self),
            project=proj,
            heb=HebParams(self.c, self.theta, self.G),
            distance=np.linalg.norm,
            optimal_value=0.0,
            diameter_sq=diam,
            name=f"power(c={self.c:g},theta={self.theta:g},dim={self.dim})",
        )


def power_growth_oracle(p: PowerGrowthProblem, x):
    x = np.asarray(x, dtype=float)
    n = float(np.linalg.norm(x))
    q = 1.0 / p.theta
    if n == 0.0:
        return 0.0, np.zeros_like(x)
    return p.c * n ** q, (p.c * q * n ** (q - 2.0)) * x


def make_l1_norm_problem(dim: int, radius: float = 1.0, constraint: str = "box") -> ProblemInstance:
    """``h(x) = ||x||_1``: ``||x||_1 >= ||x||_2`` gives ``c = 1, theta = 1``, and ``G = sqrt(dim)``."""
    if constraint == "box":
        proj = partial(project_box, radius=radius)
        diam = 4.0 * radius ** 2 * dim
    elif constraint == "ball":
        proj = partial(project_ball, radius=radius)
        diam = 4.0 * radius ** 2
    elif constraint == "none":
        proj, diam = np.array, None
    else:
        raise ValueError(f"unknown constraint {constraint!r}")

    def oracle(x):
        x = np.asarray(x, dtype=float)
        return float(np.abs(x).sum()), np.sign(x)

    return ProblemInstance(
        dim=dim,
        oracle=oracle,
        project=proj,
        heb=HebParams(1.0, 1.0, math.sqrt(dim)),
        distance=np.linalg.norm,
        optimal_value=0.0,
        diameter_sq=diam,
        name=f"l1norm(dim={dim})",
    )


# -- least absolute deviations ------------------------------------------------

@dataclass(frozen=True, eq=False)
class LadProblem:
    """``min ||Ex - b||_1  s.t. ||x||_1 <= tau``."""

    E: np.ndarray
    b: np.ndarray
    tau: float

    def __post_init__(self):
        E = np.atleast_2d(np.asarray(self.E, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if E.shape[0] != b.shape[0]:
            raise ValueError(f"E has {E.shape[0]} rows but b has {b.shape[0]} entries")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "b", b)

    @property
    def G(self) -> float:
        """Sum of column norms of ``E``, the subgradient bound used in the experiments."""
        return float(np.linalg.norm(self.E, axis=0).sum())

    @property
    def G_certified(self) -> float:
        """A provable bound: ``min(sqrt(m) ||E||_2, sum of row norms)``."""
        m = self.E.shape[0]
        return float(min(math.sqrt(m) * np.linalg.norm(self.E, 2),
                         np.linalg.norm(self.E, axis=1).sum()))

    def instance(self, name: str = "lad") -> ProblemInstance:
        return ProblemInstance(
            dim=self.E.shape[1],
            oracle=partial(lad_oracle, self),
            project=partial(project_l1_ball, tau=self.tau),
            G=self.G,
            diameter_sq=4.0 * self.tau ** 2,
            name=name,
        )

    def row_parts(self) -> list:
        """The objective split into its ``m`` row terms ``|E_i x - b_i|``."""
        parts = []
        proj = partial(project_l1_ball, tau=self.tau)
        for i in range(self.E.shape[0]):
            sub = LadProblem(self.E[i:i + 1], self.b[i:i + 1], self.tau)
            parts.append(ProblemInstance(
                dim=self.E.shape[1],
                oracle=partial(lad_oracle, sub),
                project=proj,
                G=float(np.linalg.norm(self.E[i])),
                name=f"lad-row{i}",
            ))
        return parts


def lad_oracle(problem: LadProblem, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.E.shape[1],):
        raise ValueError(f"x has shape {x.shape}, expected ({problem.E.shape[1]},)")
    r = problem.E @ x - problem.b
    return float(np.abs(r).sum()), problem.E.T @ np.sign(r)


def make_random_lad(m: int, n: int, tau: float, seed: int) -> LadProblem:
    """``E`` (m x n) then ``b`` (m), all standard normal, from ``default_rng(seed)``."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    rng = np.random.default_rng(seed)
    E = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    return LadProblem(E, b, tau)


def make_consistent_lad(m: int, n: int, tau: float, seed: int):
    """A LAD instance with known solution: ``b = E x*`` with ``||x*||_1 = tau / 2``.

    Returns ``(lad, instance)``; ``instance`` is instrumented with
    ``d(x) = ||x - x*||`` and declares ``c = sigma_min(E)`` (from
    ``||E d||_1 >= ||E d||_2``), ``theta = 1`` and ``G`` = sum of row norms.
    """
    if m < n:
        raise ValueError("need m >= n for a unique solution")
    rng = np.random.default_rng(seed)
    E = rng.standard_normal((m, n))
    xs = rng.standard_normal(n)
    xs *= 0.5 * tau / np.abs(xs).sum()
    lad = LadProblem(E, E @ xs, tau)
    c = float(np.linalg.svd(E, compute_uv=False)[-1])
    G = float(np.linalg.norm(E, axis=1).sum())
    inst = ProblemInstance(
        dim=n,
        oracle=partial(lad_oracle, lad),
        project=partial(project_l1_ball, tau=tau),
        heb=HebParams(c, 1.0, G),
        distance=lambda x: float(np.linalg.norm(np.asarray(x) - xs)),
        optimal_value=0.0,
        diameter_sq=4.0 * tau ** 2,
        name="lad-consistent",
    )
    return lad, inst


# -- sparse SVM ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SvmProblem:
    """``min sum_i max(0, 1 - y_i <c_i, x>)  s.t. ||x||_1 <= tau``; rows of ``C`` are the ``c_i``."""

    C: np.ndarray
    y: np.ndarray
    tau: float

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if C.shape[0] != y.shape[0]:
            raise ValueError(f"{C.shape[0]} data points but {y.shape[0]} labels")
        if not np.all(np.abs(y) == 1):
            raise ValueError("labels must be +1 or -1")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "y", y)

    @property
    def G(self) -> float:
        return float(np.linalg.norm(self.C, axis=1).sum())

    def instance(self, name: str = "svm") -> ProblemInstance:
        return ProblemInstance(
            dim=self.C.shape[1],
            oracle=partial(svm_oracle, self),
            project=partial(project_l1_ball, tau=self.tau),
            G=self.G,
            diameter_sq=4.0 * self.tau ** 2,
            name=name,
        )


def svm_oracle(problem: SvmProblem, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.C.shape[1],):
        raise ValueError(f"x has shape {x.shape}, expected ({problem.C.shape[1]},)")
    margin = problem.y * (problem.C @ x)
    active = margin < 1.0
    value = float(np.sum(1.0 - margin[active]))
    g = -(problem.C[active].T @ problem.y[active])
    return value, g


def make_random_svm(m: int, n: int, tau: float, seed: int) -> SvmProblem:
    """Rows ``c_i`` standard normal (m x n), then labels ``+-1`` with probability 1/2."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((m, n))
    y = np.where(rng.random(m) < 0.5, -1.0, 1.0)
    return SvmProblem(C, y, tau)
