"""Experiment configuration files.

An INI-style text file (read with :mod:`configparser`)::

    [experiment]
    name = fig2
    seed = 0
    budget = 100000
    reference = auto        ; auto | none | <number>
    plots = gap:k           ; comma list of <gap|dist_sq>:<k|logk>

    [problem]
    kind = lad
    m = 100
    n = 50
    tau = 1
    G = certified

    [entry:DS-SG]
    method = ds_sg
    c = 22
    beta = 4
    eps = 1e-5

Every ``[entry:<label>]`` section is one solver run; all runs share the
problem instance and the starting point.  See ``README.md`` for the full key
list.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

PROBLEM_KEYS = {
    "lad": ({"m", "n", "tau"}, {"G"}),
    "svm": ({"m", "n", "tau"}, {"G"}),
    "consistent_lad": ({"m", "n", "tau"}, set()),
    "libsvm_lad": ({"dataset", "tau"}, {"m_limit", "G"}),
    "libsvm_svm": ({"dataset", "tau"}, {"m_limit", "G", "label_grouping"}),
    "power": ({"c", "theta", "dim"}, {"radius", "constraint"}),
    "l1norm": ({"dim"}, {"radius", "constraint"}),
}

METHOD_KEYS = {
    "fixed": ({"alpha"}, {"K"}),
    "generic": ({"schedule"}, {"alpha", "alpha1", "p", "c", "theta", "G", "eps", "d1_bound", "K"}),
    "shor": ({"c"}, {"G", "d1_bound", "K"}),
    "ds_sg": ({"c"}, {"beta", "eps", "Omega", "stairs", "theta", "G", "enforce", "M"}),
    "ds2_sg": (set(), {"c1", "beta", "eps", "Omega", "theta", "G", "max_outer_loops", "stopping", "h_lb"}),
    "rsg": ({"c"}, {"eps", "eps0", "theta", "G", "shrink", "t", "stages", "eta1"}),
    "r2sg": ({"theta_hat"}, {"t1", "eps", "eps0", "G", "shrink", "growth", "outer_loops", "stages", "eta1"}),
}

EXPERIMENT_KEYS = {"name", "seed", "budget", "x_init", "reference", "reference_budget", "plots",
                   "best_so_far", "thin", "output_dir", "true_c"}
PLOT_AXES = ({"gap", "dist_sq"}, {"k", "logk"})


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


@dataclass
class Section:
    """Raw key/value pairs of one config section with typed accessors."""

    where: str
    values: dict

    def _get(self, key, default, conv, kind):
        if key not in self.values:
            if default is _REQUIRED:
                raise ConfigError(f"{self.where}: missing required field '{key}'")
            return default
        raw = self.values[key]
        try:
            return conv(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"{self.where}.{key}: expected {kind}, got {raw!r}") from None

    def float(self, key, default=None):
        return self._get(key, default, float, "a number")

    def int(self, key, default=None):
        return self._get(key, default, _to_int, "an integer")

    def str(self, key, default=None):
        return self._get(key, default, str, "a string")

    def bool(self, key, default=None):
        return self._get(key, default, _to_bool, "true/false")

    def has(self, key) -> bool:
        return key in self.values


_REQUIRED = object()
REQUIRED = _REQUIRED


def _to_int(s):
    f = float(s)
    if f != int(f):
        raise ValueError
    return int(f)


def _to_bool(s):
    s = str(s).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError


@dataclass
class EntrySpec:
    label: str
    method: str
    params: Section


@dataclass
class ExperimentConfig:
    name: str
    seed: int
    budget: int
    problem_kind: str
    problem: Section
    entries: list
    x_init: str = "zero"
    reference: str = "auto"
    reference_budget: int = 300000
    plots: list = field(default_factory=lambda: [("gap", "k")])
    best_so_far: bool = False
    thin: int = 1
    output_dir: Optional[str] = None
    true_c: Optional[float] = None


def _check_keys(where, values, required, optional):
    unknown = set(values) - required - optional
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(sorted(unknown))}")
    missing = required - set(values)
    if missing:
        raise ConfigError(f"{where}: missing required field(s) {', '.join(sorted(missing))}")


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";",), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    for sec in ("experiment", "problem"):
        if not cp.has_section(sec):
            raise ConfigError(f"{source}: missing [{sec}] section")
    exp_vals = dict(cp["experiment"])
    _check_keys("[experiment]", exp_vals, {"seed"}, EXPERIMENT_KEYS)
    exp = Section("[experiment]", exp_vals)

    prob_vals = dict(cp["problem"])
    kind = prob_vals.pop("kind", None)
    if kind is None:
        raise ConfigError("[problem]: missing required field 'kind'")
    if kind not in PROBLEM_KEYS:
        raise ConfigError(f"[problem].kind: unknown problem kind {kind!r} (known: {', '.join(PROBLEM_KEYS)})")
    _check_keys("[problem]", prob_vals, *PROBLEM_KEYS[kind])

    entries = []
    for sec in cp.sections():
        if sec in ("experiment", "problem"):
            continue
        if not sec.startswith("entry:") or not sec[6:].strip():
            raise ConfigError(f"[{sec}]: sections other than [experiment]/[problem] must be [entry:<label>]")
        vals = dict(cp[sec])
        method = vals.pop("method", None)
        where = f"[{sec}]"
        if method is None:
            raise ConfigError(f"{where}: missing required field 'method'")
        if method not in METHOD_KEYS:
            raise ConfigError(f"{where}.method: unknown method {method!r} (known: {', '.join(METHOD_KEYS)})")
        _check_keys(where, vals, *METHOD_KEYS[method])
        entries.append(EntrySpec(sec[6:].strip(), method, Section(where, vals)))
    if not entries:
        raise ConfigError(f"{source}: no [entry:<label>] sections")

    budget = exp.int("budget", 100000)
    if budget < 1:
        raise ConfigError("[experiment].budget: must be positive")
    plots = []
    for item in exp.str("plots", "gap:k").split(","):
        item = item.strip()
        if not item:
            continue
        y, _, x = item.partition(":")
        if y not in PLOT_AXES[0] or x not in PLOT_AXES[1]:
            raise ConfigError(f"[experiment].plots: bad axis spec {item!r} (use gap|dist_sq : k|logk)")
        plots.append((y, x))
    thin = exp.int("thin", 1)
    if thin < 1:
        raise ConfigError("[experiment].thin: must be positive")
    reference = exp.str("reference", "auto")
    if reference not in ("auto", "none"):
        exp.float("reference")
    return ExperimentConfig(
        name=exp.str("name", Path(source).stem),
        seed=exp.int("seed", REQUIRED),
        budget=budget,
        problem_kind=kind,
        problem=Section("[problem]", prob_vals),
        entries=entries,
        x_init=exp.str("x_init", "zero"),
        reference=reference,
        reference_budget=exp.int("reference_budget", 300000),
        plots=plots,
        best_so_far=exp.bool("best_so_far", False),
        thin=thin,
        output_dir=exp.str("output_dir", None),
        true_c=exp.float("true_c", None),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path))
