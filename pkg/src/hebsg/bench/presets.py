"""Built-in experiment configurations mirroring the published figures.

``fig4`` and ``fig6`` read ``space_ga_scale`` and ``glass.scale`` from
``$HEBSG_DATA``.  All presets use a budget of 1e5 subgradient evaluations.
"""

from __future__ import annotations

from hebsg.bench.config import ExperimentConfig, parse_config

_LAD = """
[problem]
kind = lad
m = 100
n = 50
tau = 1
G = certified
"""

_DECAY = """
[entry:alpha=0.1k^-0.99]
method = generic
schedule = polynomial
alpha1 = 0.1
p = 0.99

[entry:alpha=0.01k^-0.5]
method = generic
schedule = polynomial
alpha1 = 0.01
p = 0.5
"""

PRESETS = {
    "fig1": """
[experiment]
name = fig1
seed = 0
budget = 100000
plots = gap:logk
thin = 10
""" + _LAD + _DECAY,

    "fig2": """
[experiment]
name = fig2
seed = 0
budget = 100000
plots = gap:k
thin = 10
""" + _LAD + """
[entry:DS-SG]
method = ds_sg
c = 22
beta = 4
eps = 1e-5
stairs = budget

[entry:RSG]
method = rsg
c = 15
eps = 1e-5

[entry:Shor]
method = shor
c = 11
""" + _DECAY,

    "fig3": """
[experiment]
name = fig3
seed = 0
budget = 100000
plots = gap:k
best_so_far = true
thin = 10
""" + _LAD + """
[entry:DS-SG c=100]
method = ds_sg
c = 100
beta = 4
eps = 1e-5
enforce = false

[entry:RSG c=100]
method = rsg
c = 100
eps = 1e-5

[entry:Shor c=100]
method = shor
c = 100

[entry:R2SG]
method = r2sg
theta_hat = 0.8
eps = 1e-5

[entry:DS2-SG]
method = ds2_sg
beta = 4
eps = 1e-20
""" + _DECAY,

    "fig4": """
[experiment]
name = fig4
seed = 0
budget = 100000
plots = gap:k
thin = 10

[problem]
kind = libsvm_lad
dataset = space_ga_scale
m_limit = 100
tau = 5
G = certified

[entry:alpha=k^-1]
method = generic
schedule = polynomial
alpha1 = 1
p = 1

[entry:alpha=0.1k^-0.5]
method = generic
schedule = polynomial
alpha1 = 0.1
p = 0.5

[entry:DS2-SG]
method = ds2_sg
beta = 2
eps = 1e-12
""",

    "fig5": """
[experiment]
name = fig5
seed = 0
budget = 100000
plots = gap:k
thin = 10

[problem]
kind = svm
m = 100
n = 50
tau = 2

[entry:DS2-SG]
method = ds2_sg
beta = 2
eps = 1e-5

[entry:R2SG]
method = r2sg
theta_hat = 0.5
eps = 1e-5

[entry:alpha=0.1k^-1]
method = generic
schedule = polynomial
alpha1 = 0.1
p = 1

[entry:alpha=0.01k^-0.5]
method = generic
schedule = polynomial
alpha1 = 0.01
p = 0.5
""",

    "fig6": """
[experiment]
name = fig6
seed = 0
budget = 100000
plots = gap:k
thin = 10

[problem]
kind = libsvm_svm
dataset = glass.scale
label_grouping = glass
tau = 2

[entry:DS2-SG]
method = ds2_sg
beta = 4
eps = 1e-8

[entry:R2SG]
method = r2sg
theta_hat = 0.5
eps = 1e-5

[entry:alpha=0.1k^-1]
method = generic
schedule = polynomial
alpha1 = 0.1
p = 1

[entry:alpha=0.01k^-0.5]
method = generic
schedule = polynomial
alpha1 = 0.01
p = 0.5
""",
}


def preset_text(name: str) -> str:
    try:
        return PRESETS[name].lstrip()
    except KeyError:
        raise KeyError(f"unknown preset {name!r} (known: {', '.join(PRESETS)})") from None


def get_preset(name: str, **overrides) -> ExperimentConfig:
    """Parsed preset; keyword overrides replace top-level config fields (e.g. ``budget``)."""
    cfg = parse_config(preset_text(name), source=f"preset:{name}")
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return cfg
