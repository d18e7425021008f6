import numpy as np
import pytest

from hebsg.bench import cli
from hebsg.bench.config import ConfigError, load_config, parse_config
from hebsg.bench.datasets import LibsvmFormatError, load_libsvm
from hebsg.bench.plots import emit_plot
from hebsg.bench.presets import PRESETS, get_preset, preset_text
from hebsg.bench.runner import build_problem, initial_point, run_experiment, slug, stairs_to_fill
from hebsg.bench.traces import HEADER, read_trace_csv, write_trace_csv
from hebsg.problems import make_l1_norm_problem, make_random_lad
from hebsg.schedules import polynomial
from hebsg.solvers import DsSgConfig, fixed_sg, generic_sg
from hebsg.core import HebParams

SMALL = """
[experiment]
name = small
seed = 3
budget = 400
reference = 0
x_init = corner
plots = dist_sq:k, dist_sq:logk

[problem]
kind = l1norm
dim = 4
radius = 0.5

[entry:DS-SG]
method = ds_sg
c = 1
eps = 1e-6

[entry:decay]
method = generic
schedule = polynomial
alpha1 = 0.1
p = 0.5

[entry:shor]
method = shor
c = 1
"""

SMALL_LAD = """
[experiment]
name = small-lad
seed = 1
budget = 3000
reference_budget = 100000
thin = 7

[problem]
kind = lad
m = 20
n = 6
tau = 1
G = certified

[entry:DS2-SG]
method = ds2_sg
eps = 1e-12

[entry:RSG]
method = rsg
c = 1

[entry:R2SG]
method = r2sg
theta_hat = 0.8

[entry:fixed]
method = fixed
alpha = 0.001
"""


# -- config -------------------------------------------------------------------

def test_parse_small_config():
    cfg = parse_config(SMALL)
    assert cfg.name == "small" and cfg.seed == 3 and cfg.budget == 400
    assert [e.label for e in cfg.entries] == ["DS-SG", "decay", "shor"]
    assert cfg.plots == [("dist_sq", "k"), ("dist_sq", "logk")]
    assert cfg.entries[0].params.float("eps") == 1e-6


@pytest.mark.parametrize("text,needle", [
    ("[problem]\nkind = lad\n", "[experiment]"),
    ("[experiment]\nname = x\n[problem]\nkind = lad\nm=1\nn=1\ntau=1\n[entry:a]\nmethod=fixed\nalpha=1\n", "seed"),
    ("[experiment]\nseed = 1\n[problem]\nkind = cube\n[entry:a]\nmethod=fixed\nalpha=1\n", "kind"),
    ("[experiment]\nseed = 1\n[problem]\nkind = lad\nm=1\nn=1\ntau=1\nwidth=3\n[entry:a]\nmethod=fixed\nalpha=1\n", "width"),
    ("[experiment]\nseed = 1\n[problem]\nkind = lad\nm=1\nn=1\n[entry:a]\nmethod=fixed\nalpha=1\n", "tau"),
    ("[experiment]\nseed = 1\n[problem]\nkind = lad\nm=1\nn=1\ntau=1\n", "entry"),
    ("[experiment]\nseed = 1\n[problem]\nkind = lad\nm=1\nn=1\ntau=1\n[entry:a]\nmethod=magic\n", "method"),
    ("[experiment]\nseed = 1\n[problem]\nkind = lad\nm=1\nn=1\ntau=1\n[entry:a]\nmethod=fixed\n", "alpha"),
    ("[experiment]\nseed = 1\nbudget = 0\n[problem]\nkind = lad\nm=1\nn=1\ntau=1\n[entry:a]\nmethod=fixed\nalpha=1\n", "budget"),
    ("[experiment]\nseed = one\n[problem]\nkind = lad\nm=1\nn=1\ntau=1\n[entry:a]\nmethod=fixed\nalpha=1\n", "seed"),
    ("[experiment]\nseed = 1\nplots = obj:k\n[problem]\nkind = lad\nm=1\nn=1\ntau=1\n[entry:a]\nmethod=fixed\nalpha=1\n", "plots"),
    ("[experiment]\nseed = 1\n[problem]\nkind = lad\nm=1\nn=1\ntau=1\n[other]\n", "other"),
    ("not an ini file", "<config>"),
])
def test_config_errors_name_the_field(text, needle):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert needle in str(exc.value)


def test_config_runtime_errors_name_the_entry(tmp_path):
    bad = SMALL.replace("c = 1\neps = 1e-6", "c = 100\neps = 1e-6")
    with pytest.raises(ConfigError) as exc:
        run_experiment(parse_config(bad), output_dir=tmp_path)
    assert "entry:DS-SG" in str(exc.value) and "kappa" in str(exc.value)
    bad = SMALL.replace("alpha1 = 0.1", "alpha1 = lots")
    with pytest.raises(ConfigError) as exc:
        run_experiment(parse_config(bad), output_dir=tmp_path)
    assert "alpha1" in str(exc.value)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.ini")


def test_all_presets_parse():
    for name in PRESETS:
        cfg = get_preset(name)
        assert cfg.name == name and cfg.budget == 100000 and cfg.seed == 0
    assert get_preset("fig2", budget=50).budget == 50
    with pytest.raises(KeyError):
        preset_text("fig9")


def test_tuned_parameters_in_presets():
    fig2 = {e.label: e for e in get_preset("fig2").entries}
    assert fig2["DS-SG"].params.float("c") == 22
    assert fig2["RSG"].params.float("c") == 15
    assert fig2["Shor"].params.float("c") == 11
    assert fig2["DS-SG"].params.float("beta") == 4 and fig2["DS-SG"].params.float("eps") == 1e-5
    fig1 = get_preset("fig1")
    assert fig1.problem.int("m") == 100 and fig1.problem.int("n") == 50 and fig1.problem.float("tau") == 1
    fig5 = get_preset("fig5")
    assert fig5.problem.float("tau") == 2
    r2 = {e.label: e for e in fig5.entries}["R2SG"]
    assert r2.params.float("theta_hat") == 0.5
    assert {e.label: e for e in get_preset("fig3").entries}["R2SG"].params.float("theta_hat") == 0.8


# -- datasets -----------------------------------------------------------------

def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_libsvm_basic(tmp_path):
    p = _write(tmp_path, "d.txt", "1 1:0.5 3:-1\n-1 2:2 # comment\n\n1 1:1e-1\n")
    X, y = load_libsvm(p)
    assert X.shape == (3, 3)
    assert np.array_equal(X[0], [0.5, 0, -1]) and np.array_equal(X[1], [0, 2, 0])
    assert np.array_equal(y, [1, -1, 1])
    X, y = load_libsvm(p, m_limit=2)
    assert X.shape == (2, 3)
    X, _ = load_libsvm(p, n_features=5)
    assert X.shape == (3, 5)


def test_libsvm_glass_grouping(tmp_path):
    p = _write(tmp_path, "g.txt", "1 1:1\n2 1:1\n3 2:1\n5 1:1\n6 1:1\n7 1:1\n")
    _, y = load_libsvm(p, label_grouping="glass")
    assert list(y) == [-1, -1, -1, 1, 1, 1]
    p = _write(tmp_path, "g4.txt", "1 1:1\n4 1:1\n")
    with pytest.raises(LibsvmFormatError, match=":2:"):
        load_libsvm(p, label_grouping="glass")


@pytest.mark.parametrize("text,needle", [
    ("", "no data rows"),
    ("# only a comment\n", "no data rows"),
    ("1 1:0.5\nabc 1:1\n", ":2:"),
    ("1 1:0.5\n1 2:1\n1 0:1\n", ":3:"),
    ("1 1-0.5\n", ":1:"),
    ("1 1:x\n", ":1:"),
])
def test_libsvm_errors_carry_line_numbers(tmp_path, text, needle):
    p = _write(tmp_path, "bad.txt", text)
    with pytest.raises(LibsvmFormatError) as exc:
        load_libsvm(p)
    assert needle in str(exc.value)


def test_libsvm_resolves_data_root(tmp_path, monkeypatch):
    _write(tmp_path, "rel.txt", "1 1:1\n")
    monkeypatch.setenv("HEBSG_DATA", str(tmp_path))
    X, _ = load_libsvm("rel.txt")
    assert X.shape == (1, 1)


def test_missing_dataset_is_config_error(tmp_path, monkeypatch):
    monkeypatch.setenv("HEBSG_DATA", str(tmp_path))
    with pytest.raises(ConfigError, match="dataset"):
        build_problem(get_preset("fig4"))


def test_libsvm_problem_build(tmp_path, monkeypatch):
    rng = np.random.default_rng(0)
    lines = [f"{v:.6f} " + " ".join(f"{j + 1}:{x:.6f}" for j, x in enumerate(rng.uniform(-1, 1, 6)))
             for v in rng.standard_normal(120)]
    _write(tmp_path, "space_ga_scale", "\n".join(lines) + "\n")
    monkeypatch.setenv("HEBSG_DATA", str(tmp_path))
    built = build_problem(get_preset("fig4"))
    assert built.instance.dim == 6
    assert built.instance.diameter_sq == 4 * 5 ** 2


# -- traces -------------------------------------------------------------------

def test_trace_csv_roundtrip(tmp_path):
    prob = make_l1_norm_problem(3)
    rep = generic_sg(prob, polynomial(0.1, 0.5), 40, np.full(3, 0.7))
    p = write_trace_csv(tmp_path / "t.csv", rep.trace, h_ref=0.0)
    lines = p.read_text().splitlines()
    assert lines[0] == ",".join(HEADER)
    assert lines[-1].split(",")[1] == "" and lines[-1].split(",")[5] == ""
    tr, gap = read_trace_csv(p)
    assert np.array_equal(tr.obj, rep.trace.obj)
    assert np.array_equal(tr.dist_sq, rep.trace.dist_sq)
    assert np.array_equal(gap, rep.trace.gap(0.0))
    assert np.array_equal(tr.k, rep.trace.k)


def test_trace_csv_uninstrumented_and_thinned(tmp_path):
    inst = make_random_lad(10, 3, 1.0, 0).instance()
    rep = fixed_sg(inst, 25, 0.01, np.zeros(3))
    p = write_trace_csv(tmp_path / "t.csv", rep.trace, thin=10)
    rows = [r.split(",") for r in p.read_text().splitlines()[1:]]
    assert [r[0] for r in rows] == ["1", "11", "21", "26"]
    assert all(r[3] == "" and r[4] == "" for r in rows)
    tr, gap = read_trace_csv(p)
    assert tr.dist_sq is None and gap is None


def test_trace_csv_17_digits(tmp_path):
    inst = make_random_lad(10, 3, 1.0, 0).instance()
    rep = fixed_sg(inst, 3, 0.0123456789, np.zeros(3))
    p = write_trace_csv(tmp_path / "t.csv", rep.trace)
    first = p.read_text().splitlines()[1].split(",")
    assert float(first[1]) == 0.0123456789
    assert first[2] == format(rep.trace.obj[0], ".17g")


def test_read_trace_rejects_bad_header(tmp_path):
    p = _write(tmp_path, "x.csv", "a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_trace_csv(p)


# -- plots --------------------------------------------------------------------

def test_emit_plot_single_and_deterministic(tmp_path):
    prob = make_l1_norm_problem(2)
    rep = generic_sg(prob, polynomial(0.1, 0.5), 3000, np.array([0.5, -0.5]))
    a = emit_plot({"run": rep.trace}, tmp_path / "a.svg", y="dist_sq", x="logk")
    b = emit_plot({"run": rep.trace}, tmp_path / "b.svg", y="dist_sq", x="logk")
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().lstrip().startswith("<?xml")
    c = emit_plot({"run": rep.trace}, tmp_path / "c.svg", y="gap", h_ref=0.0, best_so_far=True)
    assert c.exists()


def test_emit_plot_errors(tmp_path):
    with pytest.raises(ValueError):
        emit_plot({}, tmp_path / "x.svg")
    inst = make_random_lad(10, 3, 1.0, 0).instance()
    rep = fixed_sg(inst, 5, 0.01, np.zeros(3))
    with pytest.raises(ValueError):
        emit_plot({"r": rep.trace}, tmp_path / "x.svg", y="dist_sq")
    with pytest.raises(ValueError):
        emit_plot({"r": rep.trace}, tmp_path / "x.svg", y="gap")


# -- runner -------------------------------------------------------------------

def test_run_small_experiment(tmp_path):
    res = run_experiment(parse_config(SMALL), output_dir=tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["DS-SG.csv", "decay.csv", "shor.csv", "small_dist_sq_k.svg", "small_dist_sq_logk.svg",
                     "summary.csv"]
    assert res.h_ref == 0.0
    for rep in res.reports.values():
        assert rep.subgrad_evals <= 400
    # every entry starts from the shared corner point
    assert {r.trace.obj[0] for r in res.reports.values()} == {2.0}
    summary = (tmp_path / "summary.csv").read_text().splitlines()
    assert summary[0].startswith("label,method,evals")
    assert len(summary) == 4


def test_rerun_is_byte_identical(tmp_path, cache_root):
    cfg = parse_config(SMALL_LAD)
    run_experiment(cfg, output_dir=tmp_path / "a")
    run_experiment(cfg, output_dir=tmp_path / "b", use_cache=False)
    for p in sorted((tmp_path / "a").iterdir()):
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes(), p.name


def test_reference_matches_lp_and_bounds_every_run(tmp_path, cache_root):
    from oracles import lad_lp
    res = run_experiment(parse_config(SMALL_LAD), output_dir=tmp_path)
    lad = make_random_lad(20, 6, 1.0, 1)
    h_lp, _ = lad_lp(lad.E, lad.b, 1.0)
    assert abs(res.h_ref - h_lp) <= 1e-8 * max(1.0, h_lp)
    for rep in res.reports.values():
        assert rep.best_obj >= res.h_ref - 1e-9


def test_initial_point_choices():
    cfg = parse_config(SMALL)
    inst = build_problem(cfg).instance
    cfg.x_init = "zero"
    assert not initial_point(cfg, inst).any()
    cfg.x_init = "corner"
    assert np.all(initial_point(cfg, inst) == 0.5)
    cfg.x_init = "0.1,0.2,0.3,0.4"
    assert np.allclose(initial_point(cfg, inst), [0.1, 0.2, 0.3, 0.4])
    cfg.x_init = "0.1,0.2"
    with pytest.raises(ConfigError):
        initial_point(cfg, inst)
    cfg.x_init = "9,9,9,9"
    with pytest.raises(ConfigError):
        run_experiment(cfg, write=False)


def test_stairs_to_fill():
    cfg = DsSgConfig(4.0, 1, 1.0, HebParams(1, 1, 2))
    m = stairs_to_fill(cfg, 100)
    assert m * 17 >= 100 > (m - 1) * 17


def test_slug():
    assert slug("alpha=0.1k^-0.99") == "alpha_0.1k_-0.99"
    assert slug("DS-SG c=100") == "DS-SG_c_100"
    assert slug("///") == "entry"


# -- CLI ----------------------------------------------------------------------

def test_cli_run_fit_bounds(tmp_path, capsys):
    cfg = tmp_path / "small.ini"
    cfg.write_text(SMALL)
    out = tmp_path / "out"
    assert cli.main(["run", str(cfg), "--out", str(out)]) == 0
    assert (out / "decay.csv").exists()
    capsys.readouterr()
    assert cli.main(["fit", str(out / "decay.csv"), "--k-min", "50"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "quantity,k_min,k_max,slope,constant,points"
    assert float(lines[1].split(",")[3]) < 0
    assert cli.main(["bounds", str(cfg)]) == 0
    text = capsys.readouterr().out
    assert "DS-SG,ds_sg,eval_bound," in text and "DS-SG,ds_sg,stairs,11" in text


def test_cli_preset_show(capsys):
    assert cli.main(["preset", "fig2", "--show"]) == 0
    assert "c = 22" in capsys.readouterr().out


def test_cli_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nseed=1\n")
    assert cli.main(["run", str(bad)]) == 2
    assert "error" in capsys.readouterr().err
    assert cli.main(["fit", str(tmp_path / "missing.csv")]) == 2


def test_degenerate_plot_is_skipped(tmp_path):
    cfg = parse_config(SMALL.replace("x_init = corner\n", ""))
    with pytest.warns(UserWarning, match="skipped plot"):
        res = run_experiment(cfg, output_dir=tmp_path)
    assert not any(p.suffix == ".svg" for p in res.files)
