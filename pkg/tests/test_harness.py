import json
import math

import jsonschema
import numpy as np
import pytest

from palign import cumulants as cm
from palign import harness as hx
from palign.models import DomainError, ModelParams


def small_config(**kw):
    base = dict(model="Gaussian", n=[6], m=[2, 3], rho=[0.5, 0.99], trials=6, master_seed=7)
    base.update(kw)
    return hx.SweepConfig(**base)


def wilson_roots(k, n, z=hx.WILSON_Z):
    """Roots of (k/n - q)^2 = z^2 q (1 - q) / n."""
    ph = k / n
    a = 1 + z * z / n
    b = -(2 * ph + z * z / n)
    return sorted(np.roots([a, b, ph * ph]).real)


@pytest.mark.parametrize("k,n", [(7, 20), (1, 3), (50, 100), (199, 200)])
def test_wilson_matches_quadratic(k, n):
    lo, hi = hx.wilson_interval(k, n)
    rlo, rhi = wilson_roots(k, n)
    assert lo == pytest.approx(rlo, abs=1e-12)
    assert hi == pytest.approx(rhi, abs=1e-12)


def test_wilson_edges():
    assert hx.wilson_interval(0, 10)[0] == 0.0
    assert hx.wilson_interval(10, 10)[1] == 1.0
    assert all(math.isnan(v) for v in hx.wilson_interval(0, 0))


def test_config_rejects_unknown_keys():
    with pytest.raises(DomainError):
        hx.SweepConfig.from_dict({"model": "ER", "n": 5, "m": 2, "rho": 0.5, "p": 0.3, "colour": 1})
    with pytest.raises(DomainError):
        hx.SweepConfig(model="ER", n=[5], m=[2], rho=[0.5])


def test_points_order_and_default_score():
    cfg = small_config(m=[2, 3], rho=[0.5, 1.0])
    pts = cfg.points()
    assert [(p.params.rho, p.params.m) for p in pts] == [(0.5, 2), (0.5, 3), (1.0, 2), (1.0, 3)]
    assert pts[0].score == "Product" and pts[2].score == "NegHalfSquaredDiff"


def test_trial_seed_ignores_grid_position():
    a = small_config(m=[2, 3]).points()[1]
    b = small_config(m=[3]).points()[0]
    assert a.index != b.index
    assert hx.trial_seed(7, a, 4) == hx.trial_seed(7, b, 4)


def test_sweep_deterministic_across_jobs():
    a = hx.rows_to_csv(hx.sweep(small_config(jobs=1)))
    b = hx.rows_to_csv(hx.sweep(small_config(jobs=2)))
    assert a == b


def test_rho_one_rows_are_all_exact():
    rows = hx.sweep(small_config(rho=[1.0], m=[3, 4]))
    assert all(r.exact_rate == 1.0 and r.completed == r.trials for r in rows)


def test_budget_marks_trials_skipped():
    recs = []
    rows = hx.sweep(small_config(m=[4], rho=[0.5], budget=5, trials=3), recs)
    assert rows[0].skipped == 3 and math.isnan(rows[0].exact_rate)
    assert all(r.skipped and r.error for r in recs)


def test_csv_roundtrip(tmp_path):
    rows = hx.sweep(small_config())
    path = tmp_path / "rows.csv"
    hx.emit(rows, "csv", path)
    assert path.read_bytes().count(b"\r\n") == len(rows) + 1
    assert hx.read_csv(path) == rows


def test_json_matches_schema():
    rows = hx.sweep(small_config(m=[4], rho=[0.5], budget=5, trials=2))
    data = json.loads(hx.emit(rows, "json"))
    with open(hx.schema_path(), encoding="utf-8") as fh:
        jsonschema.validate(data, json.load(fh))
    assert data[0]["exact_rate"] is None


def test_svg_and_bad_format():
    rows = hx.sweep(small_config(trials=2))
    svg = hx.emit(rows, "svg")
    assert svg.startswith("<svg") and svg.count("<circle") == len(rows)
    with pytest.raises(DomainError):
        hx.emit(rows, "xlsx")
    with pytest.raises(DomainError):
        hx.rows_to_svg([])


def test_emit_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        hx.emit(hx.sweep(small_config(trials=1)), "csv", tmp_path / "missing" / "x.csv")


def test_crossing_and_monotone():
    rows = hx.sweep(small_config(trials=1))
    fake = [r.__class__(**{**r.to_dict(), "exact_rate": rate}) for r, rate in zip(rows, (0.0, 0.6, 0.5, 1.0))]
    cross = hx.crossing_m(fake)
    assert cross == {0.5: 3, 0.99: 2}
    assert hx.is_nonincreasing(cross)
    assert not hx.is_nonincreasing({0.5: 2, 0.9: math.inf})


def test_threshold_ratio():
    prm = ModelParams(n=100, m=10, rho=1.0, model="Gaussian")
    assert hx.threshold_ratio(prm, 0.5) == pytest.approx(10 / 1100)


def test_separation_between_rho_levels():
    rows = hx.sweep(small_config(n=[7], m=[5], rho=[0.3, 1.0], score="NegHalfSquaredDiff", trials=20))
    assert rows[1].exact_rate - rows[0].exact_rate >= 0.5


def test_phase_diagram_grid():
    grid = hx.phase_diagram_grid(3)
    assert len(grid) == 9
    assert {"a1", "a2", "a3_partial", "a3_exact"} <= set(grid[0])


def test_clopper_pearson():
    assert hx.clopper_pearson_upper(0, 100) == pytest.approx(1 - 0.01 ** (1 / 100))
    assert hx.clopper_pearson_upper(5, 5) == 1.0


def test_tail_checks_pass():
    checks = hx.tail_domination_checks(seed=1, samples=20_000)
    assert len(checks) == 15
    bad = [(c.name, c.point, c.upper99, math.exp(c.log_bound)) for c in checks if not c.ok]
    assert not bad
    assert all(c.log_bound < 0 for c in checks)


def test_verify_all_pass_and_fault():
    rep = hx.verify_all(seed=0, mc_samples=20_000)
    assert rep.ok, rep.to_json()
    bad = hx.verify_all(seed=0, grid=cm.default_kappa_grid()[:5], faults=("kc2",))
    assert not bad.ok and bad.exit_status == 1


def test_verify_all_empty_grid_warns():
    with pytest.warns(RuntimeWarning):
        rep = hx.verify_all(grid=[])
    assert any(c["check"] == "kappa_chain" and c["ok"] for c in rep.checks)
