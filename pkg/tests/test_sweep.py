import json

import numpy as np
import pytest

from maxrobust.norms import NormKind
from maxrobust.sweep import (
    SWEEP_COLUMNS,
    SweepSpec,
    config_hash,
    eval_norms_for,
    load_records_csv,
    method_uses_bias,
    parse_method,
    resolve_workers,
    run_cell,
    run_sweep,
    summarize_by_ratio,
    sweep_cells,
)


def test_parse_method_families():
    assert parse_method("gd") == ("plain", NormKind.L2)
    assert parse_method("signgd") == ("plain", NormKind.LINF)
    assert parse_method("cd") == ("plain", NormKind.L1)
    assert parse_method("cd-ls") == ("plain-ls", NormKind.L1)
    assert parse_method("prox-fourier-l1") == ("prox", NormKind.FOURIER_L1)
    assert parse_method("conv-gd") == ("conv", None)
    assert parse_method("oracle") == ("oracle", None)
    assert parse_method("adv-l2:1.5") == ("adv", (NormKind.L2, 1.5))
    assert parse_method("adv-linf") == ("adv", (NormKind.LINF, 1.0))
    with pytest.raises(ValueError):
        parse_method("sgd")
    with pytest.raises(ValueError):
        parse_method("adv-l2:-1")


def test_spec_from_dict_round_trip_and_validation():
    spec = SweepSpec.from_dict(
        {"d": 8, "ratios": [1, 2], "seeds": [0], "methods": ["gd"], "steps": 100}
    )
    assert spec.ratios == (1, 2)
    assert spec.seeds == (0,)
    assert SweepSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ValueError):
        SweepSpec.from_dict({"dd": 8})
    with pytest.raises(ValueError):
        SweepSpec.from_dict({"methods": ["warp"]})
    with pytest.raises(ValueError):
        SweepSpec.from_dict({"ratios": [0]})


def test_config_hash_tracks_content():
    a = SweepSpec()
    b = SweepSpec()
    assert config_hash(a) == config_hash(b)
    c = SweepSpec(steps=9999)
    assert config_hash(a) != config_hash(c)


def test_step_size_for_matches_method_geometry():
    spec = SweepSpec()
    assert spec.step_size_for(NormKind.L2) == spec.step_size
    assert spec.step_size_for(NormKind.LINF) == spec.signgd_step_size
    assert spec.step_size_for(NormKind.L1) == spec.cd_step_size


def test_eval_norms_selection():
    spec = SweepSpec(methods=("gd", "conv-gd", "prox-fourier-l1", "adv-l2:1.0"))
    assert eval_norms_for("gd", spec) == (NormKind.L1, NormKind.L2, NormKind.LINF)
    assert eval_norms_for("conv-gd", spec) == (NormKind.FOURIER_LINF,)
    assert eval_norms_for("prox-fourier-l1", spec) == (NormKind.FOURIER_LINF,)
    assert eval_norms_for("adv-l2:1.0", spec) == (NormKind.L2,)


def test_method_uses_bias_respects_fourier_geometry():
    spec_aug = SweepSpec(augment=True, methods=("gd", "conv-gd", "prox-fourier-l1"))
    assert method_uses_bias("gd", spec_aug)
    assert not method_uses_bias("conv-gd", spec_aug)
    assert not method_uses_bias("prox-fourier-l1", spec_aug)
    spec_plain = SweepSpec(augment=False)
    assert not method_uses_bias("gd", spec_plain)


def test_sweep_cells_enumerate_the_grid():
    spec = SweepSpec(d=12, ratios=(1, 3), seeds=(0, 7), methods=("gd", "cd"))
    cells = sweep_cells(spec)
    assert len(cells) == 2 * 2 * 2
    assert ("gd", 12, 12, 0) in cells
    assert ("cd", 12, 4, 7) in cells


def test_resolve_workers_precedence(monkeypatch):
    monkeypatch.delenv("MAXROBUST_WORKERS", raising=False)
    assert resolve_workers(None) == 1
    assert resolve_workers(3) == 3
    assert resolve_workers(0) == 1
    monkeypatch.setenv("MAXROBUST_WORKERS", "5")
    assert resolve_workers(None) == 5
    assert resolve_workers(2) == 2


def test_oracle_rows_are_their_own_reference():
    spec = SweepSpec(
        d=6, ratios=(1,), seeds=(0,), methods=("oracle",), attack_norms=("l2",),
        steps=100, oracle_tol=1e-6,
    )
    records = run_cell("oracle", 6, 6, 0, spec)
    assert len(records) == 1
    rec = records[0]
    assert rec.margin == rec.eps_hat == rec.oracle_margin
    assert rec.margin_ratio == pytest.approx(1.0)
    assert rec.eps_ratio == pytest.approx(1.0)
    assert rec.oracle_converged


def _tiny_spec():
    return SweepSpec(
        d=8, ratios=(1, 2), seeds=(0,), methods=("gd", "signgd"),
        attack_norms=("l1", "l2"), steps=400, oracle_tol=1e-6,
    )


def test_run_sweep_outputs_are_deterministic(tmp_path):
    spec = _tiny_spec()
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    run_sweep(spec, a_dir)
    run_sweep(spec, b_dir)
    assert (a_dir / "records.csv").read_bytes() == (b_dir / "records.csv").read_bytes()

    manifest = json.loads((a_dir / "manifest.json").read_text())
    assert manifest["config_sha256"] == config_hash(spec)
    assert manifest["config"] == spec.to_dict()
    assert manifest["record_count"] == 2 * 2 * 2  # methods x ratios x norms
    assert "total_runtime_s" in manifest["non_reproducible"]
    assert manifest["numpy_version"] == np.__version__


def test_records_respect_oracle_upper_bound(tmp_path):
    # trained models can never beat the certified optimum; with a tight
    # oracle tolerance the ratio columns must stay at or below 1
    records = run_sweep(_tiny_spec(), tmp_path / "out")
    assert records == sorted(
        records, key=lambda r: (r.method, r.attack_norm, r.d, r.n, r.seed)
    )
    for rec in records:
        assert rec.oracle_converged
        assert rec.margin_ratio <= 1 + 1e-6
        assert rec.eps_ratio <= 1 + 1e-6
        assert rec.eps_hat <= rec.margin * (1 + 1e-6)


def test_load_records_csv_restores_types(tmp_path):
    run_sweep(_tiny_spec(), tmp_path / "out")
    rows = load_records_csv(tmp_path / "out" / "records.csv")
    assert len(rows) == 8
    row = rows[0]
    assert list(row.keys()) == list(SWEEP_COLUMNS)
    assert isinstance(row["d"], int)
    assert isinstance(row["margin"], float)
    assert isinstance(row["oracle_converged"], bool)
    # repr floats round-trip exactly through the file
    raw = (tmp_path / "out" / "records.csv").read_text().splitlines()[1].split(",")
    assert float(raw[6]) == row["margin"]


def test_summarize_by_ratio_groups_and_orders(tmp_path):
    records = run_sweep(_tiny_spec(), tmp_path / "out")
    table = summarize_by_ratio(records, "gd", "l2")
    ratios = [row[0] for row in table]
    assert ratios == [1.0, 2.0]
    for _, mean, spread in table:
        assert 0 <= mean <= 1 + 1e-6
        assert spread >= 0
    # dict rows from the CSV loader summarize identically
    rows = load_records_csv(tmp_path / "out" / "records.csv")
    assert summarize_by_ratio(rows, "gd", "l2") == table
