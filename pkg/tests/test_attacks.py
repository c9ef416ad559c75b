import csv

import numpy as np
import pytest

from maxrobust.attacks import (
    PGD_KINDS,
    REPORT_COLUMNS,
    AttackConfig,
    attack_report,
    fourier_linf_attack,
    linear_worst_case,
    make_input_grad,
    max_robust_eps,
    pgd_attack,
    robust_error,
    worst_case_drop,
    write_attack_report,
)
from maxrobust.data import generate_gaussian_separable
from maxrobust.fourier import band_mask, dft
from maxrobust.models import LinearModel, decision, margin
from maxrobust.norms import NormKind, dual, norm

from conftest import rng


def test_worst_case_drop_hand_values():
    w = np.array([3.0, 4.0])
    assert worst_case_drop(w, NormKind.L2, 1.0) == pytest.approx(5.0)
    assert worst_case_drop(w, NormKind.L1, 1.0) == pytest.approx(4.0)
    assert worst_case_drop(w, NormKind.LINF, 1.0) == pytest.approx(7.0)
    assert worst_case_drop(w, NormKind.L2, 0.5) == pytest.approx(2.5)


def test_worst_case_drop_with_band_mask():
    # masked fourier-linf budget: eps per active bin times that bin's |w hat|
    w = np.array([3.0, 4.0])
    mags = np.abs(dft(w).coeffs)
    mask = np.array([1.0, 0.0])
    got = worst_case_drop(w, NormKind.FOURIER_LINF, 2.0, band_mask=mask)
    assert got == pytest.approx(2.0 * mags[0])


def test_linear_worst_case_achieves_the_drop_exactly():
    g = rng(0)
    for kind in NormKind:
        for _ in range(15):
            w = g.standard_normal(8)
            x = g.standard_normal(8)
            y = float(g.choice([-1.0, 1.0]))
            eps = float(g.uniform(0.1, 2.0))
            model = LinearModel(w=w)
            delta = linear_worst_case(model, x, y, kind, eps)
            drop = y * decision(model, x) - y * decision(model, x + delta)
            assert drop == pytest.approx(worst_case_drop(w, kind, eps), rel=1e-9)
            assert norm(delta, kind) <= eps * (1 + 1e-9)


def test_linear_worst_case_preserves_augmented_coordinate(ds_aug):
    g = rng(1)
    w = g.standard_normal(ds_aug.ambient_dim)
    model = LinearModel(w=w)
    for kind in NormKind:
        x = ds_aug.X[0]
        delta = linear_worst_case(model, x, 1.0, kind, 0.5, preserve_augmented=True)
        assert delta[-1] == 0.0
        # the achieved drop still matches the attackable-coordinate budget
        drop = decision(model, x) - decision(model, x + delta)
        assert drop == pytest.approx(worst_case_drop(w[:-1], kind, 0.5), rel=1e-9)


def test_make_input_grad_matches_analytic_form():
    w = np.array([1.0, -2.0, 0.5])
    model = LinearModel(w=w)
    grad = make_input_grad(model, y=1.0)
    x = np.array([0.3, 0.1, -0.2])
    # exponential loss: d/dx exp(-y w.x) = -y exp(-y w.x) w
    want = -np.exp(-float(w @ x)) * w
    np.testing.assert_allclose(grad(x), want, rtol=1e-12)


def test_pgd_reaches_closed_form_drop():
    g = rng(2)
    tol = {NormKind.L1: 0.05, NormKind.L2: 0.01, NormKind.LINF: 0.01,
           NormKind.FOURIER_LINF: 0.05}
    for kind in PGD_KINDS:
        for _ in range(5):
            w = g.standard_normal(8)
            x = g.standard_normal(8)
            y = float(g.choice([-1.0, 1.0]))
            eps = float(g.uniform(0.2, 1.0))
            model = LinearModel(w=w)
            x_adv = pgd_attack(model, x, y, kind, eps, steps=60)
            assert norm(x_adv - x, kind) <= eps * (1 + 1e-6)
            drop = y * decision(model, x) - y * decision(model, x_adv)
            best = worst_case_drop(w, kind, eps)
            assert drop >= (1 - tol[kind]) * best


def test_pgd_rejects_unsupported_norm():
    model = LinearModel(w=np.ones(4))
    with pytest.raises(ValueError):
        pgd_attack(model, np.zeros(4), 1.0, NormKind.FOURIER_L1, 0.5)


def test_single_step_fourier_attack_drop_is_exact():
    g = rng(3)
    for _ in range(20):
        w = g.standard_normal(8)
        x = g.standard_normal(8)
        y = float(g.choice([-1.0, 1.0]))
        eps = float(g.uniform(0.1, 1.5))
        model = LinearModel(w=w)
        grad = make_input_grad(model, y)
        x_adv = fourier_linf_attack(grad, x, y, eps, steps=1)
        drop = y * decision(model, x) - y * decision(model, x_adv)
        want = eps * float(np.sum(np.abs(dft(w).coeffs)))
        assert drop == pytest.approx(want, rel=1e-9)
        assert norm(x_adv - x, NormKind.FOURIER_LINF) <= eps * (1 + 1e-9)


def test_fourier_attack_masked_bins_stay_untouched():
    g = rng(4)
    w = g.standard_normal(8)
    x = g.standard_normal(8)
    model = LinearModel(w=w)
    mask = band_mask(8, "low", 2)
    x_adv = fourier_linf_attack(make_input_grad(model, 1.0), x, 1.0, 0.5, band_mask=mask)
    delta_hat = dft(x_adv - x).coeffs
    np.testing.assert_allclose(np.abs(delta_hat)[mask == 0.0], 0.0, atol=1e-12)
    assert np.max(np.abs(delta_hat)) <= 0.5 * (1 + 1e-9)
    # masked drop matches the masked budget
    drop = decision(model, x) - decision(model, x_adv)
    want = 0.5 * float(np.sum(mask * np.abs(dft(w).coeffs)))
    assert drop == pytest.approx(want, rel=1e-9)


def test_fourier_attack_zero_bins_stay_untouched():
    # a weight with empty spectrum bins gives the attack no signal there
    w = np.zeros(8)
    w[0] = 1.0
    w = w + np.roll(w, 4)  # spectrum vanishes on odd bins
    model = LinearModel(w=w)
    mags = np.abs(dft(w).coeffs)
    dead = mags < 1e-12
    assert np.any(dead)
    x = rng(5).standard_normal(8)
    x_adv = fourier_linf_attack(make_input_grad(model, 1.0), x, 1.0, 0.7, steps=1)
    delta_hat = np.abs(dft(x_adv - x).coeffs)
    np.testing.assert_allclose(delta_hat[dead], 0.0, atol=1e-12)


def test_multi_step_fourier_projected_stays_in_ball():
    g = rng(6)
    w = g.standard_normal(8)
    x = g.standard_normal(8)
    model = LinearModel(w=w)
    eps = 0.4
    x_adv = fourier_linf_attack(make_input_grad(model, 1.0), x, 1.0, eps, steps=3)
    assert norm(x_adv - x, NormKind.FOURIER_LINF) <= eps * (1 + 1e-9)


def test_multi_step_fourier_unprojected_variant_can_exceed_ball():
    # the literal accumulate-without-projection variant overshoots by steps
    g = rng(7)
    w = g.standard_normal(8)
    x = g.standard_normal(8)
    model = LinearModel(w=w)
    eps = 0.4
    x_adv = fourier_linf_attack(
        make_input_grad(model, 1.0), x, 1.0, eps, steps=3, project=False
    )
    got = norm(x_adv - x, NormKind.FOURIER_LINF)
    assert got == pytest.approx(3 * eps, rel=1e-9)


def test_robust_error_counts_flips_exactly():
    ds_X = np.array([[2.0, 0.0], [0.5, 0.0], [-3.0, 0.0]])
    ds_y = np.array([1, 1, -1])
    from maxrobust.data import Dataset

    ds = Dataset(X=ds_X, y=ds_y, teacher=np.array([1.0, 0.0]), seed=0, d=2, n=3,
                 augmented=False)
    model = LinearModel(w=np.array([1.0, 0.0]))
    # margins are 2, 0.5, 3; an l2 attack of eps=1 flips only the middle point
    cfg = AttackConfig(norm_kind=NormKind.L2, eps=1.0)
    assert robust_error(model, ds, cfg) == pytest.approx(1.0 / 3.0)
    cfg = AttackConfig(norm_kind=NormKind.L2, eps=2.5)
    assert robust_error(model, ds, cfg) == pytest.approx(2.0 / 3.0)
    cfg = AttackConfig(norm_kind=NormKind.L2, eps=0.1)
    assert robust_error(model, ds, cfg) == 0.0


def test_robust_error_pgd_close_to_closed_form():
    ds = generate_gaussian_separable(d=6, n=20, seed=8, augment=False)
    g = rng(8)
    model = LinearModel(w=g.standard_normal(6))
    eps = 0.3 * abs(margin(model, ds, NormKind.L2))
    exact = robust_error(model, ds, AttackConfig(norm_kind=NormKind.L2, eps=eps))
    emp = robust_error(
        model, ds, AttackConfig(norm_kind=NormKind.L2, eps=eps, method="pgd", steps=80)
    )
    assert emp <= exact + 1e-12  # empirical attack can only do worse
    assert emp >= exact - 0.101  # but pgd on linear models is nearly tight


def test_max_robust_eps_brackets_the_margin(ds_canonical):
    model = LinearModel(w=np.array([1.0, 0.0]))
    for kind in (NormKind.L1, NormKind.L2, NormKind.LINF):
        m = margin(model, ds_canonical, kind)
        step = 0.02 * m
        got = max_robust_eps(model, ds_canonical, kind)
        assert got <= m + 1e-12
        assert got >= m - step / 16 - 1e-12


def test_max_robust_eps_duality_bridge_random_models():
    g = rng(9)
    ds = generate_gaussian_separable(d=6, n=12, seed=9, augment=False)
    for kind in (NormKind.L1, NormKind.L2, NormKind.LINF, NormKind.FOURIER_LINF):
        for _ in range(5):
            model = LinearModel(w=g.standard_normal(6))
            m = margin(model, ds, kind)
            if m <= 0:
                continue
            step = 0.02 * m
            got = max_robust_eps(model, ds, kind)
            assert abs(got - m) <= step / 16 + 1e-12


def test_max_robust_eps_zero_when_already_misclassified(ds_canonical):
    model = LinearModel(w=np.array([-1.0, 0.0]))
    assert max_robust_eps(model, ds_canonical, NormKind.L2) == 0.0


def test_preserve_augmented_never_touches_bias(ds_aug):
    g = rng(10)
    model = LinearModel(w=g.standard_normal(ds_aug.ambient_dim))
    x = ds_aug.X[0]
    delta = linear_worst_case(model, x, 1.0, NormKind.L2, 0.5, preserve_augmented=True)
    assert delta[-1] == 0.0
    attacked = [
        pgd_attack(model, x, 1.0, NormKind.L2, 0.5, steps=10, preserve_augmented=True),
        fourier_linf_attack(
            make_input_grad(model, 1.0), x, 1.0, 0.5, preserve_augmented=True
        ),
    ]
    for x_adv in attacked:
        assert x_adv[-1] == x[-1]


def test_attack_config_validation():
    with pytest.raises(ValueError):
        AttackConfig(norm_kind=NormKind.L2, eps=-1.0)
    with pytest.raises(ValueError):
        AttackConfig(norm_kind=NormKind.L2, eps=0.5, method="fgsm")
    with pytest.raises(ValueError):
        # band masks only make sense for fourier-linf attacks
        AttackConfig(norm_kind=NormKind.L2, eps=0.5, band_mask=np.ones(4))
    with pytest.raises(ValueError):
        # mask must respect hermitian symmetry
        AttackConfig(
            norm_kind=NormKind.FOURIER_LINF,
            eps=0.5,
            band_mask=np.array([1.0, 1.0, 0.0, 0.0]),
        )
    AttackConfig(norm_kind=NormKind.FOURIER_LINF, eps=0.5, band_mask=band_mask(4, "low", 1))


def test_attack_report_layout_and_roundtrip(tmp_path, ds_plain):
    g = rng(11)
    model = LinearModel(w=g.standard_normal(ds_plain.ambient_dim))
    cfg = AttackConfig(norm_kind=NormKind.L2, eps=0.3)
    rows = attack_report(model, ds_plain, cfg)
    assert len(rows) == ds_plain.n
    assert list(rows[0].keys()) == list(REPORT_COLUMNS)
    for row in rows:
        assert row["delta_l2"] <= 0.3 * (1 + 1e-9)
        flipped = row["label"] * row["adv_decision"] <= 0
        assert row["flipped"] == flipped

    path = tmp_path / "report.csv"
    write_attack_report(path, rows)
    with open(path, newline="") as fh:
        back = list(csv.DictReader(fh))
    assert len(back) == len(rows)
    assert [int(r["point"]) for r in back] == [r["point"] for r in rows]
    assert [float(r["delta_l2"]) for r in back] == [r["delta_l2"] for r in rows]
