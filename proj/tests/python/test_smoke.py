"""Smoke tests for the python bindings and the CLI binary."""

import json
import math
import os
import subprocess

import pytest

import _fpolariton as fp


def test_special_functions():
    assert fp.bessel_j(0, 0.0) == 1.0
    assert fp.bessel_j(1, 0.9) == pytest.approx(0.4059495460788057, abs=1e-14)
    assert fp.assoc_laguerre(2, 0, 1.0) == pytest.approx(-0.5, abs=1e-14)
    assert fp.hyp2f1_terminating(1, 1, 2.0) == pytest.approx(0.0, abs=1e-15)
    assert fp.ln_factorial(5) == pytest.approx(math.log(120.0), rel=1e-14)


def test_overlaps():
    assert fp.overlap_closed_form(0, 0, 2.0) == pytest.approx(8.0 / 9.0, rel=1e-13)
    quad = fp.overlap_quadrature_oracle(1, 1, 2.0)
    assert fp.overlap_closed_form(1, 1, 2.0) == pytest.approx(quad, rel=1e-8)
    geom = fp.TrapGeometry(delta=1000.0, n_cavity_modes=3, n_atom_modes=2)
    matrix = fp.build_overlap_matrix(geom)
    assert matrix.shape == (3, 2)
    assert abs(matrix[2, 0] - 1.0) < 1e-5


def test_single_mode_threshold():
    spec = fp.SystemSpec(
        geometry=fp.TrapGeometry(delta=1e6, n_cavity_modes=1),
        delta0=0.8,
        kappa=0.02,
    )
    kind, lam_c, pole = fp.critical_coupling(spec)
    analytic = fp.critical_coupling_single_mode(0.8, 0.02)
    assert kind == fp.InstabilityKind.ZeroFrequency
    assert lam_c == pytest.approx(analytic, rel=1e-6)
    assert abs(pole.real) < 1e-6


def test_bare_lorentzian_and_poles():
    spec = fp.SystemSpec(
        geometry=fp.TrapGeometry(delta=1000.0, n_cavity_modes=2),
        drive=fp.DriveSpec(b_m=0.9, epsilon=0.19),
        delta0=0.8,
        kappa=0.02,
        lambda_=0.0,
    )
    a = fp.spectral_function(spec, 0.8)
    assert a[0, 0].real == pytest.approx(2.0 / 0.02, rel=1e-10)
    poles = fp.find_poles(spec)
    assert len(poles) == 4
    expected = sorted([0.8, 0.61, -0.8, -0.61])
    found = sorted(p[0].real for p in poles)
    for a_, b_ in zip(expected, found):
        assert a_ == pytest.approx(b_, abs=1e-12)
    assert all(p[0].imag == pytest.approx(-0.02, abs=1e-12) for p in poles)


def test_mode_weights_and_profile():
    spec = fp.SystemSpec(
        geometry=fp.TrapGeometry(delta=1000.0, n_cavity_modes=4),
        drive=fp.DriveSpec(b_m=0.9, epsilon=0.19),
        delta0=0.8,
        kappa=0.02,
        lambda_=0.29,
        eta_atom=0.0,
    )
    weights, vector, min_eig = fp.mode_weights(spec, 0.62)
    assert weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert weights[3] < 0.05
    profile = fp.intensity_profile(vector[:4], fp.radial_render_grid())
    assert max(profile) == pytest.approx(1.0)


def test_cli_runs():
    cli = os.environ.get("FPOL_CLI")
    if not cli:
        pytest.skip("FPOL_CLI not set")
    out = subprocess.run([cli, "--version"], capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.strip() == fp.__version__


def test_cli_poles_json(tmp_path):
    cli = os.environ.get("FPOL_CLI")
    if not cli:
        pytest.skip("FPOL_CLI not set")
    config = tmp_path / "run.cfg"
    config.write_text(
        "[cavity]\ndelta0 = 0.8\nkappa = 0.02\nn_modes = 2\n"
        "[drive]\nb_m = 0.9\nepsilon = 0.19\n"
        "[medium]\nwaist_ratio = 1000\n"
        "[coupling]\nlambda = 0.0\n"
        "[output]\nprefix = smoke\n"
    )
    out = subprocess.run(
        [cli, "poles", "--config", str(config), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0
    doc = json.loads((tmp_path / "smoke_poles.json").read_text())
    assert doc["lambda"] == 0.0
    res = sorted(round(p["re"], 6) for p in doc["poles"])
    assert res == [-0.8, -0.61, 0.61, 0.8]
