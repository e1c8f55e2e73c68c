# SPDX-License-Identifier: Apache-2.0
# Copyright (C) 2026 nearfield project contributors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
"""Smoke tests for the python bindings and the CLI."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

import nearfield as nf


def test_geometry_round_trip():
    g = nf.build_ula(16, 0.005, 0.01)
    assert g.n == 16
    assert g.aperture == pytest.approx(15 * 0.005)
    assert nf.rayleigh_distance(g) == pytest.approx(2 * g.aperture**2 / 0.01)
    pos = g.element_positions
    assert pos.shape == (16, 3)
    assert abs(pos[:, 0].sum()) < 1e-12


def test_steering_vectors():
    g = nf.build_ula(32, 0.005, 0.01)
    far = nf.steer_far(g, 0.3)
    assert np.linalg.norm(far) == pytest.approx(1.0)
    near = nf.steer_near(g, 0.3, 0.0, 1e6 * nf.rayleigh_distance(g))
    assert np.linalg.norm(near - far) <= 1e-3


def test_channel_sampling_is_deterministic():
    g = nf.build_ula(16, 0.005, 0.01)
    cfg = nf.ChannelConfig()
    cfg.n_users = 2
    cfg.paths_per_user = 3
    cfg.distance_min = 0.1
    cfg.distance_max = 0.5
    a = nf.sample_channel(g, cfg, 7)
    b = nf.sample_channel(g, cfg, 7)
    np.testing.assert_array_equal(a.matrix, b.matrix)
    assert a.matrix.shape == (16, 2)


def test_omp_recovers_single_atom():
    g = nf.build_ula(16, 0.005, 0.01)
    d = nf.build_far_dictionary(g, 16)
    y = 2.5 * d.atoms[:, 5]
    support, coeffs = nf.omp(y, d, 1)
    assert support == [5]
    assert coeffs[0] == pytest.approx(2.5)


def test_fpn_solver_contracts():
    g = nf.build_ula(16, 0.005, 0.01)
    spec = nf.build_sensing(g, 8, nf.SensingKind.UNIT_MODULUS, 3)
    cfg = nf.FpnTrainConfig()
    cfg.hidden_mult = [2]
    cfg.seed = 5
    model = nf.make_fpn_model(spec, cfg)

    rng = np.random.default_rng(0)
    h = (rng.standard_normal(16) + 1j * rng.standard_normal(16)) / np.sqrt(2)
    y = nf.observe(spec, h, 11)
    out = nf.solve_fixed_point(model, spec, y, np.zeros(16, dtype=complex))
    assert out.trace.converged
    res = out.trace.residuals
    assert all(res[t + 1] <= 0.9 * res[t] + 1e-9 for t in range(len(res) - 1))


def test_beamformers_and_sum_rate():
    rng = np.random.default_rng(1)
    h = (rng.standard_normal((4, 16)) + 1j * rng.standard_normal((4, 16))) / np.sqrt(2)
    ch = nf.MultiUserChannel(h, 0.1, 1.0)
    zf = nf.zf_beamformer(ch)
    prod = h @ zf.w
    off = prod - np.diag(np.diag(prod))
    assert np.abs(off).max() / np.abs(np.diag(prod)).min() <= 1e-10
    assert np.linalg.norm(zf.w) ** 2 == pytest.approx(1.0)

    w, rates = nf.wmmse(ch, 20)
    assert all(b >= a - 1e-9 for a, b in zip(rates, rates[1:]))
    assert rates[-1] >= nf.sum_rate(ch, zf) - 1e-9


def test_nc_permutation_invariance():
    cfg = nf.NcTrainConfig()
    cfg.hidden_mult = [1]
    cfg.seed = 2
    model = nf.make_nc_model(8, cfg)
    rng = np.random.default_rng(3)
    h = (rng.standard_normal((3, 8)) + 1j * rng.standard_normal((3, 8))) / np.sqrt(2)
    ch = nf.MultiUserChannel(h, 0.1, 1.0)
    perm = [2, 0, 1]
    ch_p = nf.MultiUserChannel(h[perm], 0.1, 1.0)
    r = nf.sum_rate(ch, nf.nc_beamformer(model, ch))
    r_p = nf.sum_rate(ch_p, nf.nc_beamformer(model, ch_p))
    assert r_p == pytest.approx(r, abs=1e-12)


def test_config_parsing_errors():
    with pytest.raises(ValueError):
        nf.parse_config('{"measurement": {"compression_ratio": 1.5}}')
    cfg = nf.parse_config("{}")
    assert cfg.scenario == "default"


@pytest.fixture(scope="module")
def nfsim():
    path = os.environ.get("NFSIM_BIN")
    if not path or not os.path.exists(path):
        pytest.skip("NFSIM_BIN not set")
    return path


def test_cli_gen_train_eval_cycle(nfsim, tmp_path):
    config = {
        "scenario": "smoke",
        "geometry": {"kind": "ula", "n": 8},
        "channel": {"n_users": 1, "paths_per_user": 2,
                    "distance_range": [0.05, 0.2]},
        "measurement": {"compression_ratio": 0.5, "snr_db": 5.0},
        "training": {"epochs": 1, "batch": 4, "max_iter": 32},
        "eval": {"n_test": 6},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(config))
    data = tmp_path / "data.nfch"
    model = tmp_path / "model.nfm"
    csv = tmp_path / "metrics.csv"

    subprocess.run([nfsim, "gen", "--config", cfg_path, "--out", data],
                   check=True, capture_output=True)
    subprocess.run([nfsim, "train-fpn", "--config", cfg_path, "--data", data,
                    "--out", model], check=True, capture_output=True)
    subprocess.run([nfsim, "eval", "--config", cfg_path, "--model", model,
                    "--data", data, "--out", csv], check=True,
                   capture_output=True)

    lines = csv.read_text().strip().splitlines()
    assert lines[0] == ("experiment,method,n_antennas,n_users,snr_db,"
                        "metric_name,value,runtime_ms,iterations,seed")
    methods = [line.split(",")[1] for line in lines[1:]]
    assert methods == ["ls", "oamp_soft", "fpn"]


def test_cli_exit_codes(nfsim, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"measurement": {"compression_ratio": 9}}')
    out = subprocess.run(
        [nfsim, "gen", "--config", bad, "--out", tmp_path / "x.nfch"],
        capture_output=True)
    assert out.returncode == 2

    missing_model = subprocess.run(
        [nfsim, "eval", "--config", bad, "--model", tmp_path / "none.nfm"],
        capture_output=True)
    assert missing_model.returncode == 2  # config parsed first, still bad
