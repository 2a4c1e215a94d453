# SPDX-License-Identifier: Apache-2.0
"""End-to-end smoke tests for the python bindings."""

import math

import pytest

apmap = pytest.importorskip("apmap")


def test_geometry_basics():
    bs = apmap.BaseStation(0, [0.0, 0.0], 1, 0.0)
    assert apmap.distance([3.0, 4.0], bs) == pytest.approx(5.0)
    assert apmap.bearing([0.0, 1.0], bs) == pytest.approx(math.pi / 2)
    assert apmap.angle_diff(0.1, 2 * math.pi - 0.1) == pytest.approx(0.2)


def test_scenario_and_mobility_fit():
    ts = apmap.TrajectorySpec()
    ts.kind = apmap.TrajectorySpec.Kind.GAUSS_MARKOV
    ts.gamma = 0.8
    ts.accel_var = 1.0
    ts.v0 = [3.0, 1.0]
    ts.mean_velocity = [3.0, 1.0]
    ts.T = 400
    plc = apmap.PathLossConfig()
    plc.sigma = 0.2
    data = apmap.gen_scenario1(apmap.Scenario1Config(), ts, plc, seed=3)
    assert len(data.series) == 400

    vbar, sigma_v2 = apmap.estimate_mobility(data.traj, 0.8, ts.delta)
    assert vbar[0] == pytest.approx(3.0, abs=1.0)
    assert sigma_v2 == pytest.approx(1.0, rel=0.5)


def test_viterbi_recovers_a_noiseless_walk():
    graph = apmap.GridGraph.polyline([[0.0, 0.0], [30.0, 0.0]], 1.0, 6.0, 0.5)
    topo = apmap.Topology(
        [apmap.BaseStation(0, [5.0, 8.0]), apmap.BaseStation(1, [25.0, -6.0])],
        apmap.Rect(-50.0, -50.0, 80.0, 80.0),
    )
    pp = apmap.PropagationParams()
    for _ in range(2):
        sp = apmap.StationParams()
        sp.path_loss = apmap.PathLossParams(-20.0, 5.0, 0.05)
        sp.beams = [apmap.BeamPattern()]
        pp.stations = pp.stations + [sp]

    series = apmap.MeasurementSeries()
    truth = []
    obs_list = []
    for t in range(8):
        v = 2 + 3 * t
        truth.append(v)
        obs = apmap.Observation()
        obs.t = t + 1
        obs.entries = [
            apmap.ObsEntry(q, 0, apmap.mean_rsrp_db(pp, q, 0, graph.vertices[v], topo))
            for q in range(2)
        ]
        obs_list.append(obs)
    series.observations = obs_list

    mp = apmap.MobilityParams([3.0, 0.0], 2.0, 0.7, 0.5)
    prune = apmap.PruneConfig()
    prune.zeta = 0.0
    result = apmap.viterbi2(series, topo, pp, mp, graph, prune)
    assert result.vertex_ids == truth


def test_crlb_bound_arithmetic():
    cfg = apmap.BoundConfig()
    cfg.alpha_min2 = 400.0
    cfg.sigma_max2 = 1.0
    kappa = 1.0 / (math.pi * 1.0)
    bound = apmap.bound_unlimited_x(1, kappa, math.e, 1.0, 1.0, cfg)
    assert bound == pytest.approx(0.005)
    assert apmap.expected_projection_integral(math.e, 1.0) == pytest.approx(math.pi, rel=1e-4)


def test_prediction_metrics():
    truth = [[[0.0, -3.0, -7.0]]]
    assert apmap.metric_eq(truth, truth, 2) == 0.0
    assert apmap.metric_ea([[[-7.0, 0.0, -4.0]]], [[[-10.0, -3.0, -7.0]]]) == pytest.approx(3.0)
    ramp = [[[-30.0 + 2.0 * t]] for t in range(6)]
    assert apmap.baseline_mi(ramp, 4)[0][0] == pytest.approx(-18.0)
