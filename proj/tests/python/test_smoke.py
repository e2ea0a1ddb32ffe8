import json

import numpy as np
import pytest

import lsalsa


def planted_problem(seed=3):
    a = lsalsa.random_dictionary(16, 24, seed)
    signals, codes = lsalsa.planted_signals(a, 40, 3, seed + 1)
    return a, signals, codes


def test_soft_threshold():
    out = lsalsa.soft_threshold(np.array([-2.0, -0.5, 0.0, 0.5, 2.0]), 1.0)
    np.testing.assert_allclose(out, [-1.0, 0.0, 0.0, 0.0, 1.0])


def test_solvers_agree():
    a, signals, _ = planted_problem()
    y = signals[0]
    f = lsalsa.fista(y, [a], [0.05], max_iters=5000, stop_tol=1e-12)
    s = lsalsa.salsa(y, [a], [0.05], mu=1.0, max_iters=5000, stop_tol=1e-12, emit_thresholded=False)
    assert f["converged"] and s["converged"]
    np.testing.assert_allclose(f["code"], s["split"], atol=1e-6)
    assert lsalsa.lasso_cost(f["code"], y, [a], [0.05]) <= lsalsa.lasso_cost(np.zeros(24), y, [a], [0.05])


def test_lsalsa_init_matches_salsa():
    a, signals, _ = planted_problem()
    params = lsalsa.lsalsa_init([a], [0.1], 2.0, 4)
    assert params.encoder.shape == (24, 16)
    assert params.splitting.shape == (24, 24)
    for y in signals[:5]:
        ref = lsalsa.salsa(y, [a], [0.1], mu=2.0, max_iters=4, stop_tol=0.0)
        np.testing.assert_allclose(params.encode(y), ref["code"], atol=1e-10)
    batch = params.encode_batch(signals[:5])
    np.testing.assert_allclose(batch[2], params.encode(signals[2]), atol=1e-12)


def test_training_reduces_loss():
    a, signals, _ = planted_problem()
    targets, _ = lsalsa.optimal_codes(signals, [a], [0.1], method="FISTA")
    params = lsalsa.lsalsa_init([a], [0.1], 2.0, 3)
    before = lsalsa.prediction_loss(params, signals, targets)
    trained, history = lsalsa.train(params, signals, targets, learning_rate=1e-3, batch_size=10, epochs=5, seed=1)
    assert len(history["train_loss"]) >= 1
    assert lsalsa.prediction_loss(trained, signals, targets) < before

    lista = lsalsa.lista_init([a], [0.1], 3)
    trained_lista, _ = lsalsa.train(lista, signals, targets, learning_rate=0.005, batch_size=10, epochs=2)
    assert trained_lista.thresholds.shape == (24,)


def test_params_round_trip(tmp_path):
    a, signals, _ = planted_problem()
    params = lsalsa.lsalsa_init([a, a], [0.1, 0.2], 1.0, 2)
    params.save(tmp_path / "model.json")
    loaded = lsalsa.load_lsalsa(tmp_path / "model.json")
    assert loaded.partition == [24, 24]
    np.testing.assert_array_equal(loaded.encode(signals[0]), params.encode(signals[0]))


def test_diagnostics_at_init():
    a, signals, _ = planted_problem()
    params = lsalsa.lsalsa_init([a], [0.1], 2.0, 3)
    assert lsalsa.primal_residual(params, signals[0]) < 1e-10
    assert lsalsa.recursion_deviation(params, signals[0], 3) < 1e-10
    assert np.abs(lsalsa.descent_modifier(params, [a])).max() < 1e-8
    report = lsalsa.diagnostics(params, [a], signals[:4])
    assert report["theorem1_residual_max"] < 1e-10


def test_errors_are_translated():
    a, signals, _ = planted_problem()
    with pytest.raises(lsalsa.LsalsaError, match="DimensionMismatch"):
        lsalsa.fista(np.zeros(5), [a], [0.1])
    with pytest.raises(lsalsa.LsalsaError):
        lsalsa.optimal_codes(signals, [a], [0.1], method="LISTA")


def test_run_command(tmp_path):
    planted = {"type": "planted", "rows": 16, "atoms": 20, "count": 30, "nonzeros": 3}
    config = {
        "seed": 1,
        "alpha": 0.05,
        "fista_iters": 50,
        "train": {"learning_rate": 1.0, "batch_size": 10, "epochs": 1},
        "components": [
            {"source": dict(planted, dict_seed=1, seed=101), "atoms": 20},
            {"source": dict(planted, dict_seed=2, seed=102), "atoms": 20},
        ],
    }
    path = tmp_path / "dl.json"
    path.write_text(json.dumps(config))
    assert "dict-learn" in lsalsa.command_names()
    outputs = lsalsa.run_command("dict-learn", path, out=tmp_path / "dl")
    assert outputs and all(p.exists() for p in outputs)
