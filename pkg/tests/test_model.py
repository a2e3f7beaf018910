import math

import numpy as np
import pytest

from techtrace.distribution import distribution_matrix
from techtrace.model import (
    DttModel,
    bpr_loss_and_grads,
    build_extractor,
    forecast,
    init_params,
    load_model,
    predict,
    predict_matrix,
    sample_triples,
    save_model,
    train,
    training_loss,
)
from techtrace.optim import Adadelta

from conftest import rel_err


def test_predict_orthogonal_is_half():
    assert predict(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.5


def test_predict_closed_form_quarters():
    u = np.array([math.sqrt(math.log(3.0)), 0.0])
    assert predict(u, u) == pytest.approx(0.75, abs=1e-12)


def test_predict_monotone_in_dot_product():
    v = np.array([1.0, 1.0])
    scores = [predict(c * v, v) for c in (-1.0, 0.0, 0.5, 2.0)]
    assert scores == sorted(scores)
    assert all(0 < s < 1 for s in scores)


def test_predict_dimension_mismatch():
    with pytest.raises(ValueError):
        predict(np.zeros(2), np.zeros(3))


def test_bpr_zero_margin_is_ln2():
    u = np.zeros((1, 3))
    v = np.ones((2, 3))
    triples = np.array([[0, 0, 1]])
    loss, _, _ = bpr_loss_and_grads(u, v, triples)
    assert loss == pytest.approx(math.log(2.0), abs=1e-12)


def test_bpr_large_margin_goes_to_zero():
    u = np.array([[100.0]])
    v = np.array([[1.0], [-1.0]])
    loss, _, _ = bpr_loss_and_grads(u, v, np.array([[0, 0, 1]]))
    assert loss < 1e-12


def test_bpr_matches_scalar_oracle():
    # independently coded per-triple formula
    rng = np.random.default_rng(6)
    u = rng.normal(size=(3, 4))
    v = rng.normal(size=(5, 4))
    triples = np.array([[0, 1, 2], [1, 0, 4], [2, 3, 1]])
    loss, du, dv = bpr_loss_and_grads(u, v, triples)
    total = 0.0
    for i, jp, jn in triples:
        margin = float(u[i] @ (v[jp] - v[jn]))
        total += -math.log(1.0 / (1.0 + math.exp(-margin)))
    assert loss == pytest.approx(total / 3.0, abs=1e-12)


def test_bpr_strictly_decreasing_in_margin():
    losses = []
    for margin in (-1.0, 0.0, 1.0, 2.0):
        u = np.array([[margin]])
        v = np.array([[1.0], [0.0]])
        loss, _, _ = bpr_loss_and_grads(u, v, np.array([[0, 0, 1]]))
        losses.append(loss)
    assert all(a > b for a, b in zip(losses, losses[1:]))


def test_sample_triples_respect_strict_order():
    target = np.array([[0.5, 0.2, 0.0, 0.3], [0.1, 0.1, 0.1, 0.1]])
    triples = sample_triples(target, 10, np.random.default_rng(0))
    assert len(triples) == 10  # constant second row contributes nothing
    for i, jp, jn in triples:
        assert i == 0
        assert target[i, jp] > target[i, jn]


def test_sample_triples_empty_for_constant_rows():
    assert sample_triples(np.ones((3, 4)), 5, np.random.default_rng(0)).shape == (0, 3)


def test_adadelta_shrinks_norm_with_pure_regularization(micro_synth, tiny_train_cfg):
    cfg = tiny_train_cfg
    extractor = build_extractor(micro_synth, list(micro_synth.years)[:-1], cfg)
    params = init_params(cfg)
    before = sum(float((p * p).sum()) for p in params.values())
    no_triples = np.empty((0, 3), dtype=np.int64)
    _, grads = training_loss(params, extractor, no_triples, cfg.seed, lam=1e-4)
    Adadelta(rho=cfg.rho, eps=cfg.eps).step(params, grads)
    after = sum(float((p * p).sum()) for p in params.values())
    assert after < before


def test_adadelta_validates_hyperparameters():
    with pytest.raises(ValueError):
        Adadelta(rho=1.5)
    with pytest.raises(ValueError):
        Adadelta(eps=0.0)


def test_training_deterministic_with_frozen_samples(micro_synth, tiny_train_cfg):
    years = list(micro_synth.years)[:-1]
    _, h1 = train(micro_synth, years, micro_synth.year_max, tiny_train_cfg)
    _, h2 = train(micro_synth, years, micro_synth.year_max, tiny_train_cfg)
    assert h1 == h2


def test_training_validates_years(micro_synth, tiny_train_cfg):
    with pytest.raises(ValueError):
        train(micro_synth, [], micro_synth.year_max, tiny_train_cfg)
    with pytest.raises(ValueError):
        train(micro_synth, list(micro_synth.years)[:-1], 1800, tiny_train_cfg)


def test_forecast_requires_trained_model(micro_synth, tiny_train_cfg):
    model = DttModel(
        cfg=tiny_train_cfg,
        input_years=list(micro_synth.years)[:-1],
        target_year=micro_synth.year_max,
        params=init_params(tiny_train_cfg),
        trained=False,
    )
    with pytest.raises(ValueError, match="trained"):
        forecast(model, micro_synth)


def test_forecast_scores_in_open_unit_interval(micro_synth, tiny_train_cfg):
    years = list(micro_synth.years)[:-1]
    model, _ = train(micro_synth, years, micro_synth.year_max, tiny_train_cfg)
    rankings = forecast(model, micro_synth)
    assert set(rankings) == set(micro_synth.companies)
    for ranked in rankings.values():
        techs = [t for t, _ in ranked]
        assert sorted(techs) == sorted(micro_synth.technologies)
        assert all(0.0 < s < 1.0 for _, s in ranked)
        scores = [s for _, s in ranked]
        assert scores == sorted(scores, reverse=True)


def test_equal_scores_rank_lexicographically():
    # identical technology states -> all scores equal -> lexicographic order
    u = np.zeros((1, 3))
    v = np.tile(np.array([1.0, 2.0, 3.0]), (4, 1))
    scores = predict_matrix(u, v)
    order = np.lexsort((np.arange(4), -scores[0]))
    assert list(order) == [0, 1, 2, 3]


def test_ranking_invariant_under_monotone_transform(micro_synth, tiny_train_cfg):
    years = list(micro_synth.years)[:-1]
    model, _ = train(micro_synth, years, micro_synth.year_max, tiny_train_cfg)
    rankings = forecast(model, micro_synth)
    for company, ranked in rankings.items():
        scores = np.array([s for _, s in ranked])
        transformed = np.exp(5.0 * scores)  # strictly increasing
        assert (np.argsort(-transformed, kind="stable") == np.arange(len(scores))).all()


def test_full_pipeline_gradients_match_fd(micro_synth, tiny_train_cfg):
    cfg = tiny_train_cfg
    extractor = build_extractor(micro_synth, list(micro_synth.years)[:-1], cfg)
    target = distribution_matrix(micro_synth, micro_synth.year_max).values
    triples = sample_triples(target, 4, np.random.default_rng(1))
    params = init_params(cfg)
    _, grads = training_loss(params, extractor, triples, cfg.seed, cfg.lam)
    rng = np.random.default_rng(2)
    h = 1e-5
    for name, p in params.items():
        flat = p.reshape(-1)
        flat_g = grads[name].reshape(-1)
        for k in rng.choice(p.size, size=min(4, p.size), replace=False):
            orig = flat[k]
            flat[k] = orig + h
            lp, _ = training_loss(params, extractor, triples, cfg.seed, cfg.lam, want_grads=False)
            flat[k] = orig - h
            lm, _ = training_loss(params, extractor, triples, cfg.seed, cfg.lam, want_grads=False)
            flat[k] = orig
            fd = (lp - lm) / (2 * h)
            assert rel_err(fd, flat_g[k]) < 1e-4, (name, k)


def test_divergence_raises_named_error(micro_synth, tiny_train_cfg):
    cfg = tiny_train_cfg
    extractor = build_extractor(micro_synth, list(micro_synth.years)[:-1], cfg)
    params = init_params(cfg)
    params["gru_u.W_xz"][0, 0] = np.nan
    target = distribution_matrix(micro_synth, micro_synth.year_max).values
    triples = sample_triples(target, 2, np.random.default_rng(0))
    loss, _ = training_loss(params, extractor, triples, cfg.seed, cfg.lam, want_grads=False)
    assert not np.isfinite(loss)


def test_save_load_roundtrip(tmp_path, micro_synth, tiny_train_cfg):
    years = list(micro_synth.years)[:-1]
    model, history = train(micro_synth, years, micro_synth.year_max, tiny_train_cfg)
    save_model(model, tmp_path / "m")
    again = load_model(tmp_path / "m")
    assert again.cfg == model.cfg
    assert again.loss_history == history
    assert again.trained
    for name, p in model.params.items():
        np.testing.assert_array_equal(again.params[name], p)
    r1 = forecast(model, micro_synth)
    r2 = forecast(again, micro_synth)
    assert r1 == r2
