from dataclasses import replace

import numpy as np
import pytest

from nsdpp import data, likelihood, synthetic, trainer
from nsdpp.errors import ConfigurationError, DataError, NumericalError
from nsdpp.kernel import LowRankParams


def tiny_dataset(seed=0, M=10, n=50):
    rng = np.random.default_rng(seed)
    baskets = [sorted(rng.choice(M, size=rng.integers(2, 5), replace=False).tolist())
               for _ in range(n)]
    return data.split(data.BasketDataset.from_baskets(baskets, M), seed=seed)


class TestConfig:
    def test_defaults(self):
        cfg = trainer.TrainConfig()
        assert (cfg.epsilon, cfg.learning_rate, cfg.convergence_rel_tol, cfg.init_scale) == \
            (1e-5, 0.05, 1e-4, 0.1)
        assert (cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps) == (0.9, 0.999, 1e-8)

    def test_rank_defaults_to_largest_basket(self):
        cfg = trainer.TrainConfig().resolve_rank(tiny_dataset())
        assert cfg.D == 4 and cfg.D_prime == 4
        assert trainer.TrainConfig(D_prime=0).resolve_rank(tiny_dataset()).D_prime == 0

    @pytest.mark.parametrize("kw", [dict(epsilon=0), dict(convergence_rel_tol=-1), dict(D=0),
                                    dict(learning_rate=-0.1), dict(max_epochs=-1)])
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            trainer.TrainConfig(**kw)


class TestInit:
    def test_deterministic(self):
        cfg = trainer.TrainConfig(D=3, D_prime=2, seed=7)
        a, b = trainer.init_params(cfg, 6), trainer.init_params(cfg, 6)
        for x, y in zip((a.V, a.B, a.C), (b.V, b.B, b.C)):
            np.testing.assert_array_equal(x, y)

    def test_range(self):
        p = trainer.init_params(trainer.TrainConfig(D=30, D_prime=30, init_scale=0.1), 100)
        assert (p.M, p.D, p.D_prime) == (100, 30, 30)
        assert np.abs(p.V).max() <= 0.1 and np.abs(p.B).max() <= 0.1

    def test_zero_scale(self):
        p = trainer.init_params(trainer.TrainConfig(D=2, D_prime=2, init_scale=0.0), 4)
        assert not np.any(p.V) and not np.any(p.B) and not np.any(p.C)

    def test_unresolved_rank(self):
        with pytest.raises(ConfigurationError):
            trainer.init_params(trainer.TrainConfig(), 4)


class TestFit:
    def test_loss_decreases(self):
        tr = trainer.fit(trainer.TrainConfig(max_epochs=100), tiny_dataset())
        assert tr.epochs[-1].train_loss <= tr.epochs[0].train_loss

    def test_deterministic(self):
        cfg = trainer.TrainConfig(max_epochs=40)
        a, b = trainer.fit(cfg, tiny_dataset()), trainer.fit(cfg, tiny_dataset())
        np.testing.assert_array_equal(a.final_params.V, b.final_params.V)
        np.testing.assert_array_equal(a.final_params.B, b.final_params.B)
        assert [r.train_loss for r in a.epochs] == [r.train_loss for r in b.epochs]

    def test_zero_learning_rate(self):
        ds = tiny_dataset()
        cfg = trainer.TrainConfig(learning_rate=0.0, max_epochs=5)
        init = trainer.init_params(cfg.resolve_rank(ds), ds.M)
        tr = trainer.fit(cfg, ds, params=init)
        np.testing.assert_array_equal(tr.final_params.V, init.V)
        np.testing.assert_array_equal(tr.final_params.C, init.C)

    def test_uses_likelihood_gradients(self):
        calls = []

        def spy(*args):
            calls.append(args)
            return likelihood.loss_and_gradients(*args)

        ds = tiny_dataset()
        tr = trainer.fit(trainer.TrainConfig(max_epochs=3, convergence_rel_tol=1e-12), ds,
                         gradient_fn=spy)
        assert len(calls) == tr.epochs_run == 3
        assert calls[0][1] == ds.train

    def test_symmetric_mode_keeps_skew_zero(self):
        tr = trainer.fit(trainer.TrainConfig(symmetric_only=True, max_epochs=30), tiny_dataset())
        assert not np.any(tr.final_params.B) and not np.any(tr.final_params.C)

    def test_convergence_invariant(self):
        cfg = trainer.TrainConfig(max_epochs=500, convergence_rel_tol=1e-3)
        tr = trainer.fit(cfg, tiny_dataset())
        assert tr.epochs_run <= cfg.max_epochs
        assert tr.converged
        v = [r.validation_loglik for r in tr.epochs]
        prev = v[-2] if len(v) > 1 else None
        if prev is not None:
            assert abs(v[-1] - prev) / abs(prev) <= cfg.convergence_rel_tol

    def test_fixed_point(self):
        rng = np.random.default_rng(0)
        baskets = [sorted(rng.choice(5, size=rng.integers(1, 4), replace=False).tolist())
                   for _ in range(40)]
        ds = data.split(data.BasketDataset.from_baskets(baskets, 5), seed=0)
        cfg = trainer.TrainConfig(D=5, D_prime=0, learning_rate=0.01, max_epochs=4000,
                                  convergence_rel_tol=1e-14, symmetric_only=True)
        p = trainer.fit(cfg, ds).final_params
        dV, _, _ = likelihood.gradients(p, ds.train, epsilon=cfg.epsilon, mean=True)
        assert np.linalg.norm(dV) <= 1e-4

    def test_nonfinite_loss_aborts(self):
        def broken(params, *rest):
            report, grads = likelihood.loss_and_gradients(params, *rest)
            return replace(report, total=float("nan")), grads

        with pytest.raises(NumericalError, match="epoch 1"):
            trainer.fit(trainer.TrainConfig(max_epochs=3), tiny_dataset(), gradient_fn=broken)

    def test_needs_validation(self):
        ds = data.BasketDataset.from_baskets([[0, 1], [1, 2]], 3)
        with pytest.raises(DataError):
            trainer.fit(trainer.TrainConfig(), replace(ds, splits=np.zeros(2, dtype=np.int8)))

    def test_trace_tsv(self, tmp_path):
        tr = trainer.fit(trainer.TrainConfig(max_epochs=4, convergence_rel_tol=1e-12),
                         tiny_dataset())
        tr.to_tsv(tmp_path / "t.tsv")
        lines = (tmp_path / "t.tsv").read_text().splitlines()
        assert lines[0].split("\t") == ["epoch", "train_loss", "validation_loglik",
                                        "grad_norm", "wall_time"]
        assert len(lines) == 5

    @pytest.mark.slow
    def test_full_model_fits_disjoint_groups_at_least_as_well(self):
        spec = synthetic.regime(2)
        ds, _ = synthetic.generate(spec)
        ds = data.split(ds)
        cfg = trainer.TrainConfig(D_prime=50, max_epochs=3000)
        full = trainer.fit(cfg, ds)
        sym = trainer.fit(replace(cfg, symmetric_only=True), ds)
        assert full.epochs[-1].validation_loglik >= sym.epochs[-1].validation_loglik


class TestCheckpoint:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        p = LowRankParams(rng.standard_normal((7, 3)), rng.standard_normal((7, 2)),
                          rng.standard_normal((7, 2)))
        trainer.save_checkpoint(p, tmp_path / "m.bin")
        q = trainer.load_checkpoint(tmp_path / "m.bin")
        for a, b in zip((p.V, p.B, p.C), (q.V, q.B, q.C)):
            assert a.tobytes() == b.tobytes()

    def test_layout(self, tmp_path):
        p = LowRankParams(np.array([[1.0], [2.0]]), np.array([[3.0], [4.0]]),
                          np.array([[5.0], [6.0]]))
        trainer.save_checkpoint(p, tmp_path / "m.bin")
        raw = (tmp_path / "m.bin").read_bytes()
        assert raw[:6] == b"NSDPP1"
        assert np.frombuffer(raw[6:30], "<u8").tolist() == [2, 1, 1]
        assert np.frombuffer(raw[30:], "<f8").tolist() == [1, 2, 3, 4, 5, 6]

    def test_no_skew_part(self, tmp_path):
        trainer.save_checkpoint(LowRankParams(np.eye(3)), tmp_path / "m.bin")
        assert trainer.load_checkpoint(tmp_path / "m.bin").D_prime == 0

    def test_bad_magic(self, tmp_path):
        (tmp_path / "m.bin").write_bytes(b"XXXXXX" + bytes(24))
        with pytest.raises(DataError):
            trainer.load_checkpoint(tmp_path / "m.bin")

    def test_truncated(self, tmp_path):
        trainer.save_checkpoint(LowRankParams(np.eye(3)), tmp_path / "m.bin")
        raw = (tmp_path / "m.bin").read_bytes()
        (tmp_path / "m.bin").write_bytes(raw[:-8])
        with pytest.raises(DataError):
            trainer.load_checkpoint(tmp_path / "m.bin")
