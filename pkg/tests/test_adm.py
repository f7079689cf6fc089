import numpy as np
import pytest

from celltraffic import adm
from celltraffic.predictors import LinearPredictorSpec, forecast
from celltraffic.sparse import DictionaryState, SparseCode
from celltraffic.traffic import ScenarioSpec, generate_synthetic
from celltraffic.stable import StableParams
from conftest import IM_PARAMS

PRED = LinearPredictorSpec(n=36, m=10, k=1, alpha=1.61)


def make_state(rng, n=6, k=6, eta=None):
    d = rng.normal(size=(n, k))
    d /= np.maximum(np.linalg.norm(d, axis=0), 1.0) * 1.0001
    s = rng.normal(size=k) * rng.integers(0, 2, size=k)
    code = SparseCode(s, np.flatnonzero(s), 0.0)
    dict_state = DictionaryState(d, np.eye(k), rng.normal(size=(n, k)))
    return adm.AdmState(
        x_p=rng.normal(size=n),
        x_alpha=rng.normal(size=n),
        z=rng.normal(size=n),
        mult=rng.normal(size=n),
        gamma=1.0,
        eta=float(rng.uniform(0.05, 2.0)) if eta is None else eta,
        dict=dict_state,
        code=code,
        x_tilde=rng.normal(size=n),
        residual=0.0,
        lagrangian=0.0,
    )


def fd_gradient(f, v, h=1e-6):
    g = np.zeros_like(v)
    for i in range(v.size):
        e = np.zeros_like(v)
        e[i] = h
        g[i] = (f(v + e) - f(v - e)) / (2 * h)
    return g


class TestClosedForms:
    def test_x_alpha_direct(self):
        rng = np.random.default_rng(0)
        st = make_state(rng, n=1, k=1, eta=1.0)
        st = adm.AdmState(**{**st.__dict__, "x_p": np.array([4.0]),
                             "z": np.array([0.0]), "mult": np.array([0.0])})
        np.testing.assert_allclose(adm.update_x_alpha(st, [2.0]), [3.0])

    def test_x_alpha_small_eta_limit(self):
        rng = np.random.default_rng(1)
        st = make_state(rng, eta=1e-12)
        xt = rng.normal(size=6)
        np.testing.assert_allclose(adm.update_x_alpha(st, xt), xt, atol=1e-9)

    def test_z_lambda1_zero(self):
        rng = np.random.default_rng(2)
        st = make_state(rng)
        jz = st.x_p - st.x_alpha + st.mult / (2 * st.eta)
        np.testing.assert_allclose(adm.update_z(st, adm.AdmConfig(lambda1=0.0)), jz)

    def test_z_large_ratio_limit(self):
        rng = np.random.default_rng(3)
        st = make_state(rng, eta=1.0)
        z = adm.update_z(st, adm.AdmConfig(lambda1=1e12))
        np.testing.assert_allclose(z, 0.0, atol=1e-9)

    def test_x_p_lambda2_zero(self):
        rng = np.random.default_rng(4)
        st = make_state(rng)
        jp = st.x_alpha + st.z - st.mult / (2 * st.eta)
        np.testing.assert_allclose(adm.update_x_p(st, adm.AdmConfig(lambda2=0.0)), jp)

    def test_x_p_huge_ratio_limit(self):
        rng = np.random.default_rng(5)
        st = make_state(rng, eta=1.0)
        ds = st.dict.D @ st.code.s
        got = adm.update_x_p(st, adm.AdmConfig(lambda2=1e12))
        np.testing.assert_allclose(got, ds, rtol=1e-6, atol=1e-6)

    @pytest.mark.parametrize("which", ["x_alpha", "z", "x_p"])
    def test_finite_difference_gradients(self, which):
        rng = np.random.default_rng(6)
        for _ in range(100):
            st = make_state(rng)
            cfg = adm.AdmConfig(
                lambda1=float(rng.uniform(0.1, 20)), lambda2=float(rng.uniform(0.1, 20))
            )
            eta = st.eta
            if which == "x_alpha":
                j = st.x_p - st.z + st.mult / (2 * eta)
                f = lambda v: (1 / eta) * np.sum((v - st.x_tilde) ** 2) + np.sum((v - j) ** 2)
                point = adm.update_x_alpha(st, st.x_tilde)
            elif which == "z":
                j = st.x_p - st.x_alpha + st.mult / (2 * eta)
                f = lambda v: (cfg.lambda1 / eta) * np.sum(v**2) + np.sum((v - j) ** 2)
                point = adm.update_z(st, cfg)
            else:
                ds = st.dict.D @ st.code.s
                j = st.x_alpha + st.z - st.mult / (2 * eta)
                f = lambda v: (cfg.lambda2 / eta) * np.sum((v - ds) ** 2) + np.sum((v - j) ** 2)
                point = adm.update_x_p(st, cfg)
            assert np.linalg.norm(fd_gradient(f, point)) < 1e-6


class TestStep:
    def test_multiplier_parallel_to_residual(self):
        rng = np.random.default_rng(7)
        st = make_state(rng, n=8, k=8)
        cfg = adm.AdmConfig()
        new = adm.step(st, st.x_tilde, cfg)
        r = new.x_p - new.x_alpha - new.z
        np.testing.assert_array_equal(new.mult - st.mult, st.eta * r)

    def test_eta_grows_geometrically(self):
        rng = np.random.default_rng(8)
        st = make_state(rng, eta=1e-4)
        cfg = adm.AdmConfig(rho=1.1)
        for t in range(1, 6):
            st = adm.step(st, st.x_tilde, cfg)
            assert st.eta == pytest.approx(1e-4 * 1.1**t, rel=1e-12)

    def test_residual_recomputable(self):
        rng = np.random.default_rng(9)
        st = adm.step(make_state(rng), np.zeros(6), adm.AdmConfig())
        assert st.residual == pytest.approx(
            float(np.linalg.norm(st.x_p - st.x_alpha - st.z)), abs=1e-12
        )

    def test_lagrangian_recomputable(self):
        rng = np.random.default_rng(10)
        cfg = adm.AdmConfig()
        st = adm.step(make_state(rng), np.zeros(6), cfg)
        recomputed = adm.lagrangian_value(
            st.x_p, st.x_alpha, st.z, st.mult, st.gamma, st.eta,
            st.dict, st.code, st.x_tilde, cfg.lambda1, cfg.lambda2,
        )
        assert st.lagrangian == pytest.approx(recomputed, abs=1e-9)

    def test_blocks_never_increase_lagrangian(self):
        # at fixed multipliers and eta, each closed form exactly minimizes
        # its block, so the Lagrangian is monotone across the three updates
        rng = np.random.default_rng(11)
        for _ in range(30):
            st = make_state(rng)
            cfg = adm.AdmConfig(
                lambda1=float(rng.uniform(0.1, 5)), lambda2=float(rng.uniform(0.1, 5))
            )
            def lag(x_p, x_alpha, z):
                return adm.lagrangian_value(
                    x_p, x_alpha, z, st.mult, st.gamma, st.eta,
                    st.dict, st.code, st.x_tilde, cfg.lambda1, cfg.lambda2,
                )
            l0 = lag(st.x_p, st.x_alpha, st.z)
            xa = adm.update_x_alpha(st, st.x_tilde)
            l1 = lag(st.x_p, xa, st.z)
            st1 = adm.AdmState(**{**st.__dict__, "x_alpha": xa})
            z = adm.update_z(st1, cfg)
            l2 = lag(st.x_p, xa, z)
            st2 = adm.AdmState(**{**st1.__dict__, "z": z})
            xp = adm.update_x_p(st2, cfg)
            l3 = lag(xp, xa, z)
            assert l1 <= l0 + 1e-9
            assert l2 <= l1 + 1e-9
            assert l3 <= l2 + 1e-9

    def test_z_uses_new_x_alpha_and_old_x_p(self):
        rng = np.random.default_rng(12)
        st = make_state(rng)
        cfg = adm.AdmConfig()
        new = adm.step(st, st.x_tilde, cfg)
        eta = st.eta
        xa = adm.update_x_alpha(st, st.x_tilde)
        z_expected = (st.x_p - xa + st.mult / (2 * eta)) / (cfg.lambda1 / eta + 1.0)
        np.testing.assert_allclose(new.z, z_expected, atol=1e-12)
        # and x_p mixes the pre-update reconstruction with the new blocks
        ratio = cfg.lambda2 / eta
        ds_prev = st.dict.D @ st.code.s
        xp_expected = (ratio * ds_prev + (xa + z_expected - st.mult / (2 * eta))) / (ratio + 1)
        np.testing.assert_allclose(new.x_p, xp_expected, atol=1e-12)

    def test_residual_decays_with_iterations(self):
        rng = np.random.default_rng(13)
        decays = 0
        for _ in range(20):
            st = make_state(rng, n=10, k=10, eta=1e-3)
            cfg = adm.AdmConfig(eta0=1e-3)
            residuals = []
            for _ in range(20):
                st = adm.step(st, st.x_tilde, cfg)
                residuals.append(st.residual)
            decays += residuals[19] <= residuals[4]
        assert decays == 20


class TestSeedDictionary:
    def test_atoms_span_recent_window(self, im_matrix):
        d0 = adm.seed_dictionary(im_matrix, 150, 113, window=36)
        assert d0.shape == (113, 113)
        norms = np.linalg.norm(d0, axis=0)
        active = norms > 0
        assert 1 <= active.sum() <= 8
        np.testing.assert_allclose(norms[active], 1.0, atol=1e-12)
        # orthonormal basis
        q = d0[:, active]
        np.testing.assert_allclose(q.T @ q, np.eye(active.sum()), atol=1e-10)

    def test_zero_history_fallback(self):
        from celltraffic.traffic import CellMeta, TrafficMatrix

        cells = tuple(CellMeta(f"c{i}", 30.0 + i * 0.01, 120.0) for i in range(4))
        m = TrafficMatrix(cells, 300, 0, np.zeros((4, 50)), "IM")
        d0 = adm.seed_dictionary(m, 40, 4)
        assert np.linalg.norm(d0[:, 0]) == pytest.approx(1.0)


class TestPredict:
    def test_remark5_degeneration(self, im_matrix):
        alphas = adm.per_cell_alphas(im_matrix, 150, 1.61)
        x_tilde = forecast(im_matrix, 150, PRED, alphas=alphas).values
        cfg = adm.AdmConfig(lambda1=1e-12, lambda2=1e-12, early_stop_tol=0.0)
        _, state = adm.predict(im_matrix, 150, PRED, cfg, alphas=alphas)
        rel = np.linalg.norm(state.x_p * state.scale - x_tilde) / np.linalg.norm(x_tilde)
        assert rel < 1e-6

    def test_reconstructable_forecast_keeps_zero_residual(self):
        # coarse forecast inside the seeded span, zero multipliers, no
        # l1 shrinkage: the constraint stays satisfied to 1e-9
        rng = np.random.default_rng(14)
        from celltraffic.traffic import CellMeta, TrafficMatrix

        base = np.abs(rng.normal(50, 5, size=(6, 1)))
        values = base @ np.abs(rng.normal(1.0, 0.2, size=(1, 60)))  # rank one
        cells = tuple(CellMeta(f"c{i}", 30.0 + i * 0.01, 120.0) for i in range(6))
        m = TrafficMatrix(cells, 300, 0, values, "IM")
        cfg = adm.AdmConfig(gamma0=0.0, early_stop_tol=0.0, outer_iterations=10)
        _, state = adm.predict(m, 50, m_spec := LinearPredictorSpec(36, 5, 1, 2.0), cfg)
        assert state.residual < 1e-9

    def test_constant_matrix_predicts_constant(self):
        from celltraffic.traffic import CellMeta, TrafficMatrix

        cells = tuple(CellMeta(f"c{i}", 30.0 + i * 0.01, 120.0) for i in range(4))
        m = TrafficMatrix(cells, 300, 0, np.full((4, 60), 7.5), "IM")
        out, _ = adm.predict(m, 50, LinearPredictorSpec(36, 5, 1, 2.0), adm.AdmConfig())
        np.testing.assert_allclose(out, 7.5, atol=1e-3)

    def test_early_stop_matches_full_run(self, im_matrix):
        alphas = adm.per_cell_alphas(im_matrix, 150, 1.61)
        full, _ = adm.predict(
            im_matrix, 150, PRED, adm.AdmConfig(early_stop_tol=0.0), alphas=alphas
        )
        stopped, _ = adm.predict(
            im_matrix, 150, PRED, adm.AdmConfig(early_stop_tol=1e-6), alphas=alphas
        )
        denom = max(1.0, float(np.abs(full).max()))
        assert np.abs(full - stopped).max() / denom < 1e-4

    def test_clamp_nonnegative(self, im_matrix):
        alphas = adm.per_cell_alphas(im_matrix, 150, 1.61)
        out, state = adm.predict(im_matrix, 150, PRED, adm.AdmConfig(), alphas=alphas)
        assert out.min() >= 0.0
        raw, _ = adm.predict(
            im_matrix, 150, PRED, adm.AdmConfig(clamp_nonnegative=False), alphas=alphas
        )
        np.testing.assert_allclose(raw, state.x_p * state.scale, atol=1e-12)

    def test_warm_dictionary_is_copied(self, im_matrix):
        alphas = adm.per_cell_alphas(im_matrix, 150, 1.61)
        _, state1 = adm.predict(im_matrix, 150, PRED, adm.AdmConfig(), alphas=alphas)
        before = state1.dict.D.copy()
        adm.predict(im_matrix, 151, PRED, adm.AdmConfig(), warm_dict=state1.dict, alphas=alphas)
        np.testing.assert_array_equal(state1.dict.D, before)

    def test_deterministic(self, im_matrix):
        alphas = adm.per_cell_alphas(im_matrix, 150, 1.61)
        a, _ = adm.predict(im_matrix, 150, PRED, adm.AdmConfig(), alphas=alphas)
        b, _ = adm.predict(im_matrix, 150, PRED, adm.AdmConfig(), alphas=alphas)
        np.testing.assert_array_equal(a, b)


def test_per_cell_alphas(im_matrix):
    alphas = adm.per_cell_alphas(im_matrix, 150, 1.61)
    assert alphas.shape == (113,)
    assert np.all(alphas > 1.0) and np.all(alphas <= 2.0)
    short = adm.per_cell_alphas(im_matrix, 50, 1.7)
    np.testing.assert_array_equal(short, np.full(113, 1.7))


def test_config_validation():
    with pytest.raises(ValueError):
        adm.AdmConfig(eta0=0.0)
    with pytest.raises(ValueError):
        adm.AdmConfig(rho=0.9)
    with pytest.raises(ValueError):
        adm.AdmConfig(coder="bogus")
    with pytest.raises(ValueError):
        adm.AdmConfig(lambda1=-1.0)
