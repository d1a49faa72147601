import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimo_crb.asymptotic import (
    CORE_A,
    CORE_B,
    amseb,
    amseb_oracle,
    anmseb,
    asymptotic_core,
    bracket,
    k_inverse,
    k_matrix,
    k_matrix_finite,
)
from mimo_crb.channel import ChannelRealization, NoiseModel, SystemConfig
from mimo_crb.exact import fim_exact, invert_fim, mseb_points
from mimo_crb.montecarlo import rect_grid


def grid(N=2, M=2, P=2, Ut=1, Q=2, Uf=1, **kw):
    return SystemConfig(n_rx=N, n_tx=M, n_train=P * Ut, n_time_pilots=P,
                        n_sc=Q * Uf, n_freq_pilots=Q, **kw)


configs = st.builds(
    grid,
    N=st.integers(1, 16), M=st.integers(1, 16),
    P=st.integers(1, 64), Ut=st.integers(1, 4),
    Q=st.integers(1, 64), Uf=st.integers(1, 32),
)


class TestK:
    def test_entries_example(self):
        K = k_matrix(grid())
        assert K[0, 0] == 2 and K[1, 1] == 2
        assert K[2, 2] == pytest.approx(8 / 3)
        assert K[2, 3] == pytest.approx(2)
        assert K[2, 4] == pytest.approx(-2)
        assert K[0, 2] == 0

    def test_inverse_example(self):
        assert k_inverse(grid())[2, 2] == pytest.approx(15 / 13)
        assert k_inverse(grid())[0, 0] == 0.5

    def test_core_inverse_pair(self):
        np.testing.assert_allclose(CORE_A @ CORE_B, np.eye(4), atol=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(configs)
    def test_closed_form_inverse(self, c):
        K, Kinv = k_matrix(c), k_inverse(c)
        assert np.linalg.eigvalsh(K).min() > 0
        np.testing.assert_allclose(Kinv, np.linalg.inv(K), rtol=1e-9, atol=1e-12 * np.abs(Kinv).max())
        np.testing.assert_allclose(K, K.T)

    def test_core_scale(self):
        c = grid(N=3, M=2, P=5, Q=7)
        core = asymptotic_core(c, sigma2=0.5)
        assert core.scale == pytest.approx(3 * 2 * 5 * 7 / 0.5)
        np.testing.assert_array_equal(core.K, k_matrix(c))

    def test_finite_examples(self):
        assert k_matrix_finite(grid(N=1))[2, 2] == 0
        # 2 * sum_{n<4} n^2 / 4 = 2 * 14 / 4 = 7
        assert k_matrix_finite(grid(N=4))[2, 2] == pytest.approx(7)

    @pytest.mark.parametrize("size", [8, 32, 128])
    def test_finite_tends_to_limit(self, size):
        c = grid(N=size, M=size, P=size, Q=size, Ut=2, Uf=3)
        Kf, K = k_matrix_finite(c), k_matrix(c)
        rel = np.abs(Kf - K)[2:, 2:] / np.abs(K)[2:, 2:]
        assert rel.max() <= 3 / size


class TestAmseb:
    def test_origin_example(self):
        c = grid(P=10, Q=10)
        assert amseb(0, 0, 1, 1.0, c) == pytest.approx(44 / 1300)
        assert amseb(0, 0, 1, NoiseModel(1.0), c) == pytest.approx(44 / 1300)

    def test_path_and_antenna_scaling(self):
        c = grid(N=4, M=2, P=10, Q=10)
        assert amseb(0, 0, 3, 1.0, c) == pytest.approx(9 * 44 / 1300)
        assert anmseb(0, 0, 3, 1.0, c) == pytest.approx(9 * 44 / 1300 / 24)

    def test_anmseb_halves_with_twice_the_pilots(self):
        # fixed normalised position u = w = 0.5
        a = anmseb(10, 10, 2, 0.3, grid(P=20, Q=20))
        b = anmseb(20, 10, 2, 0.3, grid(P=40, Q=20))
        assert b == pytest.approx(a / 2, rel=1e-12)

    def test_frequency_vertex(self):
        c = grid(P=8, Q=16, Uf=4)
        f = np.arange(0, 64 + 1)
        v = amseb(0, f, 2, 1.0, c)
        assert f[np.argmin(v)] == round(0.3 * 16 * 4)

    def test_second_differences_constant(self):
        c = grid(P=10, Ut=3, Q=12, Uf=2)
        t = np.arange(0, 200.0)
        d2 = np.diff(amseb(t, 7.0, 2, 0.2, c), 2)
        scale = 4 * 0.2 / (13 * 10 * 12)
        np.testing.assert_allclose(d2, scale * 120 / 30**2, rtol=1e-9)
        f = np.arange(0, 200.0)
        d2 = np.diff(amseb(5.0, f, 2, 0.2, c), 2)
        np.testing.assert_allclose(d2, scale * 120 / 24**2, rtol=1e-9)

    def test_bracket_polynomial(self):
        c = grid(P=4, Ut=5, Q=8, Uf=2)
        assert bracket(0, 0, c) == 44
        assert bracket(20, 0, c) == pytest.approx(68)
        assert bracket(20, 16, c) == pytest.approx(56)

    @pytest.mark.parametrize("t,f", [(0, 0), (37, 5), (100, 2047), (250, 900)])
    def test_matches_oracle(self, t, f):
        c = SystemConfig()
        for Z in (1, 3):
            assert amseb(t, f, Z, NoiseModel.from_db(15), c) == pytest.approx(
                amseb_oracle(t, f, Z, NoiseModel.from_db(15), c), rel=1e-10)

    @settings(max_examples=50, deadline=None)
    @given(configs, st.floats(0, 500), st.floats(0, 4000), st.integers(1, 8), st.floats(1e-3, 10))
    def test_positive_and_oracle(self, c, t, f, Z, s2):
        v = amseb(t, f, Z, s2, c)
        assert v > 0
        assert v == pytest.approx(amseb_oracle(t, f, Z, s2, c), rel=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0, 3), st.floats(0, 3))
    def test_bracket_minimum(self, u, w):
        # stationary point u = w = 3/7, value 200/7
        c = grid(P=10, Q=10)
        assert bracket(10 * u, 10 * w, c) >= 200 / 7 - 1e-9
        assert bracket(30 / 7, 30 / 7, c) == pytest.approx(200 / 7)

    def test_vector_shapes(self):
        c = grid(P=10, Q=10)
        assert np.shape(amseb(np.arange(5), 0, 1, 1.0, c)) == (5,)
        assert isinstance(amseb(1, 2, 1, 1.0, c), float)


@pytest.mark.parametrize("P,tol", [(8, 0.03), (16, 0.012), (32, 0.005)])
def test_window_average_matches_exact(P, tol):
    # averaged over the pilot window the exact and asymptotic forms coincide as the grid grows
    c = grid(N=2, M=2, P=P, Ut=2, Q=P, Uf=4)
    r = ChannelRealization.from_arrays([0.6 + 0.8j], [0.3], [-0.7], [0.2], [0.05])
    Finv = invert_fim(fim_exact(r, c, 1.0))
    t, f = rect_grid(np.arange(c.P * c.U_t), np.arange(c.Q * c.U_f))
    ex = mseb_points(r, c, Finv, t, f).mean()
    asy = amseb(t, f, 1, 1.0, c).mean()
    assert abs(ex / asy - 1) <= tol
