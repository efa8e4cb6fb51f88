import numpy as np
import pytest

from cfsubspace.channel import (AngularSupport, DftBasis, NetworkChannelSampler,
                                angular_support, network_supports, sample_channel,
                                sample_network_channel, true_covariance)
from cfsubspace.geometry import generate_layout


def make_support(indices, M, width=np.pi / 8):
    return AngularSupport(indices=np.asarray(indices, dtype=int), center_angle=0.0,
                          width=width, num_antennas=M)


class TestDftBasis:
    @pytest.mark.parametrize("M", [4, 8, 16, 64])
    def test_unitary(self, M):
        F = DftBasis(M).matrix
        assert np.max(np.abs(F.conj().T @ F - np.eye(M))) < 1e-12

    def test_entry_formula(self):
        F = DftBasis(4).matrix
        assert F[1, 1] == pytest.approx(np.exp(-2j * np.pi / 4) / 2)


class TestAngularSupport:
    def test_window_equal_to_grid_spacing(self):
        # center on grid point 0; window length pi/8 = grid spacing for M=16
        # reaches just half-way to the neighbors, so only index 0 qualifies
        s = angular_support((0.0, 0.0), (10.0, 0.0), 2000.0, np.pi / 8, 16)
        assert list(s.indices) == [0]
        assert not s.padded

    def test_closed_boundary_includes_endpoints(self):
        # pi/4 window: neighbors sit at angular distance pi/8 = delta/2 exactly
        s = angular_support((0.0, 0.0), (10.0, 0.0), 2000.0, np.pi / 4, 16)
        assert list(s.indices) == [0, 1, 15]

    def test_full_circle(self):
        s = angular_support((0.0, 0.0), (3.0, 4.0), 2000.0, 2 * np.pi, 16)
        assert list(s.indices) == list(range(16))

    def test_deterministic(self):
        a = angular_support((5.0, 7.0), (100.0, 40.0), 2000.0, np.pi / 8, 16)
        b = angular_support((5.0, 7.0), (100.0, 40.0), 2000.0, np.pi / 8, 16)
        assert np.array_equal(a.indices, b.indices)
        assert a.center_angle == b.center_angle

    def test_padding_when_window_misses_grid(self):
        # M=8 grid spacing pi/4; direction halfway between grid points 0 and 1
        # with a pi/8 window leaves the window empty -> padded to the nearest
        angle = np.pi / 8
        ue = (100.0 * np.cos(angle), 100.0 * np.sin(angle))
        s = angular_support((0.0, 0.0), ue, 2000.0, np.pi / 8, 8)
        assert s.padded and s.size == 1

    def test_torus_wrap_direction(self):
        # ue just across the seam lies to the left: angle pi, grid index M/2
        s = angular_support((1.0, 0.0), (1999.0, 0.0), 2000.0, np.pi / 8, 16)
        assert list(s.indices) == [8]

    def test_rejects_bad_delta(self):
        with pytest.raises(ValueError):
            angular_support((0, 0), (1, 0), 10.0, 0.0, 8)
        with pytest.raises(ValueError):
            angular_support((0, 0), (1, 0), 10.0, 7.0, 8)


class TestSampleChannel:
    def test_lies_in_span(self):
        rng = np.random.default_rng(0)
        M = 16
        F = DftBasis(M).matrix
        s = make_support([2, 3, 4], M)
        Fs = F[:, s.indices]
        P_perp = np.eye(M) - Fs @ Fs.conj().T
        for _ in range(50):
            h = sample_channel(s, 2.5e-9, rng)
            assert np.linalg.norm(P_perp @ h) < 1e-12 * np.linalg.norm(h) + 1e-15

    def test_rejects_nonpositive_beta(self):
        with pytest.raises(ValueError):
            sample_channel(make_support([0], 8), 0.0, np.random.default_rng(0))

    def test_full_support_covariance(self):
        rng = np.random.default_rng(1)
        M, beta, n = 8, 2.5, 20000
        s = make_support(range(M), M)
        H = np.array([sample_channel(s, beta, rng) for _ in range(n)]).T
        emp = H @ H.conj().T / n
        target = beta * np.eye(M)
        rel = np.linalg.norm(emp - target) / np.linalg.norm(target)
        assert rel < 0.05

    def test_mean_energy(self):
        rng = np.random.default_rng(2)
        M, beta = 8, 3.0
        s = make_support([1, 4], M)
        e = np.mean([np.linalg.norm(sample_channel(s, beta, rng)) ** 2
                     for _ in range(20000)])
        assert e == pytest.approx(beta * M, rel=0.05)


class TestTrueCovariance:
    def test_trace_and_eigenvalues(self):
        rng = np.random.default_rng(3)
        M = 16
        for _ in range(10):
            size = rng.integers(1, M + 1)
            idx = np.sort(rng.choice(M, size=size, replace=False))
            beta = float(10 ** rng.uniform(-10, -6))
            cov = true_covariance(make_support(idx, M), beta)
            assert np.trace(cov).real == pytest.approx(beta * M, rel=1e-12)
            ev = np.linalg.eigvalsh(cov)
            assert ev.min() > -1e-12 * beta * M
            nonzero = ev[ev > 1e-9 * beta * M]
            assert len(nonzero) == size
            assert np.allclose(nonzero, beta * M / size, rtol=1e-9)

    def test_matches_empirical(self):
        rng = np.random.default_rng(4)
        M, beta = 8, 1.0
        s = make_support([0, 3, 5], M)
        n = 20000
        H = np.array([sample_channel(s, beta, rng) for _ in range(n)]).T
        emp = H @ H.conj().T / n
        target = true_covariance(s, beta)
        assert np.linalg.norm(emp - target) / np.linalg.norm(target) < 0.05


class TestNetworkSampling:
    def test_single_pair_matches_sample_channel(self):
        layout = generate_layout(1, 1, 500.0, seed=9)
        supports = network_supports(layout, np.pi / 8, 8)
        direct = sample_channel(supports[0][0], layout.lsfc[0, 0],
                                np.random.default_rng(123))
        network = sample_network_channel(layout, supports,
                                         np.random.default_rng(123))
        assert np.allclose(network.blocks[0, 0], direct)

    def test_flattened_shape(self):
        layout = generate_layout(3, 5, 500.0, seed=10)
        supports = network_supports(layout, np.pi / 8, 4)
        real = sample_network_channel(layout, supports, np.random.default_rng(0))
        assert real.blocks.shape == (3, 5, 4)
        assert real.matrix.shape == (12, 5)
        assert np.allclose(real.matrix[4:8, 2], real.blocks[1, 2])

    def test_draws_uncorrelated(self):
        layout = generate_layout(1, 1, 500.0, seed=11)
        supports = network_supports(layout, np.pi / 2, 4)
        sampler = NetworkChannelSampler(layout, supports)
        rng = np.random.default_rng(12)
        n = 10000
        series = np.array([sampler.sample(rng, rb_index=i).blocks[0, 0, 0]
                           for i in range(n)])
        x, y = series.real[:-1], series.real[1:]
        rho = np.corrcoef(x, y)[0, 1]
        assert abs(rho) < 0.05
