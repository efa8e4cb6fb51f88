"""Single-ring DFT channel model with block fading.

Each RU-UE pair has a fixed angular support: the set of DFT grid angles
(multiples of 2*pi/M) falling inside a window of length ``delta`` centered on
the direction joining the two nodes. Channel vectors are drawn as Gaussian
combinations of the selected DFT columns, scaled so the expected squared norm
equals beta * M.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class DftBasis:
    """M x M unitary DFT matrix, entries exp(-2j pi m n / M) / sqrt(M)."""

    M: int
    matrix: np.ndarray = field(init=False)

    def __post_init__(self):
        m = np.arange(self.M)
        self.matrix = np.exp(-2j * np.pi * np.outer(m, m) / self.M) / np.sqrt(self.M)

    def columns(self, indices) -> np.ndarray:
        return self.matrix[:, np.asarray(indices, dtype=int)]


@dataclass
class AngularSupport:
    """Sorted DFT column indices spanned by one RU-UE channel."""

    indices: np.ndarray     # sorted subset of {0..M-1}
    center_angle: float     # radians in [0, 2*pi)
    width: float            # window length delta
    num_antennas: int
    padded: bool = False    # True when the window held no grid point

    @property
    def size(self) -> int:
        return len(self.indices)


@dataclass
class ChannelRealization:
    """Block-fading channel blocks for one resource block."""

    blocks: np.ndarray  # (L, K, M) complex, h[l, k]
    rb_index: int = 0

    @property
    def matrix(self) -> np.ndarray:
        """Stacked (L*M, K) channel matrix."""
        L, K, M = self.blocks.shape
        return self.blocks.transpose(0, 2, 1).reshape(L * M, K)


def _wrap_angle_distance(x):
    """Absolute angular distance of x to 0, modulo 2*pi (result in [0, pi])."""
    return np.abs(np.mod(x + np.pi, 2.0 * np.pi) - np.pi)


def angular_support(ru_pos, ue_pos, area_side: float, delta: float,
                    M: int) -> AngularSupport:
    """Angular support for the direction joining an RU-UE pair on the torus.

    Grid angles 2*pi*m/M within angular distance delta/2 of the center angle
    are included (closed interval: points at exactly delta/2 count, with a
    1e-12 rad slack so the wrap arithmetic cannot drop an endpoint). When the
    window is narrower than the grid spacing and captures no point, the support
    is padded with the single nearest grid index and flagged.
    """
    if not 0 < delta <= 2.0 * np.pi:
        raise ValueError("delta must lie in (0, 2*pi]")
    ru = np.asarray(ru_pos, dtype=float)
    ue = np.asarray(ue_pos, dtype=float)
    disp = ue - ru
    # minimal displacement on the torus, per axis
    disp = (disp + area_side / 2.0) % area_side - area_side / 2.0
    theta = float(np.arctan2(disp[1], disp[0])) % (2.0 * np.pi)
    grid = 2.0 * np.pi * np.arange(M) / M
    dist = _wrap_angle_distance(grid - theta)
    inside = dist <= delta / 2.0 + 1e-12
    padded = False
    if not inside.any():
        inside[np.argmin(dist)] = True
        padded = True
    return AngularSupport(indices=np.nonzero(inside)[0], center_angle=theta,
                          width=delta, num_antennas=M, padded=padded)


def _support_basis(support: AngularSupport) -> np.ndarray:
    m = np.arange(support.num_antennas)
    cols = np.asarray(support.indices, dtype=int)
    return np.exp(-2j * np.pi * np.outer(m, cols) / support.num_antennas) \
        / np.sqrt(support.num_antennas)


def sample_channel(support: AngularSupport, beta: float,
                   rng: np.random.Generator) -> np.ndarray:
    """One channel vector draw: sqrt(beta*M/|S|) * F_S @ nu, nu ~ CN(0, I)."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    r = support.size
    if r < 1:
        raise ValueError("support must contain at least one index")
    nu = (rng.standard_normal(r) + 1j * rng.standard_normal(r)) / np.sqrt(2.0)
    return np.sqrt(beta * support.num_antennas / r) * (_support_basis(support) @ nu)


def true_covariance(support: AngularSupport, beta: float) -> np.ndarray:
    """Exact channel covariance (beta*M/|S|) F_S F_S^H; trace = beta*M."""
    Fs = _support_basis(support)
    return beta * support.num_antennas / support.size * (Fs @ Fs.conj().T)


def network_supports(layout, delta: float, M: int) -> list:
    """Angular supports for every RU-UE pair; supports[l][k]."""
    return [[angular_support(layout.ru_positions[l], layout.ue_positions[k],
                             layout.area_side, delta, M)
             for k in range(layout.num_ues)]
            for l in range(layout.num_rus)]


class NetworkChannelSampler:
    """Draws full network channel realizations for a fixed layout.

    Precomputes the scaled per-pair DFT column blocks so repeated fading draws
    only cost the Gaussian coefficients. A caller-supplied generator keeps the
    draws reproducible; use independent streams for parallel workers.
    """

    def __init__(self, layout, supports):
        self.L = layout.num_rus
        self.K = layout.num_ues
        self.M = supports[0][0].num_antennas
        self._scaled = [[np.sqrt(layout.lsfc[l, k] * self.M / supports[l][k].size)
                         * _support_basis(supports[l][k])
                         for k in range(self.K)] for l in range(self.L)]

    def sample(self, rng: np.random.Generator, rb_index: int = 0) -> ChannelRealization:
        blocks = np.empty((self.L, self.K, self.M), dtype=complex)
        for l in range(self.L):
            for k in range(self.K):
                A = self._scaled[l][k]
                r = A.shape[1]
                nu = (rng.standard_normal(r) + 1j * rng.standard_normal(r)) / np.sqrt(2.0)
                blocks[l, k] = A @ nu
        return ChannelRealization(blocks=blocks, rb_index=rb_index)


def sample_network_channel(layout, supports, rng: np.random.Generator,
                           rb_index: int = 0) -> ChannelRealization:
    """Independent block-fading draw of every RU-UE channel in the network."""
    return NetworkChannelSampler(layout, supports).sample(rng, rb_index)
