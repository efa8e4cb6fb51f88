"""Uplink combining and ergodic rate evaluation.

Each serving RU forms a local LMMSE direction from its channel estimates; the
cluster then weights the per-RU outputs to maximize the nominal SINR and the
resulting unit-norm network-wide combiner is scored against the true channels
(the decoder is assumed to know the exact SINR).
"""

from dataclasses import dataclass

import numpy as np

from .channel import NetworkChannelSampler, _support_basis
from .dmrs import dmrs_field

ESTIMATOR_KINDS = ("ideal", "sp", "pp", "pm")


@dataclass
class Combiner:
    """Per-UE receive combiner: local directions, cluster weights, assembly."""

    cluster: np.ndarray        # (n_c,) serving RU ids
    local_vectors: np.ndarray  # (n_c, M) unit-norm per-RU directions
    weights: np.ndarray        # (n_c,) cluster combining coefficients
    vector: np.ndarray         # (L*M,) assembled unit-norm combiner


@dataclass
class RateReport:
    """Monte-Carlo rate summary for one estimator kind.

    Rates are in bit/s/Hz (base-2 log unless built with natural_log) and
    spectral efficiency applies the (1 - tau_p/T) pilot overhead factor.
    UEs with empty clusters are excluded: their entries are NaN.
    """

    kind: str
    sinr_samples: np.ndarray  # (n_fading, K)
    rate: np.ndarray          # (K,)
    se: np.ndarray            # (K,)
    excluded: np.ndarray      # UE ids without a serving cluster


def local_lmmse(estimates: np.ndarray, snr: float, index: int) -> np.ndarray:
    """Unit-norm local LMMSE direction for one user at one RU.

    ``estimates`` holds the RU's channel estimates as rows (n_users, M); the
    direction is (I/snr + sum_j h_j h_j^H)^-1 h_index, normalized. A zero
    estimate yields the zero vector (the edge contributes nothing).
    """
    est = np.asarray(estimates)
    M = est.shape[1]
    h_k = est[index]
    nrm_k = np.linalg.norm(h_k)
    if nrm_k == 0:
        return np.zeros(M, dtype=complex)
    A = np.eye(M) / snr + est.T @ est.conj()   # sum_j h_j h_j^H over the rows
    v = np.linalg.solve(A, h_k)
    return v / np.linalg.norm(v)


def _lmmse_directions(estimates: np.ndarray, snr: float) -> np.ndarray:
    """All local LMMSE directions at once; columns of the result are unit norm.

    ``estimates`` is (M, n_users) with users as columns; zero-estimate columns
    stay zero.
    """
    M, n = estimates.shape
    A = np.eye(M) / snr + estimates @ estimates.conj().T
    V = np.linalg.solve(A, estimates)
    norms = np.linalg.norm(V, axis=0)
    keep = norms > 0
    V[:, keep] /= norms[keep]
    return V


def cluster_combiner(desired_gains: np.ndarray, interference_gains: np.ndarray,
                     snr: float, local_vectors: np.ndarray, cluster: np.ndarray,
                     num_rus: int) -> Combiner:
    """Cluster-level weights maximizing the nominal SINR, plus assembly.

    With a = desired_gains and B the Gram matrix of the known interference
    gains, the weights solve (B + I/snr) w = a, i.e. the dominant generalized
    eigenvector of (a a^H, B + I/snr). The assembled combiner stacks
    w_l * v_l into the RU blocks and is normalized to unit norm.
    """
    a = np.asarray(desired_gains, dtype=complex)
    n_c = a.size
    B = np.zeros((n_c, n_c), dtype=complex)
    if interference_gains is not None and interference_gains.size:
        G = np.asarray(interference_gains, dtype=complex)
        B = G @ G.conj().T
    A = B + np.eye(n_c) / snr
    try:
        w = np.linalg.solve(A, a)
    except np.linalg.LinAlgError:
        w = np.linalg.solve(A + 1e-12 * np.eye(n_c), a)
    M = local_vectors.shape[1]
    vector = np.zeros(num_rus * M, dtype=complex)
    for ci, l in enumerate(cluster):
        vector[l * M:(l + 1) * M] = w[ci] * local_vectors[ci]
    nrm = np.linalg.norm(vector)
    if nrm > 0:
        vector /= nrm
        w = w / nrm
    return Combiner(cluster=np.asarray(cluster, dtype=int),
                    local_vectors=local_vectors, weights=w, vector=vector)


def uplink_sinr(vector: np.ndarray, channel_matrix: np.ndarray, snr: float,
                k: int) -> float:
    """Exact uplink SINR of a unit-norm combiner against the true channels."""
    g = vector.conj() @ channel_matrix
    power = np.abs(g) ** 2
    signal = power[k]
    interference = power.sum() - signal
    return float(signal / (1.0 / snr + interference))


def _edge_bases(graph, supports, subspaces, kind):
    """Per-RU list of projection bases aligned with user_sets order."""
    bases = []
    for l, users in enumerate(graph.user_sets):
        if kind == "sp":
            bases.append([_support_basis(supports[l][k]) for k in users])
        else:  # "pp"
            row = []
            for k in users:
                est = subspaces[(l, int(k))]
                row.append(est.basis if hasattr(est, "basis") else est)
            bases.append(row)
    return bases


def ergodic_rates(layout, graph, supports, snr: float, kinds, n_fading: int,
                  tau_p: int, T: int, rng: np.random.Generator,
                  subspaces: dict | None = None, natural_log: bool = False):
    """Monte-Carlo optimistic ergodic rates for one or more estimator kinds.

    All kinds share the same fading and pilot-noise draws (per-draw child
    streams), so reports are directly comparable. ``subspaces`` maps edges
    (l, k) to estimated bases and is required for kind "pp". Passing a single
    kind returns its RateReport; a sequence returns {kind: RateReport}.
    """
    single = isinstance(kinds, str)
    kind_list = [kinds] if single else list(kinds)
    for kind in kind_list:
        if kind not in ESTIMATOR_KINDS:
            raise ValueError(f"unknown estimator kind {kind!r}")
    if n_fading < 1:
        raise ValueError("n_fading must be >= 1")
    need_dmrs = any(k != "ideal" for k in kind_list)
    if need_dmrs and graph.dmrs_pilot is None:
        raise ValueError("graph has no DMRS pilots; run assign_dmrs first")
    if "pp" in kind_list and subspaces is None:
        raise ValueError("kind 'pp' needs estimated subspaces")

    L, K = layout.num_rus, layout.num_ues
    M = supports[0][0].num_antennas
    sampler = NetworkChannelSampler(layout, supports)
    pos = [{int(k): i for i, k in enumerate(users)} for users in graph.user_sets]
    proj = {}
    for kind in ("sp", "pp"):
        if kind in kind_list:
            proj[kind] = _edge_bases(graph, supports, subspaces, kind)
    excluded = graph.orphan_ues
    active = np.setdiff1d(np.arange(K), excluded)
    pm_scale = None if not need_dmrs else 1.0 / (tau_p * snr)

    sinr = {kind: np.full((n_fading, K), np.nan) for kind in kind_list}
    for d, draw_rng in enumerate(rng.spawn(n_fading)):
        ch_rng, pilot_rng = draw_rng.spawn(2)
        realization = sampler.sample(ch_rng, rb_index=d)
        Hmat = realization.matrix
        pm_per_ru = [None] * L
        if need_dmrs:
            for l in range(L):
                users = graph.user_sets[l]
                field = dmrs_field(realization.blocks[l], graph.dmrs_pilot,
                                   tau_p, snr, pilot_rng)
                if len(users):
                    pm_per_ru[l] = pm_scale * (
                        field.matrix @ field.book[:, graph.dmrs_pilot[users]])
        for kind in kind_list:
            est_per_ru = []
            for l in range(L):
                users = graph.user_sets[l]
                if len(users) == 0:
                    est_per_ru.append(np.zeros((M, 0), dtype=complex))
                    continue
                if kind == "ideal":
                    est = realization.blocks[l][users].T.copy()
                elif kind == "pm":
                    est = pm_per_ru[l]
                else:
                    est = np.column_stack([
                        B @ (B.conj().T @ pm_per_ru[l][:, i])
                        for i, B in enumerate(proj[kind][l])])
                est_per_ru.append(est)
            dirs = [_lmmse_directions(est, snr) if est.shape[1] else est
                    for est in est_per_ru]
            for k in active:
                cluster = graph.clusters[k]
                n_c = len(cluster)
                G = np.zeros((n_c, K), dtype=complex)
                local = np.empty((n_c, M), dtype=complex)
                for ci, l in enumerate(cluster):
                    users = graph.user_sets[l]
                    v = dirs[l][:, pos[l][k]]
                    local[ci] = v
                    G[ci, users] = v.conj() @ est_per_ru[l]
                known = np.nonzero(np.any(G != 0, axis=0))[0]
                interf = G[:, known[known != k]]
                comb = cluster_combiner(G[:, k], interf, snr, local, cluster, L)
                sinr[kind][d, k] = uplink_sinr(comb.vector, Hmat, snr, k)

    log = np.log if natural_log else np.log2
    factor = 1.0 - tau_p / T
    reports = {}
    for kind in kind_list:
        rate = np.full(K, np.nan)
        rate[active] = log(1.0 + sinr[kind][:, active]).mean(axis=0)
        reports[kind] = RateReport(kind=kind, sinr_samples=sinr[kind], rate=rate,
                                   se=factor * rate, excluded=excluded)
    return reports[kind_list[0]] if single else reports
