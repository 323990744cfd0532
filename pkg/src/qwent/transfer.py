"""Entanglement-transfer analysis: projections, the M matrix, and angle scans.

A coin projection is parametrized as |gamma> = cos(theta)|up> +
e^{i phi} sin(theta)|down>.  Transfer succeeds (the TC verdict) when the
nonzero spectrum of the reduced state is unchanged by the projection, which
for these states is equivalent to the post-projected Schmidt branches being
orthogonal with equal projection probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import qstate, qwalk
from .qstate import PureState, SubsystemLayout

ZERO_TOL = 1e-9          # overlap / probability-balance zero threshold
TRACELESS_TOL = 1e-10
SPECTRUM_CUTOFF = 1e-9   # eigenvalues below this count as zero
EIG_MATCH_TOL = 1e-8     # per-eigenvalue tolerance in spectra comparison
DEFAULT_GRID = (181, 361)

PAIR1 = ("c1", "w1")
PAIR2 = ("c2", "w2")


class DegenerateProjectionError(RuntimeError):
    """Projection probability is numerically zero."""


@dataclass(frozen=True)
class ProjectionAngles:
    """theta in [0, pi/2], phi in [0, 2 pi)."""

    theta: float
    phi: float

    def __post_init__(self):
        if not (-1e-12 <= self.theta <= np.pi / 2 + 1e-12):
            raise ValueError(f"theta {self.theta} outside [0, pi/2]")
        object.__setattr__(self, "phi", float(self.phi) % (2 * np.pi))

    def vector(self) -> np.ndarray:
        return coin_state(self.theta, self.phi)

    @classmethod
    def from_vector(cls, gamma) -> "ProjectionAngles":
        g = np.asarray(gamma, dtype=complex)
        g = g / np.linalg.norm(g)
        if abs(g[0]) > 1e-15:
            g = g * np.exp(-1j * np.angle(g[0]))
        theta = float(np.arccos(np.clip(abs(g[0]), 0.0, 1.0)))
        phi = float(np.angle(g[1])) % (2 * np.pi) if abs(g[1]) > 1e-15 else 0.0
        return cls(theta, phi)


def coin_state(theta: float, phi: float) -> np.ndarray:
    return np.array([np.cos(theta), np.exp(1j * phi) * np.sin(theta)])


def project_onto(s: PureState, label: str, vec, min_prob: float = 1e-12):
    """Project one factor onto a unit vector; returns (normalized rest, probability).

    The projected factor is removed from the layout.
    """
    v = np.asarray(vec, dtype=complex).reshape(-1)
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise ValueError("projection vector must be normalized")
    ax = s.layout.axis(label)
    t = np.tensordot(v.conj(), s.tensor_view, axes=(0, ax))
    prob = float(np.sum(np.abs(t) ** 2))
    if prob < min_prob:
        raise DegenerateProjectionError(
            f"projection of {label!r} has probability {prob} < {min_prob}")
    rest = SubsystemLayout(tuple(f for f in s.layout.factors if f[0] != label))
    return PureState(rest, (t / np.sqrt(prob)).reshape(-1)), prob


@dataclass(frozen=True)
class MMatrix:
    """tr_W(|u><v|) on the coin space, for orthogonal pair states u, v."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"M must be 2x2, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def expectation(self, gamma) -> complex:
        g = np.asarray(gamma, dtype=complex)
        return complex(g.conj() @ self.matrix @ g)


def compute_M(u: PureState, v: PureState, coin_label: str) -> MMatrix:
    """M[s, p] = sum_w <s, w|u> <v|p, w>, i.e. the walker trace of |u><v|."""
    if u.layout != v.layout:
        raise ValueError("u and v must share a layout")
    if abs(v.overlap(u)) > ZERO_TOL:
        raise ValueError(f"u and v must be orthogonal; |<v|u>| = {abs(v.overlap(u))}")
    ax = u.layout.axis(coin_label)
    if u.layout.dims[ax] != 2:
        raise ValueError("coin factor must have dimension 2")
    um = np.moveaxis(u.tensor_view, ax, 0).reshape(2, -1)
    vm = np.moveaxis(v.tensor_view, ax, 0).reshape(2, -1)
    return MMatrix(um @ vm.conj().T)


@dataclass(frozen=True)
class GammaSolution:
    """Coin projections with vanishing M expectation (orthogonality preserved)."""

    gammas: tuple[np.ndarray, ...]
    kind: str  # normal_family | svd_pair | zero_matrix
    eigenbasis: np.ndarray | None = None  # columns v1, v2 for the normal family

    def family_member(self, phi: float) -> np.ndarray:
        """(|v1> + e^{i phi}|v2>)/sqrt(2); the full solution set for normal M."""
        if self.eigenbasis is None:
            raise ValueError(f"no continuous family for kind {self.kind!r}")
        v = (self.eigenbasis[:, 0] + np.exp(1j * phi) * self.eigenbasis[:, 1]) / np.sqrt(2)
        return v


def find_gamma(m: MMatrix, tol: float = 1e-10) -> GammaSolution:
    """Constructive solutions of <gamma|M|gamma> = 0 for traceless 2x2 M."""
    mat = m.matrix
    if abs(m.trace) > TRACELESS_TOL:
        raise ValueError(f"M must be traceless; |tr M| = {abs(m.trace)}")
    plus = np.array([1.0, 1.0]) / np.sqrt(2)
    minus = np.array([1.0, -1.0]) / np.sqrt(2)
    if np.max(np.abs(mat)) < 1e-12:
        sol = GammaSolution((plus, minus), "zero_matrix")
    elif np.max(np.abs(mat @ mat.conj().T - mat.conj().T @ mat)) < 1e-10:
        # normal: M = lambda (|v1><v1| - |v2><v2|); balanced combinations vanish
        z = _normal_eigenbasis(mat)
        g0 = (z[:, 0] + z[:, 1]) / np.sqrt(2)
        g1 = (z[:, 0] - z[:, 1]) / np.sqrt(2)
        sol = GammaSolution((g0, g1), "normal_family", eigenbasis=z)
    else:
        _, _, vh = np.linalg.svd(mat)
        sol = GammaSolution((vh[0].conj(), vh[1].conj()), "svd_pair")
    for g in sol.gammas:
        if abs(m.expectation(g)) >= tol:
            raise AssertionError(
                f"constructed gamma has |<g|M|g>| = {abs(m.expectation(g))} >= {tol}")
    return sol


def _normal_eigenbasis(mat: np.ndarray) -> np.ndarray:
    """Orthonormal eigenbasis of a normal 2x2 matrix (Schur form is diagonal)."""
    import scipy.linalg
    t, z = scipy.linalg.schur(mat, output="complex")
    if abs(t[0, 1]) > 1e-9:
        raise AssertionError("Schur form of a normal matrix should be diagonal")
    return z


@dataclass(frozen=True)
class TransferReport:
    """Per-projection record of the transfer diagnostics."""

    angles: ProjectionAngles
    overlap: float
    p_up: float
    p_down: float
    entropy: float
    tc_satisfied: bool
    post_logneg: float | None = None
    post_state: PureState | None = None
    probability: float | None = None


def _nonzero_spectrum(eigs: np.ndarray) -> np.ndarray:
    e = np.sort(eigs.real)[::-1]
    return e[e > SPECTRUM_CUTOFF]


def _spectra_match(a: np.ndarray, b: np.ndarray) -> bool:
    if len(a) != len(b):
        return False
    return bool(np.all(np.abs(a - b) < EIG_MATCH_TOL))


def check_tc(psi: PureState, gamma, coin_label: str, remaining_bipartition) -> TransferReport:
    """Verify transferability of a single coin projection on a four-partite state.

    `remaining_bipartition` is the (left, right) label split of the layout
    after removing `coin_label`; `right` is the untouched party traced out in
    the spectral test.
    """
    left, right = remaining_bipartition
    left = [left] if isinstance(left, str) else list(left)
    right = [right] if isinstance(right, str) else list(right)
    g = np.asarray(gamma, dtype=complex)

    projected, p_proj = project_onto(psi, coin_label, g)
    spec_before = _nonzero_spectrum(qstate.partial_trace(psi, left + [coin_label]).eigenvalues())
    spec_after = _nonzero_spectrum(qstate.partial_trace(projected, left).eigenvalues())
    tc = _spectra_match(spec_before, spec_after)

    # Schmidt cross-check: same statement via singular values
    sd_before = qstate.schmidt(psi, (left + [coin_label], right))
    sd_after = qstate.schmidt(projected, (left, right))
    tc_schmidt = _spectra_match(_nonzero_spectrum(sd_before.coefficients ** 2),
                                _nonzero_spectrum(sd_after.coefficients ** 2))
    if tc != tc_schmidt:
        raise AssertionError("spectral and Schmidt transferability verdicts disagree")

    # branch diagnostics: G[j,k] = <gamma|u_j>^dag <gamma|u_k> over the Schmidt support
    r = sd_before.rank()
    side1_labels = [l for l in psi.layout.labels if l in set(left) | {coin_label}]
    side1 = qstate.SubsystemLayout(tuple(f for f in psi.layout.factors if f[0] in side1_labels))
    coin_ax = side1.axis(coin_label)
    gmat = np.empty((r, r), dtype=complex)
    branches = []
    for k in range(r):
        uk = sd_before.left_vectors[:, k].reshape(side1.dims)
        branches.append(np.tensordot(g.conj(), uk, axes=(0, coin_ax)).reshape(-1))
    for j in range(r):
        for k in range(r):
            gmat[j, k] = np.vdot(branches[j], branches[k])
    qs = gmat.diagonal().real
    p_up = float(qs.max())
    p_down = float(qs.min())
    off = np.abs(gmat - np.diag(gmat.diagonal()))
    overlap = float(off.max() ** 2) if r > 1 else 0.0
    tot = p_up + p_down
    entropy = qstate.shannon_entropy([p_up / tot, p_down / tot]) if tot > 0 else 0.0
    post_logneg = qstate.log_negativity(projected, (left, right))
    return TransferReport(
        angles=ProjectionAngles.from_vector(g),
        overlap=overlap, p_up=p_up, p_down=p_down, entropy=entropy,
        tc_satisfied=tc, post_logneg=post_logneg, post_state=projected,
        probability=p_proj)


# ---------------------------------------------------------------------------
# walk-output helpers


def pair_layout(coin_label: str, walker_label: str, lattice: int) -> SubsystemLayout:
    return SubsystemLayout(((coin_label, 2), (walker_label, lattice)))


def pair_outputs(spec: qwalk.WalkSpec, pair=("c", "w")) -> tuple[PureState, PureState]:
    """Walk outputs from |up, 1> and |down, 1> on a single coin-walker pair."""
    layout = pair_layout(pair[0], pair[1], spec.lattice_size)
    out = []
    for c0 in (qwalk.UP, qwalk.DOWN):
        s = qstate.basis_state(layout, {pair[0]: c0, pair[1]: 0})
        out.append(qwalk.evolve(s, pair, spec))
    return out[0], out[1]


def bell_walk_state(spec: qwalk.WalkSpec, p1: float = 0.5) -> PureState:
    """sqrt(p1)|Psi_up, Psi_up> + sqrt(p2)|Psi_down, Psi_down> on (c1,w1,c2,w2)."""
    p2 = 1.0 - p1
    layout = SubsystemLayout((("c1", 2), ("w1", spec.lattice_size),
                              ("c2", 2), ("w2", spec.lattice_size)))
    up = qstate.basis_state(layout, {"c1": 0, "w1": 0, "c2": 0, "w2": 0})
    down = qstate.basis_state(layout, {"c1": 1, "w1": 0, "c2": 1, "w2": 0})
    amp = np.sqrt(p1) * up.amplitudes + np.sqrt(p2) * down.amplitudes
    s = PureState(layout, amp)
    s = qwalk.evolve(s, PAIR1, spec)
    s = qwalk.evolve(s, PAIR2, spec)
    return s


def _grid_axes(grid) -> tuple[np.ndarray, np.ndarray]:
    n_theta, n_phi = grid
    if n_theta < 2 or n_phi < 2:
        raise ValueError("grid dims must be >= 2")
    return (np.linspace(0.0, np.pi / 2, n_theta),
            np.linspace(0.0, 2 * np.pi, n_phi))


def scan_projections(psi_up: PureState, psi_down: PureState, grid=DEFAULT_GRID,
                     coin_label: str = "c") -> list[TransferReport]:
    """Overlap, projection probabilities and entropy on a (theta, phi) grid.

    Rows are theta-major then phi.
    """
    thetas, phis = _grid_axes(grid)
    ax = psi_up.layout.axis(coin_label)
    um = np.moveaxis(psi_up.tensor_view, ax, 0).reshape(2, -1)
    dm = np.moveaxis(psi_down.tensor_view, ax, 0).reshape(2, -1)
    rows = []
    for th in thetas:
        for ph in phis:
            g = coin_state(th, ph)
            a = g.conj() @ um
            b = g.conj() @ dm
            overlap = float(abs(np.vdot(a, b)) ** 2)
            pu = float(np.vdot(a, a).real)
            pd = float(np.vdot(b, b).real)
            tot = pu + pd
            ent = qstate.shannon_entropy([pu / tot, pd / tot]) if tot > 0 else 0.0
            tc = overlap < ZERO_TOL and abs(pu - pd) < ZERO_TOL
            rows.append(TransferReport(ProjectionAngles(th, ph), overlap, pu, pd, ent, tc))
    return rows


@dataclass(frozen=True)
class DoubleScanRow:
    """One (theta, phi) cell of the double-projection map."""

    angles: ProjectionAngles
    logneg: float
    probability: float
    skipped: bool = False  # zero-probability branch


def _logneg_prob_from_sv(sv: np.ndarray) -> tuple[float, float]:
    lam = sv ** 2
    prob = float(lam.sum())
    if prob < 1e-18:
        return 0.0, 0.0
    p = lam / prob
    p = p[p > 1e-16]
    return float(np.log2(np.sum(np.sqrt(p)) ** 2)), prob


def double_projection_scan(state: PureState, grid=DEFAULT_GRID, second: str = "same",
                           inner_grid=(46, 91)) -> list[DoubleScanRow]:
    """Walker-walker log-negativity map after projecting both coins.

    ``second="same"`` projects both coins along the same |gamma(theta, phi)>
    (the map whose isolated maxima carry the transfer probability);
    ``second="optimize"`` maximizes the second projection over its own grid.
    """
    thetas, phis = _grid_axes(grid)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    gconj = np.stack([np.cos(tt), np.exp(-1j * pp) * np.sin(tt)], axis=-1).reshape(-1, 2)

    if second == "same":
        t = _four_partite_tensor(state)  # [c1, w1, c2, w2]
        k_all = np.einsum("ga,gb,awbv->gwv", gconj, gconj, t, optimize=True)
        sv = np.linalg.svd(k_all, compute_uv=False)
        rows = []
        i = 0
        for th in thetas:
            for ph in phis:
                n, prob = _logneg_prob_from_sv(sv[i])
                rows.append(DoubleScanRow(ProjectionAngles(th, ph), n, prob,
                                          skipped=prob < 1e-12))
                i += 1
        return rows

    if second != "optimize":
        raise ValueError(f"unknown second-projection mode {second!r}")

    sd = qstate.schmidt(state, (["c1", "w1"], ["c2", "w2"]))
    r = sd.rank()
    c1 = state.layout.dim("c1")
    w1 = state.layout.dim("w1")
    u = sd.left_vectors[:, :r].reshape(c1, w1, r) * sd.coefficients[:r]
    v = sd.right_vectors[:, :r].reshape(state.layout.dim("c2"), state.layout.dim("w2"), r)
    dconj = _inner_gamma_conj(inner_grid)
    seeds = _second_projection_seeds(v)
    if seeds is not None:
        dconj = np.concatenate([dconj, seeds.conj()], axis=0)
    y = np.einsum("ga,awk->gwk", dconj, v, optimize=True)           # inner branches
    gy = np.einsum("gwj,gwk->gjk", y.conj(), y, optimize=True)      # inner Gram matrices
    rows = []
    for th in thetas:
        for ph in phis:
            g = coin_state(th, ph)
            x = np.tensordot(g.conj(), u, axes=(0, 0))              # (w1, r)
            gx = x.conj().T @ x
            lam = np.linalg.eigvals(np.transpose(gy, (0, 2, 1)) @ gx).real
            lam = np.clip(lam, 0.0, None)
            prob = lam.sum(axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                n = 2 * np.log2(np.sqrt(lam).sum(axis=1)) - np.log2(prob)
            n = np.where(prob > 1e-15, n, -np.inf)
            best = int(np.argmax(n))
            if not np.isfinite(n[best]):
                rows.append(DoubleScanRow(ProjectionAngles(th, ph), 0.0, 0.0, skipped=True))
            else:
                rows.append(DoubleScanRow(ProjectionAngles(th, ph),
                                          float(n[best]), float(prob[best])))
    return rows


def _four_partite_tensor(state: PureState) -> np.ndarray:
    axes = state.layout.axes(("c1", "w1", "c2", "w2"))
    return state.tensor_view.transpose(axes)


def _inner_gamma_conj(grid) -> np.ndarray:
    thetas, phis = _grid_axes(grid)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    return np.stack([np.cos(tt), np.exp(-1j * pp) * np.sin(tt)], axis=-1).reshape(-1, 2)


def _second_projection_seeds(v: np.ndarray) -> np.ndarray | None:
    """find_gamma candidates for the second coin when the side-2 rank is 2."""
    if v.shape[2] != 2:
        return None
    m = MMatrix(v[:, :, 0].reshape(2, -1) @ v[:, :, 1].reshape(2, -1).conj().T)
    if abs(m.trace) > TRACELESS_TOL:
        return None
    try:
        sol = find_gamma(m)
    except (ValueError, AssertionError):
        return None
    return np.stack(sol.gammas, axis=0)


# ---------------------------------------------------------------------------
# refinement helpers


def _dedupe_gammas(entries, tol: float = 1e-6):
    kept = []
    for e in entries:
        g = e[0]
        if all(abs(abs(np.vdot(k[0], g)) - 1.0) > tol for k in kept):
            kept.append(e)
    return kept


def find_overlap_zeros(psi_up: PureState, psi_down: PureState, grid=DEFAULT_GRID,
                       coin_label: str = "c", candidate_cut: float = 1e-3,
                       zero_tol: float = 1e-12):
    """Grid scan plus local refinement of the squared-overlap zeros.

    Returns a list of (gamma, TransferReport) pairs, one per distinct zero.
    """
    ax = psi_up.layout.axis(coin_label)
    um = np.moveaxis(psi_up.tensor_view, ax, 0).reshape(2, -1)
    dm = np.moveaxis(psi_down.tensor_view, ax, 0).reshape(2, -1)

    def objective(x):
        g = coin_state(x[0], x[1])
        return abs(np.vdot(g.conj() @ um, g.conj() @ dm)) ** 2

    rows = scan_projections(psi_up, psi_down, grid, coin_label)
    cands = [r for r in rows if r.overlap < candidate_cut]
    found = []
    for r in cands:
        res = minimize(objective, [r.angles.theta, r.angles.phi], method="Nelder-Mead",
                       options=dict(xatol=1e-13, fatol=1e-20, maxiter=2000))
        if res.fun < zero_tol:
            th = float(np.clip(res.x[0], 0.0, np.pi / 2))
            ang = ProjectionAngles(th, float(res.x[1]))
            found.append((ang.vector(), ang))
    found = _dedupe_gammas(found)
    out = []
    for g, ang in found:
        a = g.conj() @ um
        b = g.conj() @ dm
        pu, pd = float(np.vdot(a, a).real), float(np.vdot(b, b).real)
        tot = pu + pd
        ent = qstate.shannon_entropy([pu / tot, pd / tot])
        ov = float(abs(np.vdot(a, b)) ** 2)
        out.append((g, TransferReport(ang, ov, pu, pd, ent,
                                      ov < ZERO_TOL and abs(pu - pd) < ZERO_TOL)))
    return out


def maximum_logneg_spots(state: PureState, grid=DEFAULT_GRID, threshold: float = 1e-6,
                         refine: bool = True):
    """Isolated maxima of the same-gamma double-projection map, with probabilities.

    Returns (spots, total_probability) where each spot is a refined
    DoubleScanRow at log-negativity >= 1 - threshold.  Projections onto the
    orthogonal complement of a spot appear as their own spots on the map, so
    the probability sum already includes those branches.
    """
    rows = double_projection_scan(state, grid, second="same")
    t = _four_partite_tensor(state)

    def neg_logneg(x):
        g = coin_state(x[0], x[1])
        k = np.einsum("a,b,awbv->wv", g.conj(), g.conj(), t)
        n, _ = _logneg_prob_from_sv(np.linalg.svd(k, compute_uv=False))
        return -n

    cands = [(r.angles.vector(), r) for r in rows if r.logneg >= 1.0 - max(threshold, 1e-4)]
    spots = []
    for g0, r in cands:
        if refine:
            res = minimize(neg_logneg, [r.angles.theta, r.angles.phi], method="Nelder-Mead",
                           options=dict(xatol=1e-12, fatol=1e-15, maxiter=2000))
            th = float(np.clip(res.x[0], 0.0, np.pi / 2))
            ang = ProjectionAngles(th, float(res.x[1]))
        else:
            ang = r.angles
        g = ang.vector()
        k = np.einsum("a,b,awbv->wv", g.conj(), g.conj(), t)
        n, prob = _logneg_prob_from_sv(np.linalg.svd(k, compute_uv=False))
        if n >= 1.0 - threshold:
            spots.append((g, DoubleScanRow(ang, n, prob)))
    spots = _dedupe_gammas(spots)
    total = float(sum(row.probability for _, row in spots))
    return [row for _, row in spots], total
