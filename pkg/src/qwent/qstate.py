"""Dense pure-state representation and entanglement diagnostics.

States live on a labeled tensor-factor structure (``SubsystemLayout``); the
canonical four-partite order used throughout the package is
(coin 1, walker 1, coin 2, walker 2).  Amplitudes are stored row-major over
the factor order, so layouts fix the linear index bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NORM_TOL = 1e-12
HERM_TOL = 1e-10
ORTHO_TOL = 1e-9


class LayoutError(ValueError):
    """Malformed layout or bipartition."""


@dataclass(frozen=True)
class SubsystemLayout:
    """Ordered list of (label, dim) tensor factors."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple((str(l), int(d)) for l, d in self.factors))
        labels = [l for l, _ in self.factors]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate factor labels in {labels}")
        if any(d < 1 for _, d in self.factors):
            raise LayoutError("all factor dimensions must be >= 1")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown label {label!r}; have {self.labels}") from None

    def dim(self, label: str) -> int:
        return self.dims[self.axis(label)]

    def axes(self, labels) -> tuple[int, ...]:
        return tuple(self.axis(l) for l in labels)

    def sublayout(self, keep) -> "SubsystemLayout":
        keep = set(keep)
        return SubsystemLayout(tuple(f for f in self.factors if f[0] in keep))

    def check_bipartition(self, left, right) -> None:
        left, right = set(left), set(right)
        if not left or not right:
            raise LayoutError("bipartition parts must be nonempty")
        if left & right:
            raise LayoutError(f"bipartition parts overlap: {left & right}")
        if left | right != set(self.labels):
            raise LayoutError(
                f"bipartition {left} | {right} does not cover layout labels {self.labels}")


def _as_layout(layout) -> SubsystemLayout:
    if isinstance(layout, SubsystemLayout):
        return layout
    return SubsystemLayout(tuple(layout))


@dataclass(frozen=True)
class PureState:
    """Normalized dense amplitude vector over a layout (row-major factor order)."""

    layout: SubsystemLayout
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "layout", _as_layout(self.layout))
        amp = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amp.size != self.layout.total_dim:
            raise LayoutError(
                f"amplitude length {amp.size} != layout dimension {self.layout.total_dim}")
        n = np.linalg.norm(amp)
        if abs(n - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {n} deviates from 1 by more than {NORM_TOL}")
        amp = amp.copy()
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)

    @property
    def tensor_view(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per factor (read-only view)."""
        return self.amplitudes.reshape(self.layout.dims)

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "PureState") -> float:
        """|<self|other>|^2, i.e. equality modulo global phase."""
        return abs(self.overlap(other)) ** 2


def basis_state(layout, indices: dict[str, int]) -> PureState:
    """Computational basis state with the given (0-based) index per factor."""
    layout = _as_layout(layout)
    amp = np.zeros(layout.dims, dtype=complex)
    amp[tuple(indices[l] for l in layout.labels)] = 1.0
    return PureState(layout, amp.reshape(-1))


def pure_from_vector(label: str, vec) -> PureState:
    """Single-factor state from an (unnormalized) coefficient vector."""
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    return PureState(SubsystemLayout(((label, vec.size),)), vec / np.linalg.norm(vec))


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, unit-trace, positive-semidefinite matrix on a (sub)layout."""

    layout: SubsystemLayout
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "layout", _as_layout(self.layout))
        m = np.asarray(self.matrix, dtype=complex)
        d = self.layout.total_dim
        if m.shape != (d, d):
            raise LayoutError(f"matrix shape {m.shape} != layout dimension ({d},{d})")
        if np.max(np.abs(m - m.conj().T)) > HERM_TOL:
            raise ValueError("density matrix is not Hermitian within 1e-10")
        if abs(np.trace(m).real - 1.0) > HERM_TOL or abs(np.trace(m).imag) > HERM_TOL:
            raise ValueError("density matrix trace deviates from 1 by more than 1e-10")
        if np.linalg.eigvalsh(m).min() < -HERM_TOL:
            raise ValueError("density matrix has an eigenvalue below -1e-10")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in descending order."""
        return np.linalg.eigvalsh(self.matrix)[::-1]


@dataclass(frozen=True)
class SchmidtData:
    """Schmidt coefficients (descending) and the matching orthonormal vectors."""

    coefficients: np.ndarray
    left_vectors: np.ndarray   # columns are |u_k>
    right_vectors: np.ndarray  # columns are |v_k>

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if abs(np.sum(c ** 2) - 1.0) > HERM_TOL:
            raise ValueError("squared Schmidt coefficients do not sum to 1 within 1e-10")
        for v in (self.left_vectors, self.right_vectors):
            g = v.conj().T @ v
            if np.max(np.abs(g - np.eye(g.shape[0]))) > HERM_TOL:
                raise ValueError("Schmidt vectors are not orthonormal within 1e-10")

    def rank(self, tol: float = ORTHO_TOL) -> int:
        return int(np.sum(self.coefficients > tol))


def tensor(a: PureState, b: PureState) -> PureState:
    """Kronecker product; factor labels must be disjoint."""
    if set(a.layout.labels) & set(b.layout.labels):
        raise LayoutError(
            f"duplicate labels {set(a.layout.labels) & set(b.layout.labels)} in tensor product")
    layout = SubsystemLayout(a.layout.factors + b.layout.factors)
    return PureState(layout, np.kron(a.amplitudes, b.amplitudes))


def partial_trace(s, keep) -> DensityOperator:
    """Reduced density operator on the `keep` factors (original factor order)."""
    keep = [keep] if isinstance(keep, str) else list(keep)
    layout = s.layout
    keep_set = set(keep)
    if not keep_set or keep_set == set(layout.labels):
        raise LayoutError("keep-set must be a nonempty proper subset of the labels")
    keep_axes = [i for i, l in enumerate(layout.labels) if l in keep_set]
    drop_axes = [i for i, l in enumerate(layout.labels) if l not in keep_set]
    dims = layout.dims
    dk = int(np.prod([dims[i] for i in keep_axes]))
    dd = int(np.prod([dims[i] for i in drop_axes]))
    if isinstance(s, PureState):
        m = s.tensor_view.transpose(keep_axes + drop_axes).reshape(dk, dd)
        rho = m @ m.conj().T
    elif isinstance(s, DensityOperator):
        n = len(dims)
        perm = keep_axes + drop_axes
        t = (s.matrix.reshape(dims + dims)
                     .transpose(perm + [n + i for i in perm])
                     .reshape(dk, dd, dk, dd))
        rho = np.einsum("iaja->ij", t)
    else:
        raise TypeError(f"unsupported input type {type(s)}")
    return DensityOperator(layout.sublayout(keep_set), rho)


def schmidt(s: PureState, bipartition) -> SchmidtData:
    """Schmidt decomposition across a bipartition of the layout labels."""
    left, right = bipartition
    left = [left] if isinstance(left, str) else list(left)
    right = [right] if isinstance(right, str) else list(right)
    s.layout.check_bipartition(left, right)
    m = state_matrix(s, left, right)
    u, sv, vh = np.linalg.svd(m, full_matrices=False)
    return SchmidtData(sv, u, vh.conj().T)


def state_matrix(s: PureState, left, right) -> np.ndarray:
    """Amplitudes reshaped to a (dim_left, dim_right) matrix, labels in layout order."""
    layout = s.layout
    left_axes = [i for i, l in enumerate(layout.labels) if l in set(left)]
    right_axes = [i for i, l in enumerate(layout.labels) if l in set(right)]
    dims = layout.dims
    dl = int(np.prod([dims[i] for i in left_axes]))
    dr = int(np.prod([dims[i] for i in right_axes]))
    return s.tensor_view.transpose(left_axes + right_axes).reshape(dl, dr)


def log_negativity(s: PureState, bipartition) -> float:
    """log2 of the trace norm of the partial transpose over the first part.

    Computed from the full projector; cross-checked against the pure-state
    identity log2((sum_k sqrt(p_k))^2).
    """
    left, right = bipartition
    left = [left] if isinstance(left, str) else list(left)
    right = [right] if isinstance(right, str) else list(right)
    s.layout.check_bipartition(left, right)
    m = state_matrix(s, left, right)
    dl, dr = m.shape
    rho = np.outer(m.reshape(-1), m.conj().reshape(-1))
    rho_pt = (rho.reshape(dl, dr, dl, dr)
                 .transpose(2, 1, 0, 3)
                 .reshape(dl * dr, dl * dr))
    # partial transpose of a Hermitian operator is Hermitian
    trace_norm = float(np.sum(np.abs(np.linalg.eigvalsh(rho_pt))))
    n = float(np.log2(trace_norm))
    sv = np.linalg.svd(m, compute_uv=False)
    n_schmidt = float(np.log2(np.sum(sv) ** 2))
    if abs(n - n_schmidt) > 1e-9:
        raise AssertionError(
            f"partial-transpose log-negativity {n} disagrees with Schmidt identity {n_schmidt}")
    return n


def shannon_entropy(p) -> float:
    """-sum p_i ln p_i (natural log)."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("probabilities must be nonnegative")
    if abs(p.sum() - 1.0) > ORTHO_TOL:
        raise ValueError(f"probabilities sum to {p.sum()}, not 1")
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def majorizes(a, p, slack: float = 1e-10) -> bool:
    """True iff the spectrum of Hermitian `a` majorizes the probability vector `p`.

    If dim(a) exceeds len(p) the len(p) largest eigenvalues are used.
    """
    m = a.matrix if isinstance(a, DensityOperator) else np.asarray(a, dtype=complex)
    if np.max(np.abs(m - m.conj().T)) > HERM_TOL:
        raise ValueError("majorizes requires a Hermitian matrix")
    lam = np.sort(np.linalg.eigvalsh(m).real)[::-1]
    pv = np.sort(np.asarray(p, dtype=float))[::-1]
    n = len(pv)
    lam = lam[:n]
    return bool(np.all(np.cumsum(lam) - np.cumsum(pv) >= -slack))
