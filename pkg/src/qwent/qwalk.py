"""Discrete-time coined quantum-walk dynamics on labeled coin-walker pairs.

Coin basis index 0 is "up", index 1 is "down".  Walker positions are stored
0-based internally and displayed 1-based.  The controlled shift moves the
down component forward; shifting past the lattice edge is a hard error, never
a silent wraparound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qstate import PureState, SubsystemLayout

UNITARY_TOL = 1e-12

UP, DOWN = 0, 1

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


class BoundaryOverflowError(RuntimeError):
    """A shift would move occupied amplitude past the lattice edge."""


@dataclass(frozen=True)
class CoinOp:
    """2x2 unitary coin flip."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"coin must be 2x2, got {m.shape}")
        if np.max(np.abs(m.conj().T @ m - np.eye(2))) > UNITARY_TOL:
            raise ValueError("coin matrix is not unitary within 1e-12")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "CoinOp":
        return cls(np.eye(2))

    @classmethod
    def hadamard(cls) -> "CoinOp":
        return cls(_HADAMARD)

    @classmethod
    def from_entries(cls, c11, c12, c21, c22) -> "CoinOp":
        return cls(np.array([[c11, c12], [c21, c22]], dtype=complex))


def haar_random_coin(rng: np.random.Generator) -> CoinOp:
    """Haar-distributed 2x2 unitary.

    QR of a complex standard-Gaussian matrix, with the R diagonal phase fixed;
    identical generator states yield identical coins bit-exactly.
    """
    z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q, r = np.linalg.qr(z / np.sqrt(2.0))
    lam = np.diag(r) / np.abs(np.diag(r))
    return CoinOp(q * lam)


@dataclass(frozen=True)
class NamedCoin:
    """Coin-sequence recipe: identity, hadamard, custom entries, or seeded Haar draws."""

    kind: str
    entries: tuple | None = None
    seed: int | None = None

    KINDS = ("identity", "hadamard", "custom", "haar_random")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown coin kind {self.kind!r}; expected one of {self.KINDS}")
        if self.kind == "custom" and self.entries is None:
            raise ValueError("custom coin requires explicit entries")
        if self.kind == "haar_random" and self.seed is None:
            raise ValueError("haar_random coin requires a seed")

    def coins(self, steps: int) -> tuple[CoinOp, ...]:
        if self.kind == "identity":
            return (CoinOp.identity(),) * steps
        if self.kind == "hadamard":
            return (CoinOp.hadamard(),) * steps
        if self.kind == "custom":
            return (CoinOp.from_entries(*self.entries),) * steps
        rng = np.random.default_rng(self.seed)
        return tuple(haar_random_coin(rng) for _ in range(steps))


@dataclass(frozen=True)
class WalkSpec:
    """Per-step coin list and lattice size for an n-step walk."""

    steps: int
    coins: tuple[CoinOp, ...]
    lattice_size: int

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        if len(self.coins) != self.steps:
            raise ValueError(f"need {self.steps} coins, got {len(self.coins)}")
        if self.lattice_size < 1:
            raise ValueError("lattice_size must be positive")

    @classmethod
    def make(cls, steps: int, coin: NamedCoin, max_initial_position: int = 0,
             lattice_size: int | None = None) -> "WalkSpec":
        if lattice_size is None:
            lattice_size = required_lattice(max_initial_position, steps)
        return cls(steps, coin.coins(steps), lattice_size)


def required_lattice(max_initial_position: int, steps: int) -> int:
    """Smallest lattice with no boundary leakage (0-based positions)."""
    return max_initial_position + steps + 1


def _pair_axes(s: PureState, pair) -> tuple[int, int]:
    coin_label, walker_label = pair
    ca = s.layout.axis(coin_label)
    wa = s.layout.axis(walker_label)
    if s.layout.dims[ca] != 2:
        raise ValueError(f"coin factor {coin_label!r} must have dimension 2")
    return ca, wa


def shift(s: PureState, pair, power: int = 1) -> PureState:
    """Controlled shift S^power: up component fixed, down component moved forward."""
    if power < 0:
        raise ValueError("power must be nonnegative")
    if power == 0:
        return s
    ca, wa = _pair_axes(s, pair)
    t = s.tensor_view
    down = np.take(t, DOWN, axis=ca)
    # axis index in `down` for the walker shifts by one if the coin axis came first
    dwa = wa - 1 if ca < wa else wa
    tail = np.moveaxis(down, dwa, 0)[-power:]
    if np.any(np.abs(tail) > 1e-12):
        raise BoundaryOverflowError(
            f"shift by {power} would move occupied down-amplitude past the lattice edge "
            f"(walker {pair[1]!r}, size {s.layout.dims[wa]})")
    new_down = np.roll(down, power, axis=dwa)
    out = t.copy()
    idx = [slice(None)] * t.ndim
    idx[ca] = DOWN
    out[tuple(idx)] = new_down
    return PureState(s.layout, out.reshape(-1))


def apply_coin(s: PureState, coin_label: str, coin: CoinOp) -> PureState:
    """Apply the coin unitary to one 2-dimensional factor."""
    ca = s.layout.axis(coin_label)
    if s.layout.dims[ca] != 2:
        raise ValueError(f"coin factor {coin_label!r} must have dimension 2")
    t = np.moveaxis(s.tensor_view, ca, 0)
    t = np.tensordot(coin.matrix, t, axes=(1, 0))
    t = np.moveaxis(t, 0, ca)
    return PureState(s.layout, t.reshape(-1))


def walk_step(s: PureState, pair, coin: CoinOp) -> PureState:
    """One walk operation W_C = S (C (x) I)."""
    return shift(apply_coin(s, pair[0], coin), pair, 1)


def evolve(s: PureState, pair, spec: WalkSpec) -> PureState:
    """Apply `spec.steps` walk operations with the per-step coins."""
    if s.layout.dim(pair[1]) < spec.lattice_size:
        raise BoundaryOverflowError(
            f"walker {pair[1]!r} has dimension {s.layout.dim(pair[1])}, "
            f"but the walk needs {spec.lattice_size}")
    for coin in spec.coins:
        s = walk_step(s, pair, coin)
    return s
