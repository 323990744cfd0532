"""Two-photon optics for the polarization reload stage.

States are superpositions of two creation operators acting on the vacuum,
with modes labeled (port, polarization, oam): port a or b, polarization in
the diagonal basis {+, -}, and a positive orbital-angular-momentum index that
plays the role of the walker position.  A half-waveplate rotates polarization
within a port; the polarizing beamsplitter transmits + and swaps the port of
-; coincidence post-selection keeps one photon per port.  The surviving
coincidence term restores a Bell state in polarization with probability 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qstate
from .qstate import PureState, SubsystemLayout

NORM_TOL = 1e-12

PORTS = ("a", "b")
POLS = ("+", "-")

# coin-basis vectors of the diagonal polarizations: |+-> = (|up> +- |down>)/sqrt(2)
_POL_TO_COIN = {"+": np.array([1.0, 1.0]) / np.sqrt(2),
                "-": np.array([1.0, -1.0]) / np.sqrt(2)}


def _check_mode(mode):
    port, pol, oam = mode
    if port not in PORTS or pol not in POLS or not (isinstance(oam, int) and oam >= 1):
        raise ValueError(f"bad mode {mode!r}; expected (a|b, +|-, oam >= 1)")
    return (port, pol, oam)


def _canonical_pair(m, n):
    return (m, n) if m <= n else (n, m)


@dataclass(frozen=True)
class TwoPhotonState:
    """Amplitudes over unordered mode pairs, bosonic normalization built in.

    The stored amplitude c of a pair {m, n} multiplies the two-photon vector
    a_m^dag a_n^dag |vac>, whose norm is 1 for m != n and sqrt(2) for m = n,
    so the squared norm is sum |c|^2 (1 + [m = n]).
    """

    amplitudes: dict = field(repr=False)

    def __post_init__(self):
        amps = {}
        for (m, n), c in self.amplitudes.items():
            pair = _canonical_pair(_check_mode(m), _check_mode(n))
            amps[pair] = amps.get(pair, 0.0) + complex(c)
        amps = {p: c for p, c in amps.items() if abs(c) > 0}
        total = self._norm_sq(amps)
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"two-photon norm^2 {total} deviates from 1 beyond {NORM_TOL}")
        object.__setattr__(self, "amplitudes", amps)

    @staticmethod
    def _norm_sq(amps) -> float:
        return float(sum(abs(c) ** 2 * (2.0 if m == n else 1.0)
                         for (m, n), c in amps.items()))

    def overlap(self, other: "TwoPhotonState") -> complex:
        keys = set(self.amplitudes) | set(other.amplitudes)
        return complex(sum(np.conj(self.amplitudes.get(k, 0.0)) * other.amplitudes.get(k, 0.0)
                           * (2.0 if k[0] == k[1] else 1.0) for k in keys))

    def fidelity(self, other: "TwoPhotonState") -> float:
        return abs(self.overlap(other)) ** 2


def two_photon(pairs: dict) -> TwoPhotonState:
    """Build and normalize a state from {(mode, mode): amplitude} entries."""
    amps = {}
    for (m, n), c in pairs.items():
        pair = _canonical_pair(_check_mode(tuple(m)), _check_mode(tuple(n)))
        amps[pair] = amps.get(pair, 0.0) + complex(c)
    norm = np.sqrt(TwoPhotonState._norm_sq(amps))
    return TwoPhotonState({p: c / norm for p, c in amps.items()})


def bell_oam_input(sign: int) -> TwoPhotonState:
    """(a+1 b+1 + sign a+2 b+2)/sqrt(2): diagonal-polarized photons, oam-entangled."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    return two_photon({(("a", "+", 1), ("b", "+", 1)): 1.0,
                       (("a", "+", 2), ("b", "+", 2)): float(sign)})


def _apply_mode_map(s: TwoPhotonState, mapfn) -> TwoPhotonState:
    """Linear extension of a single-mode map to the two-photon space.

    mapfn(mode) -> {mode: coefficient}; must be unitary on the single-photon
    space for the result to stay normalized.
    """
    out = {}
    for (m, n), c in s.amplitudes.items():
        for m2, cm in mapfn(m).items():
            for n2, cn in mapfn(n).items():
                pair = _canonical_pair(m2, n2)
                out[pair] = out.get(pair, 0.0) + c * cm * cn
    out = {p: c for p, c in out.items() if abs(c) > 1e-15}
    return TwoPhotonState(out)


def half_waveplate(s: TwoPhotonState, port: str, angle: float) -> TwoPhotonState:
    """Polarization rotation within one port:
    + -> cos(angle) + + i sin(angle) -, and symmetrically for -."""
    if port not in PORTS:
        raise ValueError(f"unknown port {port!r}")
    co, si = np.cos(angle), 1j * np.sin(angle)

    def mapfn(mode):
        p, pol, oam = mode
        if p != port:
            return {mode: 1.0}
        other = "-" if pol == "+" else "+"
        return {(p, pol, oam): co, (p, other, oam): si}

    return _apply_mode_map(s, mapfn)


def polarizing_beamsplitter(s: TwoPhotonState) -> TwoPhotonState:
    """Transmit + polarization, swap the port of - polarization."""

    def mapfn(mode):
        p, pol, oam = mode
        if pol == "+":
            return {mode: 1.0}
        return {(("b" if p == "a" else "a"), pol, oam): 1.0}

    return _apply_mode_map(s, mapfn)


class EmptyBranchError(RuntimeError):
    """Post-selection removed all amplitude."""


def postselect_coincidence(s: TwoPhotonState):
    """Keep events with one photon in each port; returns (state, probability)."""
    kept = {p: c for p, c in s.amplitudes.items() if p[0][0] != p[1][0]}
    prob = TwoPhotonState._norm_sq(kept)
    if prob < 1e-15:
        raise EmptyBranchError("no two-fold coincidence amplitude left")
    norm = np.sqrt(prob)
    return TwoPhotonState({p: c / norm for p, c in kept.items()}), float(prob)


def to_four_partite(s: TwoPhotonState) -> PureState:
    """Map a coincidence state onto the (coin 1, walker 1, coin 2, walker 2) layout.

    The port-a photon becomes pair 1 and the port-b photon pair 2; diagonal
    polarizations map to coin superpositions and oam index k to walker
    position k (1-based display, stored 0-based).
    """
    if any(p[0][0] == p[1][0] for p in s.amplitudes):
        raise ValueError("input has same-port amplitude; post-select coincidences first")
    max_oam = max(max(m[2], n[2]) for m, n in s.amplitudes)
    lat = max_oam
    amp = np.zeros((2, lat, 2, lat), dtype=complex)
    for (m, n), c in s.amplitudes.items():
        a_mode, b_mode = (m, n) if m[0] == "a" else (n, m)
        va = _POL_TO_COIN[a_mode[1]]
        vb = _POL_TO_COIN[b_mode[1]]
        amp[:, a_mode[2] - 1, :, b_mode[2] - 1] += c * np.outer(va, vb)
    layout = SubsystemLayout((("c1", 2), ("w1", lat), ("c2", 2), ("w2", lat)))
    return PureState(layout, amp.reshape(-1))


def reload_chain(sign: int, angle: float = np.pi / 4):
    """Waveplates on both ports, PBS, coincidence post-selection.

    Returns (coincidence TwoPhotonState, probability).
    """
    s = bell_oam_input(sign)
    s = half_waveplate(s, "a", angle)
    s = half_waveplate(s, "b", angle)
    s = polarizing_beamsplitter(s)
    return postselect_coincidence(s)


def reload_target(sign: int) -> PureState:
    """Bell-polarization, oam-correlated coincidence output for a given input sign."""
    lat = 2
    amp = np.zeros((2, lat, 2, lat), dtype=complex)
    plus, minus = _POL_TO_COIN["+"], _POL_TO_COIN["-"]
    coin = (np.einsum("i,j->ij", plus, plus) - np.einsum("i,j->ij", minus, minus)) / np.sqrt(2)
    for k, s_k in ((0, 1.0), (1, float(sign))):
        amp[:, k, :, k] = coin * s_k / np.sqrt(2)
    layout = SubsystemLayout((("c1", 2), ("w1", lat), ("c2", 2), ("w2", lat)))
    return PureState(layout, amp.reshape(-1))


def fidelity_mod_signs(out: PureState, target: PureState, coin_flip: bool = False) -> float:
    """Max fidelity over local walker-position sign flips and global phase.

    Relabeling |2> -> -|2> on either walker is a local phase convention with
    no effect on entanglement; comparisons quotient it out.  With
    ``coin_flip`` the up/down relabeling of coin 2 is quotiented as well,
    identifying the two symmetric Bell coin states.
    """
    best = 0.0
    t = target.tensor_view
    coin_ops = (False, True) if coin_flip else (False,)
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            for fl in coin_ops:
                flip = t.copy()
                flip[:, 1, :, :] *= s1
                flip[:, :, :, 1] *= s2
                if fl:
                    flip = flip[:, :, ::-1, :]
                cand = PureState(target.layout, flip.reshape(-1))
                best = max(best, out.fidelity(cand))
    return best
