"""Iterated entanglement accumulation and retrieval.

Each accumulation round walks both coin-walker pairs, measures both coins in
the |+->/|--> basis, and reloads the coins into a fresh Bell state.  With
identity coins every round adds exactly one ebit between the walkers; the
retrieval stage moves accumulated walker entanglement back onto a coin by a
Hadamard flip, two identity-coin steps, and a paired walker measurement.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import qstate, qwalk, transfer
from .qstate import PureState, SubsystemLayout
from .transfer import PAIR1, PAIR2, DegenerateProjectionError, project_onto

OCCUPANCY_TOL = 1e-12   # |amplitude|^2 above this counts a position as occupied
PURITY_TOL = 1e-9

PLUS = np.array([1.0, 1.0]) / np.sqrt(2)
MINUS = np.array([1.0, -1.0]) / np.sqrt(2)
SIGN_STATES = {+1: PLUS, -1: MINUS}


@dataclass(frozen=True)
class ProtocolState:
    """One branch of the accumulation protocol after some iterations."""

    state: PureState
    iteration: int
    branch_history: tuple[str, ...]
    cumulative_probability: float
    branch_probabilities: tuple[float, ...] = ()
    sign_pattern: tuple[int, ...] = (1,)


@dataclass(frozen=True)
class BranchOutcome:
    """One measurement outcome: labels, probability, and the resulting state."""

    outcome: tuple[int, int]
    probability: float
    post_state: PureState | None
    sign_pattern: tuple[int, ...]


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    steps_used: int
    log_negativity: float
    success_probability: float


@dataclass(frozen=True)
class AccumulationTrace:
    """Per-iteration walker-walker entanglement and success probability."""

    records: tuple[TraceRecord, ...]

    def csv_rows(self) -> list[tuple[int, int, float, float]]:
        return [(r.iteration, r.steps_used, r.log_negativity, r.success_probability)
                for r in self.records]

    def to_json_dict(self) -> dict:
        return {"records": [{"iteration": r.iteration, "steps": r.steps_used,
                             "logneg": r.log_negativity,
                             "probability": r.success_probability}
                            for r in self.records]}


def four_partite_layout(lattice: int) -> SubsystemLayout:
    return SubsystemLayout((("c1", 2), ("w1", lattice), ("c2", 2), ("w2", lattice)))


def bell_coins_product(walker: PureState) -> PureState:
    """(|up,up> + |down,down>)/sqrt(2) on the coins, tensored with a walker-pair state."""
    w = walker.tensor_view
    if walker.layout.labels != ("w1", "w2"):
        raise qstate.LayoutError(f"walker state must have labels (w1, w2), got {walker.layout.labels}")
    amp = np.zeros((2, w.shape[0], 2, w.shape[1]), dtype=complex)
    amp[0, :, 0, :] = w / np.sqrt(2)
    amp[1, :, 1, :] = w / np.sqrt(2)
    layout = SubsystemLayout((("c1", 2), ("w1", w.shape[0]), ("c2", 2), ("w2", w.shape[1])))
    return PureState(layout, amp.reshape(-1))


def reload_coins(s: PureState) -> PureState:
    """Replace the coin subsystems by a fresh Bell state, walkers untouched.

    The coins must be in a pure product state with the walkers.
    """
    m = qstate.state_matrix(s, ["c1", "c2"], ["w1", "w2"])
    u, sv, vh = np.linalg.svd(m, full_matrices=False)
    if len(sv) > 1 and sv[1] ** 2 > PURITY_TOL:
        raise ValueError(
            f"coins are entangled with the walkers (secondary weight {sv[1] ** 2})")
    w1 = s.layout.dim("w1")
    w2 = s.layout.dim("w2")
    walker = PureState(SubsystemLayout((("w1", w1), ("w2", w2))), vh[0].conj())
    return bell_coins_product(walker)


def walk_span(walker_state: PureState, label: str | None = None) -> int:
    """Difference between the largest and smallest occupied walker position."""
    if label is None:
        walkers = [l for l in walker_state.layout.labels if l.startswith("w")]
        label = walkers[0] if walkers else walker_state.layout.labels[0]
    ax = walker_state.layout.axis(label)
    t = np.abs(walker_state.tensor_view) ** 2
    marg = t.sum(axis=tuple(i for i in range(t.ndim) if i != ax))
    occ = np.nonzero(marg > OCCUPANCY_TOL)[0]
    if len(occ) == 0:
        raise ValueError("no occupied walker positions above threshold")
    return int(occ.max() - occ.min())


def measure_coins(s: PureState) -> list[BranchOutcome]:
    """Project both coins onto the |+->/|--> basis; four outcomes."""
    outcomes = []
    for s1, s2 in itertools.product((+1, -1), repeat=2):
        try:
            t, q1 = project_onto(s, "c1", SIGN_STATES[s1])
            t, q2 = project_onto(t, "c2", SIGN_STATES[s2])
        except DegenerateProjectionError:
            outcomes.append(BranchOutcome((s1, s2), 0.0, None, (1, s1 * s2)))
            continue
        outcomes.append(BranchOutcome((s1, s2), q1 * q2, t, (1, s1 * s2)))
    tot = sum(o.probability for o in outcomes)
    if abs(tot - 1.0) > 1e-10:
        raise AssertionError(f"coin outcome probabilities sum to {tot}, not 1")
    return outcomes


def state_from_sign_pattern(pattern, lattice: int) -> PureState:
    """2^{-n/2} sum_k sign_k |k, k> on a walker pair (positions 0-based)."""
    n = len(pattern)
    w = np.zeros((lattice, lattice), dtype=complex)
    for k, sg in enumerate(pattern):
        w[k, k] = sg / np.sqrt(n)
    return PureState(SubsystemLayout((("w1", lattice), ("w2", lattice))), w.reshape(-1))


def _outcome_label(outcome) -> str:
    return "".join("+" if s > 0 else "-" for s in outcome)


def accumulate_identity(iterations: int, initial: PureState | None = None,
                        lattice_size: int | None = None):
    """Exhaustive identity-coin accumulation over all 4^n measurement branches.

    Returns (AccumulationTrace, branches); every branch ends with walker-walker
    log-negativity equal to the iteration count.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if lattice_size is None:
        lattice_size = 2 ** iterations
    if initial is None:
        walker = qstate.basis_state(SubsystemLayout((("w1", lattice_size),
                                                     ("w2", lattice_size))),
                                    {"w1": 0, "w2": 0})
        initial = bell_coins_product(walker)
    branches = [ProtocolState(initial, 0, (), 1.0, (), (1,))]
    records = []
    for it in range(1, iterations + 1):
        steps = walk_span(branches[0].state, "w1") + 1
        new_branches = []
        for b in branches:
            s = qwalk.shift(b.state, PAIR1, steps)  # identity coins: pure shifts
            s = qwalk.shift(s, PAIR2, steps)
            for o in measure_coins(s):
                sgn = o.outcome[0] * o.outcome[1]
                pattern = b.sign_pattern + tuple(sgn * x for x in b.sign_pattern)
                reloaded = bell_coins_product(_walker_state(o.post_state))
                new_branches.append(ProtocolState(
                    reloaded, it,
                    b.branch_history + (_outcome_label(o.outcome),),
                    b.cumulative_probability * o.probability,
                    b.branch_probabilities + (o.probability,),
                    pattern))
        branches = new_branches
        walker = _walker_state(branches[0].state)
        n = qstate.log_negativity(walker, ("w1", "w2"))
        total = sum(b.cumulative_probability for b in branches)
        records.append(TraceRecord(it, steps, n, total))
    return AccumulationTrace(tuple(records)), branches


def _walker_state(s: PureState) -> PureState:
    """Walker-pair state of a coins-product four-partite state."""
    if s.layout.labels == ("w1", "w2"):
        return s
    m = qstate.state_matrix(s, ["c1", "c2"], ["w1", "w2"])
    sv = np.linalg.svd(m, compute_uv=False)
    if len(sv) > 1 and sv[1] ** 2 > PURITY_TOL:
        raise ValueError("coins are entangled with the walkers")
    _, _, vh = np.linalg.svd(m)
    layout = SubsystemLayout((("w1", s.layout.dim("w1")), ("w2", s.layout.dim("w2"))))
    return PureState(layout, vh[0].conj())


def accumulate_generic(iterations: int, walk_specs=None, strategy: str = "fixed-basis",
                       coin: qwalk.NamedCoin | None = None,
                       initial: PureState | None = None,
                       lattice_size: int | None = None,
                       seed: int = 0) -> AccumulationTrace:
    """Greedy single-trajectory accumulation with arbitrary coins.

    Per iteration, records the probability-weighted mean walker-walker
    log-negativity over the measurement branches together with their total
    probability, then continues along a highest-probability branch.  Isolated
    branches can beat this mean by post-selection, but the mean is the figure
    that stays pinned to one ebit per iteration exactly when every branch
    transfers perfectly.  ``strategy`` selects the coin measurement:
    "fixed-basis" uses |+->/|-->, "best-grid-projection" optimizes an
    independent projection per coin to maximize the branch-averaged value.
    """
    if strategy not in ("fixed-basis", "best-grid-projection"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if coin is None:
        coin = qwalk.NamedCoin("hadamard")
    if walk_specs is not None:
        walk_specs = list(walk_specs)
        if len(walk_specs) != iterations:
            raise ValueError(f"need {iterations} walk specs, got {len(walk_specs)}")
        if lattice_size is None:
            lattice_size = sum(w.steps for w in walk_specs) + 1
    elif lattice_size is None:
        lattice_size = 2 ** iterations
    if initial is None:
        walker = qstate.basis_state(SubsystemLayout((("w1", lattice_size),
                                                     ("w2", lattice_size))),
                                    {"w1": 0, "w2": 0})
        initial = bell_coins_product(walker)
    state = initial
    records = []
    for it in range(1, iterations + 1):
        if walk_specs is not None:
            spec = walk_specs[it - 1]
            steps = spec.steps
        else:
            steps = walk_span(state, "w1") + 1
            spec = qwalk.WalkSpec(steps, coin.coins(steps), state.layout.dim("w1"))
        s = qwalk.evolve(state, PAIR1, spec)
        s = qwalk.evolve(s, PAIR2, spec)
        if strategy == "fixed-basis":
            cands = [(o.probability, o.post_state) for o in measure_coins(s)
                     if o.post_state is not None]
        else:
            cands = _best_projection_branches(s, seed=seed + it)
        scored = [(qstate.log_negativity(_walker_state(ps), ("w1", "w2")), q, ps)
                  for q, ps in cands]
        prob = sum(q for _, q, _ in scored)
        mean_n = sum(n * q for n, q, _ in scored) / prob
        best_state = max(scored, key=lambda e: e[1])[2]
        records.append(TraceRecord(it, steps, mean_n, prob))
        state = bell_coins_product(_walker_state(best_state))
    return AccumulationTrace(tuple(records))


def _perp(v: np.ndarray) -> np.ndarray:
    return np.array([-np.conj(v[1]), np.conj(v[0])])


def _best_projection_branches(s: PureState, seed: int = 0, starts: int = 8):
    """Optimize independent coin projections for branch-averaged log-negativity.

    Returns the four (gamma/gamma-perp x delta/delta-perp) branches of the
    best basis pair found.
    """
    rng = np.random.default_rng(seed)

    def branch(g, d):
        try:
            t, q1 = project_onto(s, "c1", g)
            t, q2 = project_onto(t, "c2", d)
        except DegenerateProjectionError:
            return None
        return q1 * q2, t

    def branches_of(x):
        g = transfer.coin_state(float(np.clip(x[0], 0, np.pi / 2)), x[1])
        d = transfer.coin_state(float(np.clip(x[2], 0, np.pi / 2)), x[3])
        out = []
        for gg, dd in itertools.product((g, _perp(g)), (d, _perp(d))):
            b = branch(gg, dd)
            if b is not None:
                out.append(b)
        return out

    def neg_mean_logneg(x):
        bs = branches_of(x)
        tot = sum(q for q, _ in bs)
        if tot < 1e-12:
            return 0.0
        mean = sum(q * qstate.log_negativity(_walker_state_or_none(t), ("w1", "w2"))
                   for q, t in bs) / tot
        return -mean

    from scipy.optimize import minimize
    seeds = [np.array([np.pi / 4, 0.0, np.pi / 4, 0.0]),
             np.array([np.pi / 4, np.pi, np.pi / 4, np.pi]),
             np.array([np.pi / 4, 0.0, np.pi / 4, np.pi])]
    seeds += [rng.uniform([0, 0, 0, 0], [np.pi / 2, 2 * np.pi, np.pi / 2, 2 * np.pi])
              for _ in range(starts)]
    best = None
    for x0 in seeds:
        res = minimize(neg_mean_logneg, x0, method="Nelder-Mead",
                       options=dict(xatol=1e-9, fatol=1e-11, maxiter=600))
        if best is None or res.fun < best.fun:
            best = res
    return branches_of(best.x)


def _walker_state_or_none(s: PureState) -> PureState:
    # projected branches can leave residual coin-walker structure; they are
    # already walker-only here
    return s if s.layout.labels == ("w1", "w2") else _walker_state(s)


# ---------------------------------------------------------------------------
# retrieval


def _extend_walker(s: PureState, label: str, dim: int) -> PureState:
    old = s.layout.dim(label)
    if old >= dim:
        return s
    ax = s.layout.axis(label)
    pad = [(0, 0)] * len(s.layout.dims)
    pad[ax] = (0, dim - old)
    amp = np.pad(s.tensor_view, pad)
    factors = tuple((l, dim if l == label else d) for l, d in s.layout.factors)
    return PureState(SubsystemLayout(factors), amp.reshape(-1))


def _align_coin_up(s: PureState, coin_label: str) -> PureState:
    """Rotate an unentangled coin to |up>; error if the coin is entangled."""
    sd = qstate.schmidt(s, ([coin_label], [l for l in s.layout.labels if l != coin_label]))
    if sd.rank() != 1:
        raise ValueError(f"coin {coin_label!r} is entangled with the rest of the system")
    v = sd.left_vectors[:, 0]
    vperp = np.array([-np.conj(v[1]), np.conj(v[0])])
    u = np.outer(np.array([1.0, 0.0]), v.conj()) + np.outer(np.array([0.0, 1.0]), vperp.conj())
    return qwalk.apply_coin(s, coin_label, qwalk.CoinOp(u))


def retrieval_basis(dim: int) -> list[tuple[tuple[int, int], np.ndarray]]:
    """Paired walker basis {(|1>+-|4>)/sqrt2, (|2>+-|3>)/sqrt2} (1-based display).

    Returns ((pair, sign), vector) entries; pair +1 couples positions 1 and 4,
    pair -1 couples positions 2 and 3.
    """
    if dim < 4:
        raise ValueError("retrieval needs at least 4 walker positions")
    out = []
    for pair, (i, j) in ((+1, (0, 3)), (-1, (1, 2))):
        for sgn in (+1, -1):
            v = np.zeros(dim, dtype=complex)
            v[i] = 1 / np.sqrt(2)
            v[j] = sgn / np.sqrt(2)
            out.append(((pair, sgn), v))
    return out


def retrieve(s: PureState) -> list[BranchOutcome]:
    """Move walker-walker entanglement onto coin 1 by local side-1 operations.

    The side-1 coin is aligned to |up>, flipped by a Hadamard, walked two
    identity-coin steps, and walker 1 is measured in the paired basis; every
    outcome is equally likely and carries the full entanglement across the
    side-1 / side-2 split on its coin.
    """
    if s.layout.labels == ("w1", "w2"):
        coins = qstate.basis_state(SubsystemLayout((("c1", 2), ("c2", 2))),
                                   {"c1": 0, "c2": 0})
        t = qstate.tensor(coins, s)
        order = ("c1", "w1", "c2", "w2")
        amp = t.tensor_view.transpose(t.layout.axes(order))
        s = PureState(SubsystemLayout(tuple((l, t.layout.dim(l)) for l in order)),
                      amp.reshape(-1))
    s = _align_coin_up(s, "c1")
    wmat = np.abs(qstate.state_matrix(s, ["w1"], ["c1", "c2", "w2"])) ** 2
    occ = np.nonzero(wmat.sum(axis=1) > OCCUPANCY_TOL)[0]
    if len(occ) == 0 or occ.max() > 1:
        raise ValueError("walker 1 must occupy only the first two positions")
    s = _extend_walker(s, "w1", max(4, s.layout.dim("w1")))
    s = qwalk.apply_coin(s, "c1", qwalk.CoinOp.hadamard())
    s = qwalk.shift(s, PAIR1, 2)  # two identity-coin steps
    outcomes = []
    for (pair, sgn), vec in retrieval_basis(s.layout.dim("w1")):
        try:
            post, q = project_onto(s, "w1", vec)
        except DegenerateProjectionError:
            outcomes.append(BranchOutcome((pair, sgn), 0.0, None, (1, sgn)))
            continue
        outcomes.append(BranchOutcome((pair, sgn), q, post, (1, sgn)))
    tot = sum(o.probability for o in outcomes)
    if abs(tot - 1.0) > 1e-10:
        raise AssertionError(f"retrieval outcome probabilities sum to {tot}, not 1")
    return outcomes
