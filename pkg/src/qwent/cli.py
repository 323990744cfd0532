"""Command-line driver emitting deterministic CSV/JSON artifacts.

Subcommands: transfer, scan, accumulate, retrieve, photonic-reload.  Options
can come from a flat key=value config file (--config); explicit flags win.
Exit codes: 0 success, 2 configuration error, 3 numeric or lattice error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import accumulate, photonic, qstate, qwalk, transfer

SCAN_HEADER = "theta,phi,overlap,p_up,p_down,entropy,post_logneg,branch_prob"
ACC_HEADER = "iteration,steps,logneg,probability"


class ConfigError(ValueError):
    """Invalid configuration value or combination."""


def _fmt(x: float) -> str:
    return "%.12g" % x


def thread_count() -> int:
    """Parallelism cap from QWE_THREADS (0 or unset = auto)."""
    raw = os.environ.get("QWE_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"QWE_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError("QWE_THREADS must be nonnegative")
    return n if n > 0 else (os.cpu_count() or 1)


def load_config(path: str) -> dict:
    """Flat key=value file; blank lines and #-comments ignored."""
    out = {}
    try:
        with open(path, encoding="utf-8") as f:
            for i, line in enumerate(f, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{i}: expected key=value, got {line!r}")
                k, v = line.split("=", 1)
                out[k.strip()] = v.strip()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return out


def parse_grid(text: str) -> tuple[int, int]:
    try:
        nt, np_ = text.lower().split("x")
        grid = (int(nt), int(np_))
    except ValueError:
        raise ConfigError(f"grid must look like 181x361, got {text!r}") from None
    if grid[0] < 2 or grid[1] < 2:
        raise ConfigError("grid dims must be >= 2")
    return grid


def make_coin(kind: str, seed) -> qwalk.NamedCoin:
    if kind == "random":
        if seed is None:
            raise ConfigError("--coin random requires --seed")
        return qwalk.NamedCoin("haar_random", seed=int(seed))
    if kind in ("identity", "hadamard"):
        return qwalk.NamedCoin(kind)
    raise ConfigError(f"unknown coin kind {kind!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qwent",
                                description="quantum-walk entanglement transfer toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--steps", type=int, default=None)
        sp.add_argument("--coin", choices=["identity", "hadamard", "random"], default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--grid", type=str, default=None)
        sp.add_argument("--iterations", type=int, default=None)
        sp.add_argument("--p1", type=float, default=None)
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--config", type=str, default=None)

    for name in ("transfer", "scan", "accumulate", "retrieve", "photonic-reload"):
        sp = sub.add_parser(name)
        common(sp)
        if name == "accumulate":
            sp.add_argument("--strategy", choices=["fixed-basis", "best-grid-projection"],
                            default=None)
        if name == "retrieve":
            sp.add_argument("--input", choices=["bell", "product"], default=None)
    return p


_CONFIG_TYPES = {"steps": int, "seed": int, "iterations": int, "p1": float,
                 "coin": str, "grid": str, "out": str, "strategy": str, "input": str}


def merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the config file; explicit flags win."""
    if args.config is None:
        return args
    cfg = load_config(args.config)
    for key, raw in cfg.items():
        if key not in _CONFIG_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        if not hasattr(args, key) or getattr(args, key) is not None:
            continue
        try:
            setattr(args, key, _CONFIG_TYPES[key](raw))
        except ValueError:
            raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return args


def _defaults(args):
    args.steps = 1 if args.steps is None else args.steps
    args.coin = "hadamard" if args.coin is None else args.coin
    args.grid = parse_grid(args.grid) if args.grid is not None else (181, 361)
    args.iterations = 4 if args.iterations is None else args.iterations
    args.p1 = 0.5 if args.p1 is None else args.p1
    if args.steps < 0:
        raise ConfigError("steps must be nonnegative")
    if args.iterations < 1:
        raise ConfigError("iterations must be >= 1")
    if not (0.0 <= args.p1 <= 1.0):
        raise ConfigError("p1 must lie in [0, 1]")
    return args


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as f:
            f.write(text)


def _angles_dict(ang: transfer.ProjectionAngles) -> dict:
    return {"theta": ang.theta, "phi": ang.phi}


def cmd_transfer(args) -> int:
    coin = make_coin(args.coin, args.seed)
    spec = qwalk.WalkSpec.make(args.steps, coin)
    psi_up, psi_down = transfer.pair_outputs(spec)
    m = transfer.compute_M(psi_up, psi_down, "c")
    sol = transfer.find_gamma(m)
    state = transfer.bell_walk_state(spec, p1=args.p1)
    candidates = []
    for g in sol.gammas:
        rep = transfer.check_tc(state, g, "c1", (["w1"], ["c2", "w2"]))
        candidates.append({
            "angles": _angles_dict(rep.angles),
            "overlap": rep.overlap, "p_up": rep.p_up, "p_down": rep.p_down,
            "entropy": rep.entropy, "tc_satisfied": rep.tc_satisfied,
            "post_logneg": rep.post_logneg, "probability": rep.probability})
    branches = []
    for o in accumulate.measure_coins(state):
        n = (qstate.log_negativity(o.post_state, ("w1", "w2"))
             if o.post_state is not None else None)
        branches.append({"outcome": list(o.outcome), "probability": o.probability,
                         "walker_logneg": n})
    report = {"command": "transfer", "steps": args.steps, "coin": args.coin,
              "p1": args.p1, "gamma_kind": sol.kind,
              "m_matrix": [[[z.real, z.imag] for z in row] for row in m.matrix],
              "candidates": candidates, "branches": branches}
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _scan_rows(spec: qwalk.WalkSpec, grid, p1: float) -> list[str]:
    """CSV rows combining single-projection diagnostics with the same-gamma
    double-projection log-negativity and branch probability."""
    psi_up, psi_down = transfer.pair_outputs(spec)
    state = transfer.bell_walk_state(spec, p1=p1)
    n_theta, n_phi = grid
    thetas = np.linspace(0.0, np.pi / 2, n_theta)
    phis = np.linspace(0.0, 2 * np.pi, n_phi)
    um = psi_up.tensor_view.reshape(2, -1)
    dm = psi_down.tensor_view.reshape(2, -1)
    t4 = state.tensor_view

    def rows_for(theta_idx):
        out = []
        tt, pp = np.meshgrid(thetas[theta_idx], phis, indexing="ij")
        gc = np.stack([np.cos(tt), np.exp(-1j * pp) * np.sin(tt)], axis=-1).reshape(-1, 2)
        a = gc @ um
        b = gc @ dm
        ov = np.abs(np.einsum("gw,gw->g", a.conj(), b)) ** 2
        pu = np.einsum("gw,gw->g", a.conj(), a).real
        pd = np.einsum("gw,gw->g", b.conj(), b).real
        k = np.einsum("ga,gb,awbv->gwv", gc, gc, t4, optimize=True)
        sv = np.linalg.svd(k, compute_uv=False)
        i = 0
        for ti in theta_idx:
            for ph in phis:
                tot = pu[i] + pd[i]
                ent = (qstate.shannon_entropy([pu[i] / tot, pd[i] / tot])
                       if tot > 0 else 0.0)
                n, prob = transfer._logneg_prob_from_sv(sv[i])
                out.append(",".join([
                    _fmt(float(thetas[ti])), _fmt(float(ph)),
                    _fmt(float(ov[i])), _fmt(float(pu[i])), _fmt(float(pd[i])),
                    _fmt(float(ent)), _fmt(float(n)), _fmt(float(prob))]))
                i += 1
        return out

    workers = thread_count()
    idx = list(range(n_theta))
    if workers <= 1 or n_theta < 4:
        return rows_for(idx)
    chunks = np.array_split(idx, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(rows_for, [list(c) for c in chunks if len(c)]))
    return [r for part in parts for r in part]


def cmd_scan(args) -> int:
    coin = make_coin(args.coin, args.seed)
    spec = qwalk.WalkSpec.make(args.steps, coin)
    rows = _scan_rows(spec, args.grid, args.p1)
    _emit(SCAN_HEADER + "\n" + "\n".join(rows) + "\n", args.out)
    return 0


def cmd_accumulate(args) -> int:
    coin = make_coin(args.coin, args.seed)
    strategy = getattr(args, "strategy", None) or "fixed-basis"
    detail = {}
    if args.coin == "identity" and strategy == "fixed-basis":
        trace, branches = accumulate.accumulate_identity(args.iterations)
        detail["branches"] = [
            {"history": list(b.branch_history),
             "probability": b.cumulative_probability,
             "sign_pattern": list(b.sign_pattern)}
            for b in branches]
    else:
        trace = accumulate.accumulate_generic(
            args.iterations, coin=coin, strategy=strategy,
            seed=args.seed if args.seed is not None else 0)
    lines = [ACC_HEADER]
    for it, steps, n, prob in trace.csv_rows():
        lines.append(",".join([str(it), str(steps), _fmt(n), _fmt(prob)]))
    _emit("\n".join(lines) + "\n", args.out)
    if args.out is not None:
        detail.update(trace.to_json_dict())
        detail["coin"] = args.coin
        detail["strategy"] = strategy
        root, _ = os.path.splitext(args.out)
        with open(root + ".json", "w", encoding="utf-8", newline="") as f:
            json.dump(detail, f, indent=2, sort_keys=True)
            f.write("\n")
    return 0


def cmd_retrieve(args) -> int:
    kind = getattr(args, "input", None) or "bell"
    lat = 4
    w = np.zeros((lat, lat), dtype=complex)
    if kind == "bell":
        w[0, 0] = w[1, 1] = 1 / np.sqrt(2)
    else:
        w[0, 0] = 1.0
    layout = qstate.SubsystemLayout((("w1", lat), ("w2", lat)))
    outcomes = accumulate.retrieve(qstate.PureState(layout, w.reshape(-1)))
    rows = []
    for o in outcomes:
        n = (qstate.log_negativity(o.post_state, (["c1", "c2"], ["w2"]))
             if o.post_state is not None else None)
        rows.append({"pair": o.outcome[0], "sign": o.outcome[1],
                     "probability": o.probability, "coin_logneg": n})
    report = {"command": "retrieve", "input": kind, "outcomes": rows,
              "total_probability": sum(o.probability for o in outcomes)}
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def cmd_photonic(args) -> int:
    results = []
    for sign in (+1, -1):
        out, prob = photonic.reload_chain(sign)
        st = photonic.to_four_partite(out)
        fid = photonic.fidelity_mod_signs(st, photonic.reload_target(sign))
        results.append({"input_sign": sign, "coincidence_probability": prob,
                        "fidelity": fid,
                        "coin_walker_logneg": qstate.log_negativity(
                            st, (["c1", "w1"], ["c2", "w2"]))})
    report = {"command": "photonic-reload", "branches": results,
              "combined_usable_probability": sum(r["coincidence_probability"]
                                                 for r in results)}
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.out)
    return 0


_COMMANDS = {"transfer": cmd_transfer, "scan": cmd_scan, "accumulate": cmd_accumulate,
             "retrieve": cmd_retrieve, "photonic-reload": cmd_photonic}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = merge_config(args)
        args = _defaults(args)
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (qwalk.BoundaryOverflowError, transfer.DegenerateProjectionError,
            photonic.EmptyBranchError, FloatingPointError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
