"""Command-line front end.

Subcommands: solve, decide, battle, export, matrix-solve. Settings come from
flags, optionally seeded from a ``key=value`` file given with ``--config``
(flags win). Exit status is 0 on success, 2 on configuration errors and 1 on
runtime failures.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import battle, control, grid, matrix_game, value_iteration
from .dynamics import benchmark_system, steps_in
from .grid import GridSpec, TableFormatError, ValueKind

log = logging.getLogger("rollnash")

FULL_DEFAULTS = {"grid": 257, "actions": 41}
DESK_DEFAULTS = {"grid": 65, "actions": 21}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    example: int = 1
    dt: float = 0.02
    horizon: float = 1.0
    alpha_lo: float = -1.0
    alpha_hi: float = 1.0
    beta_lo: float = -1.0
    beta_hi: float = 1.0
    grid: int = 257
    actions: int = 41
    rm_iterations: int = matrix_game.DEFAULT_RM_ITERATIONS
    rm_tolerance: float = matrix_game.DEFAULT_RM_TOLERANCE
    seed: int = 0

    @property
    def steps(self) -> int:
        """Horizon length ``h = T / dt``; rejects non-integral ratios."""
        if self.dt <= 0 or self.horizon <= 0:
            raise ConfigError("dt and horizon must be positive")
        ratio = self.horizon / self.dt
        h = round(ratio)
        if abs(ratio - h) > 1e-9 or h < 1:
            raise ConfigError(f"horizon/dt = {ratio!r} is not a positive integer")
        return int(h)

    def system(self):
        if self.example not in (1, 2):
            raise ConfigError(f"unknown example {self.example} (expected 1 or 2)")
        return benchmark_system(self.example, self.dt)

    def grid_spec(self) -> GridSpec:
        try:
            return GridSpec(self.alpha_lo, self.alpha_hi, self.beta_lo, self.beta_hi, self.grid, self.grid)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def abstraction(self):
        if self.actions < 1:
            raise ConfigError("actions must be >= 1")
        sysm = self.system()
        return matrix_game.uniform_abstraction(sysm.a_interval, sysm.b_interval, self.actions, self.actions)


_CONFIG_KEYS = {
    "example": int,
    "dt": float,
    "horizon": float,
    "alpha_lo": float,
    "alpha_hi": float,
    "beta_lo": float,
    "beta_hi": float,
    "grid": int,
    "actions": int,
    "rm_iterations": int,
    "rm_tolerance": float,
    "seed": int,
    "episodes": int,
    "duration": float,
    "threads": int,
    "out_dir": str,
}


def read_config_file(path) -> dict:
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise ConfigError(f"{path}:{n}: expected key=value")
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{n}: unknown key '{key}'")
        try:
            values[key] = _CONFIG_KEYS[key](val.strip())
        except ValueError:
            raise ConfigError(f"{path}:{n}: bad value for '{key}': {val.strip()!r}") from None
    return values


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value settings file (flags override it)")
    p.add_argument("--example", type=int, choices=(1, 2))
    p.add_argument("--dt", type=float)
    p.add_argument("--horizon", type=float, help="predictive period T in seconds")
    p.add_argument("--alpha-lo", type=float)
    p.add_argument("--alpha-hi", type=float)
    p.add_argument("--beta-lo", type=float)
    p.add_argument("--beta-hi", type=float)
    p.add_argument("--grid", type=int, help="grid points per axis")
    p.add_argument("--actions", type=int, help="abstraction size per player")
    p.add_argument("--desk", action="store_true", help="65x65 grid, 21x21 actions")
    p.add_argument("--rm-iterations", type=int)
    p.add_argument("--rm-tolerance", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="worker threads (env RG_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rollnash", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="compute value tables")
    _common(p)
    p.add_argument("--kind", choices=("upper", "lower", "nash", "all"), default="all")
    p.add_argument("--m", type=int, help="recursion count (default h = T/dt)")
    p.add_argument("--control", action="store_true", help="use m = h - 1 (tables for rolling control)")
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("decide", help="stage-game decision at one state")
    _common(p)
    p.add_argument("table")
    p.add_argument("--state", type=float, nargs=2, required=True, metavar=("ALPHA", "BETA"))
    p.add_argument("--role", choices=("I", "II"), default="I")

    p = sub.add_parser("battle", help="3x3 tournament between policy kinds")
    _common(p)
    p.add_argument("--upper", required=True)
    p.add_argument("--lower", required=True)
    p.add_argument("--nash", required=True)
    p.add_argument("--episodes", type=int)
    p.add_argument("--duration", type=float)
    p.add_argument("--csv", dest="csv_path")

    p = sub.add_parser("export", help="dump a table as alpha,beta,value CSV")
    p.add_argument("table")
    p.add_argument("csv_path")
    p.add_argument("--minus", help="subtract this table first (gap map)")

    p = sub.add_parser("matrix-solve", help="solve a CSV payoff matrix by regret matching")
    p.add_argument("matrix")
    p.add_argument("--rm-iterations", type=int, default=matrix_game.DEFAULT_RM_ITERATIONS)
    p.add_argument("--rm-tolerance", type=float, default=matrix_game.DEFAULT_RM_TOLERANCE)
    return parser


def resolve(args: argparse.Namespace) -> tuple[RunConfig, dict]:
    """Merge defaults, presets, config file and flags into a RunConfig."""
    values = dict(DESK_DEFAULTS if getattr(args, "desk", False) else FULL_DEFAULTS)
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for key in _CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    extra = {k: values.pop(k) for k in ("episodes", "duration", "threads", "out_dir") if k in values}
    cfg = RunConfig(**values)
    cfg.steps  # validates T/dt
    if cfg.rm_iterations < 1:
        raise ConfigError("rm-iterations must be >= 1")
    return cfg, extra


def _set_threads(extra: dict) -> None:
    n = extra.get("threads")
    if n is None and os.environ.get("RG_THREADS"):
        try:
            n = int(os.environ["RG_THREADS"])
        except ValueError:
            raise ConfigError(f"RG_THREADS must be an integer, got {os.environ['RG_THREADS']!r}") from None
    if n is None:
        return
    if n < 1:
        raise ConfigError("threads must be >= 1")
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def cmd_solve(args) -> int:
    cfg, extra = resolve(args)
    _set_threads(extra)
    h = cfg.steps
    m = args.m if args.m is not None else (h - 1 if args.control else h)
    if m < 1:
        raise ConfigError(f"m must be >= 1, got {m}")
    out_dir = Path(extra.get("out_dir") or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    kinds = list(ValueKind) if args.kind == "all" else [ValueKind(args.kind)]
    sysm = cfg.system()
    for kind in kinds:
        sweep = value_iteration.SweepConfig(
            sysm, cfg.grid_spec(), cfg.abstraction(), m, kind, cfg.rm_iterations, cfg.rm_tolerance
        )
        table, diag = value_iteration.run(sweep)
        path = out_dir / f"ex{cfg.example}_{kind.value}_m{m}.rgvt"
        grid.save_table(table, path)
        print(
            f"{path} kind={kind.value} m={m} max_exploit={max(diag.max_exploitability)!r} "
            f"max_clamp={max(diag.max_clamp_distance)!r} seconds={sum(diag.wall_time):.1f}"
        )
    return 0


def _fmt_dist(actions, probs, cutoff=1e-4) -> str:
    parts = [f"{a:+.4f}:{p:.4f}" for a, p in zip(actions, probs) if p >= cutoff]
    return " ".join(parts)


def cmd_decide(args) -> int:
    cfg, extra = resolve(args)
    _set_threads(extra)
    table = grid.load_table(args.table)
    sysm = cfg.system()
    if table.dt != sysm.dt:
        raise ConfigError(f"table dt={table.dt} does not match --dt {sysm.dt}")
    kind = {ValueKind.UPPER: control.PolicyKind.MIN_MAX, ValueKind.LOWER: control.PolicyKind.MAX_MIN}.get(
        table.kind, control.PolicyKind.NASH_RM
    )
    x = np.array(args.state, dtype=np.float64)
    if not table.spec.contains(x):
        clamped = table.spec.clamp(x)
        print(f"warning: state {tuple(x.tolist())} outside domain, clamped to {tuple(clamped.tolist())}", file=sys.stderr)
        x = clamped
    policy = control.Policy(kind, table, args.role, cfg.abstraction(), sysm, cfg.rm_iterations, cfg.rm_tolerance)
    d = control.decide(policy, x, cfg.seed, keep_matrix=True)
    dist_a, dist_b = (d.distribution, d.other_distribution) if args.role == "I" else (d.other_distribution, d.distribution)
    ab = policy.abstraction
    print(f"state alpha={float(x[0])!r} beta={float(x[1])!r} policy={kind.value}")
    print(f"player_I  {_fmt_dist(ab.actions_a, dist_a)}")
    print(f"player_II {_fmt_dist(ab.actions_b, dist_b)}")
    print(f"stage_value={d.value!r}")
    print(f"exploitability={matrix_game.exploitability(d.stage_matrix, dist_a, dist_b)!r}")
    pure = control.pure_action(d)
    print(f"role={d.role.value} sampled_action={d.sampled_action!r} {'pure' if pure is not None else 'mixed'}")
    return 0


def cmd_battle(args) -> int:
    cfg, extra = resolve(args)
    _set_threads(extra)
    episodes = extra.get("episodes", 100)
    duration = extra.get("duration", 10.0)
    if episodes < 1:
        raise ConfigError(f"episodes must be >= 1, got {episodes}")
    sysm = cfg.system()
    tables = {}
    for kind in ValueKind:
        path = getattr(args, kind.value)
        if not Path(path).is_file():
            raise FileNotFoundError(f"missing {kind.value} table: {path}")
        t = grid.load_table(path)
        if t.kind is not kind:
            raise ConfigError(f"{path} holds a {t.kind.value} table, expected {kind.value}")
        tables[kind] = t
    try:
        steps_in(duration, sysm.dt)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    result = battle.tournament(
        sysm, tables, cfg.abstraction(), episodes, duration, cfg.seed, cfg.rm_iterations, cfg.rm_tolerance
    )
    print(result.format_table())
    if args.csv_path:
        result.write_csv(args.csv_path)
    return 0


def cmd_export(args) -> int:
    table = grid.load_table(args.table)
    if args.minus:
        table = value_iteration.gap_map(table, grid.load_table(args.minus))
    grid.export_csv(table, args.csv_path)
    return 0


def cmd_matrix_solve(args) -> int:
    try:
        g = np.loadtxt(args.matrix, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ConfigError(f"cannot parse matrix {args.matrix}: {exc}") from None
    sol = matrix_game.regret_matching_solve(g, args.rm_iterations, tolerance=args.rm_tolerance)
    lo = matrix_game.pure_maximin(g)[0]
    hi = matrix_game.pure_minimax(g)[0]
    print("strategy_I  " + " ".join(f"{p:.6f}" for p in sol.strategy_a))
    print("strategy_II " + " ".join(f"{p:.6f}" for p in sol.strategy_b))
    print(f"value={sol.value!r}")
    print(f"exploitability={sol.exploitability!r} iterations={sol.iterations}")
    print(f"pure_maximin={lo!r} pure_minimax={hi!r}")
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "decide": cmd_decide,
    "battle": cmd_battle,
    "export": cmd_export,
    "matrix-solve": cmd_matrix_solve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose or args.command == "solve" else logging.WARNING,
        format="%(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (TableFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
