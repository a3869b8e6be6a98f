"""Command-line front end.

Usage examples::

    cvnet channel build --kind tmsv --r 0.5 --out state.json
    cvnet teleport fidelity --channel state.json --input coherent
    cvnet network sweep --kind cheap --r 0:2:0.05 --jobs 4

Exit status is 0 on success, 1 on a domain error (error JSON on stderr)
and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from cvnet import __version__
from cvnet.channels import ChannelKind, ChannelSpec, input_state
from cvnet.entanglement import entanglement_report
from cvnet.errors import CVError, InvalidInput
from cvnet.serialize import dumps, state_from_dict, state_to_dict
from cvnet.symplectic import GaussianState

CSV_DIGITS = 12


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run's output."""

    command: str
    inputs: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    output: Optional[str] = None
    format: str = "json"
    rng_seed: int = 0
    jobs: int = 1


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


class UsageError(Exception):
    pass


def parse_range(text: str) -> np.ndarray:
    """``start:stop:step`` (inclusive of ``stop``) or a single number."""
    parts = text.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError as exc:
        raise UsageError(f"bad range {text!r}") from exc
    if len(nums) == 1:
        return np.array(nums)
    if len(nums) != 3 or nums[2] <= 0 or nums[1] < nums[0]:
        raise UsageError(f"range must be start:stop:step with step > 0 and stop >= start, got {text!r}")
    start, stop, step = nums
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def read_config_file(path) -> dict:
    """``key=value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.{CSV_DIGITS}g}"


def load_channel(path: Optional[str]) -> GaussianState:
    if path in (None, "-"):
        text = sys.stdin.read()
    else:
        text = Path(path).read_text(encoding="utf-8")
    try:
        return state_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"state file is not valid JSON: {exc}") from exc


def emit(text: str, out: Optional[str]) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def write_csv(config: RunConfig, header: Sequence[str], rows) -> None:
    params = " ".join(f"{k}={v}" for k, v in sorted(config.params.items()))
    lines = [f"# cvnet {__version__} {config.command} {params} seed={config.rng_seed}".rstrip(),
             ",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    emit("\n".join(lines), config.output)


def ordered_map(fn: Callable, items, jobs: int) -> list:
    """Map preserving input order; a process pool when ``jobs > 1``."""
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _input_from_args(args):
    alpha = complex(args.alpha_re, args.alpha_im)
    return input_state(args.input, alpha=alpha, xi=args.input_xi, phi=args.input_phi)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_channel_build(args, config: RunConfig) -> None:
    spec = ChannelSpec(ChannelKind(args.kind), r=args.r, n_a=args.n_a, n_b=args.n_b, n_modes=args.modes)
    emit(dumps(state_to_dict(spec.build())), config.output)


def cmd_entangle_report(args, config: RunConfig) -> None:
    state = load_channel(args.state)
    emit(dumps(entanglement_report(state.cm.entries)), config.output)


def cmd_teleport_fidelity(args, config: RunConfig) -> None:
    from cvnet.teleport import fidelity

    channel = load_channel(args.channel)
    delta = None if args.delta_re is None else (args.delta_re, args.delta_im or 0.0)
    report = fidelity(_input_from_args(args).cm.entries, channel, delta)
    emit(dumps(report), config.output)


def _sweep_tmsv_point(r, resolution):
    from cvnet.channels import tmsv
    from cvnet.oracle import oracle_fidelity
    from cvnet.teleport import fidelity

    ch = tmsv(r)
    v_in = np.eye(2) / 2
    f_closed = fidelity(v_in, ch).fidelity
    f_oracle = oracle_fidelity(ch, v_in, points_per_axis=resolution) if resolution else float("nan")
    return (r, f_closed, f_oracle)


def cmd_teleport_sweep(args, config: RunConfig) -> None:
    if args.steps < 1 or args.r_max < args.r_min:
        raise UsageError("need steps >= 1 and r-max >= r-min")
    rs = np.linspace(args.r_min, args.r_max, args.steps)
    rows = ordered_map(partial(_sweep_tmsv_point, resolution=args.resolution), rs, config.jobs)
    write_csv(config, ("r", "F_closed_form", "F_oracle"), rows)


def cmd_network_optimize(args, config: RunConfig) -> None:
    from cvnet.network import optimize_measurement

    net = load_channel(args.state)
    if net.n_modes != 3:
        raise InvalidInput(f"network state must have 3 modes, got {net.n_modes}")
    result = optimize_measurement(net, _input_from_args(args).cm.entries, n_grid=args.n_grid)
    emit(dumps(result), config.output)


def _network_point(r, kind, n_grid):
    from cvnet.network import optimize_measurement

    net = ChannelSpec(ChannelKind(kind), r=r, n_modes=3).build()
    res = optimize_measurement(net, np.eye(2) / 2, n_grid=n_grid)
    return (r, res.f_traced, res.f_star, res.xi_star, res.phi_star)


def cmd_network_sweep(args, config: RunConfig) -> None:
    rs = parse_range(args.r)
    fn = partial(_network_point, kind=args.kind, n_grid=args.n_grid)
    rows = ordered_map(fn, rs, config.jobs)
    write_csv(config, ("r", "F_tr", "F_assisted", "xi_star", "phi_star"), rows)


def cmd_oracle_verify(args, config: RunConfig) -> None:
    from cvnet.oracle import montecarlo_protocol, oracle_fidelity
    from cvnet.teleport import fidelity

    channel = load_channel(args.channel)
    v_in = _input_from_args(args)
    closed = fidelity(v_in.cm.entries, channel).fidelity
    grid = oracle_fidelity(channel, v_in, points_per_axis=args.resolution)
    out = {"closed_form": closed, "oracle": grid, "gap": abs(grid - closed),
           "resolution": args.resolution}
    if args.samples:
        mc = montecarlo_protocol(channel, v_in, args.samples, config.rng_seed)
        out.update(montecarlo=mc.f_estimate, montecarlo_std_error=mc.std_error,
                   montecarlo_gap=abs(mc.f_estimate - closed))
    emit(dumps(out), config.output)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_input_flags(p) -> None:
    p.add_argument("--input", choices=("coherent", "squeezed"), default="coherent")
    p.add_argument("--alpha-re", type=float, default=0.0)
    p.add_argument("--alpha-im", type=float, default=0.0)
    p.add_argument("--input-xi", type=float, default=1.0, help="squeezing of a squeezed input")
    p.add_argument("--input-phi", type=float, default=0.0)


def build_parser() -> tuple[argparse.ArgumentParser, list]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    parser = argparse.ArgumentParser(prog="cvnet", description="Gaussian CV teleportation toolkit")
    parser.add_argument("--version", action="version", version=f"cvnet {__version__}")
    groups = parser.add_subparsers(dest="group", required=True)
    leaves = []

    def leaf(group, name, func, help_text):
        p = group.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func, command_name=f"{group_name[group]} {name}")
        leaves.append(p)
        return p

    group_name = {}

    def group(name, help_text):
        g = groups.add_parser(name, help=help_text).add_subparsers(dest="action", required=True)
        group_name[g] = name
        return g

    g = group("channel", "build channel states")
    p = leaf(g, "build", cmd_channel_build, "write a channel state as JSON")
    p.add_argument("--kind", choices=[k.value for k in ChannelKind if k is not ChannelKind.CUSTOM],
                   default="tmsv")
    p.add_argument("--r", type=float, default=0.0)
    p.add_argument("--n-a", type=float, default=0.5)
    p.add_argument("--n-b", type=float, default=0.5)
    p.add_argument("--modes", type=int, default=2)

    g = group("entangle", "entanglement diagnostics")
    p = leaf(g, "report", cmd_entangle_report, "PPT, log-negativity, Duan and EPR measures")
    p.add_argument("--state", help="state JSON (default: stdin)")

    g = group("teleport", "two-party teleportation")
    p = leaf(g, "fidelity", cmd_teleport_fidelity, "closed-form fidelity report")
    p.add_argument("--channel", help="channel JSON (default: stdin)")
    _add_input_flags(p)
    p.add_argument("--delta-re", type=float, default=None, help="Bob's extra displacement")
    p.add_argument("--delta-im", type=float, default=None)
    p = leaf(g, "sweep", cmd_teleport_sweep, "TMSV fidelity against r as CSV")
    p.add_argument("--r-min", type=float, default=0.0)
    p.add_argument("--r-max", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=21)
    p.add_argument("--resolution", type=int, default=64, help="oracle points per axis (0 skips)")

    g = group("network", "three-party assisted teleportation")
    p = leaf(g, "optimize", cmd_network_optimize, "optimal local Gaussian measurement")
    p.add_argument("--state", help="3-mode state JSON (default: stdin)")
    _add_input_flags(p)
    p.add_argument("--n-grid", type=int, default=720)
    p = leaf(g, "sweep", cmd_network_sweep, "assisted vs non-assisted fidelity as CSV")
    p.add_argument("--kind", choices=("cheap", "nmsv"), default="cheap")
    p.add_argument("--r", default="0:2:0.05", help="start:stop:step")
    p.add_argument("--n-grid", type=int, default=720)

    g = group("oracle", "numerical cross-checks")
    p = leaf(g, "verify", cmd_oracle_verify, "closed form vs grid quadrature (and Monte Carlo)")
    p.add_argument("--channel", help="channel JSON (default: stdin)")
    p.add_argument("--resolution", type=int, default=128)
    p.add_argument("--samples", type=int, default=0, help="Monte-Carlo samples (0 skips)")
    _add_input_flags(p)
    return parser, leaves


def _apply_config(parser, leaves, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    values = read_config_file(args.config)
    for p in leaves:
        if p.get_default("func") is not args.func:
            continue
        known = {a.dest: a for a in p._actions}
        defaults = {}
        for key, raw in values.items():
            if key not in known or key in ("config", "help"):
                raise UsageError(f"unknown config key {key!r}")
            action = known[key]
            defaults[key] = action.type(raw) if action.type else raw
        p.set_defaults(**defaults)
    return parser.parse_args(argv)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser, leaves = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        try:
            args = _apply_config(parser, leaves, argv)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        except SystemExit as exc:  # argparse: --help, --version, bad flags
            return int(exc.code or 0)
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        params = {k: v for k, v in vars(args).items()
                  if k not in ("func", "group", "action", "command_name", "config", "out", "seed", "jobs")}
        config = RunConfig(command=args.command_name, params=params, output=args.out,
                           format="csv" if "sweep" in args.command_name else "json",
                           rng_seed=args.seed, jobs=args.jobs)
        args.func(args, config)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"cvnet: error: {exc}\n")
        return 2
    except CVError as exc:
        sys.stderr.write(json.dumps(exc.to_dict()) + "\n")
        return 1
    except OSError as exc:
        sys.stderr.write(json.dumps({"code": "io_error", "message": str(exc)}) + "\n")
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
