"""Command-line interface: ``reflectlab {limits,simulate,verify,plot-data}``.

Exit codes: 0 success, 1 verification failure, 2 invalid model or
configuration (an error document is printed on stdout), 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .checks import CHECKS, coupled_t, run_suite
from .config import Experiment, load_experiment, experiment_from_mapping
from .errors import ConfigError, DivergentTailError, OscillationError, ReflectLabError
from .levy_models import cramer_gamma
from .limit_laws import (
    gumbel_cdf,
    gumbel_constant,
    laplace_invert_cdf,
    limit_law_set,
    y_inf_atom,
    y_inf_laplace,
    y_inf_tail,
    z_inf_atom,
    z_inf_laplace,
    z_inf_tail,
)
from .path_simulator import SimConfig, monte_carlo, simulate_batch
from .stats_verify import dkw_radius

SIM_COLUMNS = ["index", "t", "x", "y_offset", "y_t", "z", "m", "tau", "straddle", "weight"]
PLOT_COLUMNS = ["law", "x", "analytic", "empirical", "band"]

DEFAULT_U = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
DEFAULT_X = tuple(round(0.25 * i, 2) for i in range(1, 25))


class IOFailure(Exception):
    pass


def _num(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise IOFailure(f"{path}: {exc.strerror or exc}") from exc


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _load(args) -> Experiment:
    if args.config is None:
        return experiment_from_mapping({})
    return load_experiment(args.config)


def _sim_config(exp: Experiment, seed_override: Optional[int], **over) -> SimConfig:
    sim = dict(exp.sim)
    sim.update({k: v for k, v in over.items() if v is not None})
    if seed_override is not None:
        sim["seed"] = seed_override
    missing = [k for k in ("t", "x") if k not in sim]
    if missing:
        raise ConfigError(f"sim section lacks {missing}")
    try:
        return SimConfig(
            t=float(sim["t"]),
            x=float(sim["x"]),
            y_offset=float(sim.get("y_offset", exp.grid.y_offset)),
            n=int(sim.get("n", 1000)),
            seed=int(sim.get("seed", 0)),
            step=float(sim.get("step", 1e-3)),
            horizon=float(sim["horizon"]) if "horizon" in sim else None,
            regenerate=bool(sim.get("regenerate", False)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad sim section: {exc}") from exc


# ---------------------------------------------------------------- limits


def _invert_flagged(transform, x_grid, order: int = 14):
    """Inverted tail per point; points failing the order check give NaN and are listed."""
    values, flagged = [], []
    for x in x_grid:
        try:
            values.append(laplace_invert_cdf(transform, [x], order=order)[0])
        except OscillationError:
            values.append(math.nan)
            flagged.append(x)
    return values, flagged


def _factor_doc(fac) -> dict:
    return {"roots": list(fac.roots), "poles": list(fac.poles), "scale": fac.scale,
            "killing": fac.killing, "drift": fac.drift}


def build_limits(exp: Experiment):
    model = exp.require_model()
    laws = limit_law_set(model, exp.grid.lambda_scale)
    fact = laws.fact
    u_list = tuple(float(u) for u in exp.limits.get("u_list", DEFAULT_U))
    x_grid = tuple(float(x) for x in exp.limits.get("x_grid", DEFAULT_X))
    order = int(exp.limits.get("inversion_order", 14))
    if not u_list or not x_grid:
        raise ConfigError("limits.u_list and limits.x_grid must be non-empty")

    try:
        z_closed = [float(v) for v in z_inf_tail(laws, np.array(x_grid))]
    except DivergentTailError:
        z_closed = [math.nan] * len(x_grid)
    z_inv, z_flag = _invert_flagged(lambda v: z_inf_laplace(laws, v), x_grid, order)
    y_closed = [float(v) for v in y_inf_tail(laws, np.array(x_grid))]
    y_inv, y_flag = _invert_flagged(lambda v: y_inf_laplace(laws, v), x_grid, order)

    doc = {
        "model": model.to_mapping(),
        "gamma": laws.gamma,
        "c_gamma": fact.c_gamma,
        "ell_phihat_gamma": fact.ell_phihat_gamma,
        "m": fact.m,
        "phi0": fact.phi0,
        "k": fact.k,
        "atom": z_inf_atom(laws),
        "y_atom": y_inf_atom(laws),
        "gumbel_constant": gumbel_constant(laws),
        "lambda": laws.lambda_scale,
        "gumbel_location": (math.log(laws.lambda_scale * gumbel_constant(laws)) / laws.gamma
                            if laws.lambda_scale else None),
        "ascending": _factor_doc(fact.ascending),
        "descending": _factor_doc(fact.descending),
        "inversion_order": order,
        "inversion_flagged": {"z": z_flag, "y": y_flag},
    }
    transforms = [(_num(u), _num(z_inf_laplace(laws, u)), _num(y_inf_laplace(laws, u))) for u in u_list]
    cdf_rows = []
    for i, x in enumerate(x_grid):
        g = gumbel_cdf(laws, x) if laws.lambda_scale else None
        cdf_rows.append((_num(x), _num(z_closed[i]), _num(z_inv[i]), _num(y_closed[i]), _num(y_inv[i]), _num(g)))
    return doc, transforms, cdf_rows


def cmd_limits(args, exp: Experiment) -> int:
    doc, transforms, cdf_rows = build_limits(exp)
    out = Path(args.out or ".")
    text = _dump_json(doc)
    _write_text(out / "limits.json", text)
    _write_text(out / "limits_transforms.csv", _csv_text(["u", "z_laplace", "y_laplace"], transforms))
    _write_text(out / "limits_cdfs.csv", _csv_text(
        ["x", "z_tail_closed", "z_tail_inverted", "y_tail_closed", "y_tail_inverted", "gumbel_cdf"], cdf_rows))
    if args.json:
        sys.stdout.write(text)
    return 0


# -------------------------------------------------------------- simulate


def _sim_blocks(exp: Experiment, seed: Optional[int]):
    """``[(SimConfig), ...]``: one block per coupled level, or the plain sim section."""
    model = exp.require_model()
    if exp.grid.x_list:
        gamma = cramer_gamma(model).gamma
        blocks = []
        for x in exp.grid.x_list:
            t = coupled_t(exp.grid.lambda_scale, gamma, x)
            horizon = max(float(exp.sim.get("horizon", t)), t)
            blocks.append(_sim_config(exp, seed, t=t, x=x, y_offset=exp.grid.y_offset, horizon=horizon))
        return blocks
    return [_sim_config(exp, seed)]


def cmd_simulate(args, exp: Experiment) -> int:
    model = exp.require_model()
    blocks = _sim_blocks(exp, args.seed)
    path = Path(args.out or "samples.csv")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fh = path.open("w", newline="")
    except OSError as exc:
        raise IOFailure(f"{path}: {exc.strerror or exc}") from exc
    with fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SIM_COLUMNS)
        for cfg in blocks:
            start = args.start or 0
            stop = cfg.n if args.stop is None else min(args.stop, cfg.n)
            if start > stop:
                raise ConfigError(f"--start {start} beyond --stop {stop}")
            for lo in range(start, stop, 8192):
                hi = min(lo + 8192, stop)
                b = simulate_batch(model, cfg, lo, hi, workers=args.workers)
                for i in range(len(b)):
                    w.writerow([lo + i, _num(cfg.t), _num(cfg.x), _num(cfg.y_offset), _num(b.y_t[i]),
                                _num(b.z[i]), _num(b.m[i]), _num(b.tau[i]), int(b.straddle[i]),
                                _num(b.weight[i])])
    return 0


# ---------------------------------------------------------------- verify


def cmd_verify(args, exp: Experiment) -> int:
    settings = exp.verify
    if args.seed is not None:
        from dataclasses import replace

        settings = replace(settings, seed=args.seed)
    only = None
    if args.only:
        only = [name.strip() for name in args.only.split(",") if name.strip()]
    verdicts = run_suite(settings, only=only, workers=args.workers)
    doc = {
        "version": __version__,
        "settings": settings.to_dict(),
        "checks": only or list(CHECKS),
        "verdicts": [v.to_dict() for v in verdicts],
        "all_pass": all(v.passed for v in verdicts),
    }
    text = _dump_json(doc)
    if args.out:
        _write_text(Path(args.out), text)
    if args.json or not args.out:
        sys.stdout.write(text)
    return 0 if doc["all_pass"] else 1


# ------------------------------------------------------------- plot-data


def build_plot_series(exp: Experiment, seed: Optional[int], workers: int = 1):
    """Tidy rows ``(law, x, analytic, empirical, band)`` for Y(t), Z and M."""
    model = exp.require_model()
    laws = limit_law_set(model, exp.grid.lambda_scale)
    over = {}
    if exp.grid.lambda_scale is not None and "x" in exp.sim:
        # the maximum is compared on the coupled grid: t follows from x
        over["t"] = coupled_t(exp.grid.lambda_scale, laws.gamma, float(exp.sim["x"]))
        over["horizon"] = max(float(exp.sim.get("horizon", over["t"])), over["t"])
    cfg = _sim_config(exp, seed, **over)
    mc = monte_carlo(model, cfg, workers=workers)

    def grid(key, default):
        vals = tuple(float(v) for v in exp.plot.get(key, default))
        if not vals:
            raise ConfigError(f"plot.{key} is empty")
        return vals

    rows = []
    y_grid = grid("y_grid", DEFAULT_X)
    band = dkw_radius(mc.y_t.n)
    for x in y_grid:
        rows.append(("y_stationary", x, 1.0 - float(y_inf_tail(laws, x)), mc.y_t.cdf(x), band))

    z_grid = grid("z_grid", DEFAULT_X)
    try:
        z_tail = [float(v) for v in z_inf_tail(laws, np.array(z_grid))]
    except DivergentTailError:
        z_tail, _ = _invert_flagged(lambda v: z_inf_laplace(laws, v), z_grid)
    if mc.z.n:
        band = dkw_radius(mc.z.n)
        for x, tail in zip(z_grid, z_tail):
            if math.isnan(tail):
                continue
            rows.append(("z_overshoot", x, 1.0 - tail, mc.z.cdf(x), band))

    if laws.lambda_scale is not None:
        m_grid = grid("m_grid", tuple(round(-2.0 + 0.25 * i, 2) for i in range(33)))
        band = dkw_radius(mc.m.n)
        for x in m_grid:
            rows.append(("m_gumbel", x, float(gumbel_cdf(laws, x)), mc.m.cdf(x), band))
    return cfg, rows


def cmd_plot_data(args, exp: Experiment) -> int:
    cfg, rows = build_plot_series(exp, args.seed, args.workers)
    out = Path(args.out or ".")
    text = _csv_text(PLOT_COLUMNS, [(law, _num(x), _num(a), _num(e), _num(b)) for law, x, a, e, b in rows])
    _write_text(out / "plot_data.csv", text)
    if args.figures:
        from .plotting import render_series

        try:
            render_series(rows, out, title=f"t={cfg.t:.4g}, x={cfg.x:.4g}, n={cfg.n}")
        except OSError as exc:
            raise IOFailure(f"{out}: {exc.strerror or exc}") from exc
    return 0


# ------------------------------------------------------------------ main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reflectlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"reflectlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help):
        sp.add_argument("--config", help="TOML experiment file")
        sp.add_argument("--out", help=out_help)
        sp.add_argument("--seed", type=int, help="override the configured seed")
        sp.add_argument("--workers", type=int, default=1, help="threads; never changes results")
        sp.add_argument("--json", action="store_true", help="also print the JSON report on stdout")

    common(sub.add_parser("limits", help="closed-form limit laws"), "output directory")
    sp = sub.add_parser("simulate", help="sample path functionals to CSV")
    common(sp, "CSV file (default samples.csv)")
    sp.add_argument("--start", type=int, help="first sample index (resume)")
    sp.add_argument("--stop", type=int, help="one past the last sample index")
    sp = sub.add_parser("verify", help="run the verification suite")
    common(sp, "JSON verdict file (default: stdout)")
    sp.add_argument("--only", help=f"comma-separated subset of: {','.join(CHECKS)}")
    sp = sub.add_parser("plot-data", help="analytic vs empirical CDF series")
    common(sp, "output directory")
    sp.add_argument("--figures", action="store_true", help="also render PNG figures next to the CSV")
    return p


COMMANDS = {"limits": cmd_limits, "simulate": cmd_simulate, "verify": cmd_verify, "plot-data": cmd_plot_data}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        exp = _load(args)
        return COMMANDS[args.command](args, exp)
    except ReflectLabError as exc:
        sys.stdout.write(_dump_json(exc.to_dict()))
        return 2
    except IOFailure as exc:
        sys.stdout.write(_dump_json({"error": "io-error", "message": str(exc)}))
        return 3


if __name__ == "__main__":
    sys.exit(main())
