"""Command-line front end.

    pathsens ire --model poisson.json --horizon 10 --grid 11 --ensemble 10000 --seed 1 --perturb rel:0.1

Exit codes: 1 configuration/parse error, 2 model invariant violation,
3 runtime estimator error.  Each failure prints one ``key=value`` line on
stderr.  Every CSV starts with a ``#`` metadata line; the rest of the file
is byte-identical for repeated runs with the same configuration.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ModelError, NetworkFormatError, PathSensError
from .estimators import (
    TimeGrid,
    averaged_re_curve,
    estimate_ifim_ctmc,
    estimate_ire_ctmc,
    fim_rer_stationary_ctmc,
    ifim_sde_curve,
    ire_sde_curve,
    rer_stationary_ctmc,
)
from .model import NetworkFile, fixture_path, load_network, ornstein_uhlenbeck
from .oracle import verify_table
from .sensitivity import fd_species_si, screen, time_averaged_count, total_si
from .simulate import em_ensemble, ssa_ensemble, write_trajectories_csv

COMMANDS = ("simulate", "ire", "ifim", "avg-re", "rer", "fd-si", "screen", "verify")


class ConfigError(PathSensError):
    pass


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    horizon: float = 10.0
    dt: float = 1e-3
    grid: int = 11
    ensemble: int = 1000
    seed: int = 0
    perturb: list[str] = field(default_factory=list)
    threshold: float = 0.0
    out: str | None = None
    burn_in: float = 0.0
    h: str = "rel:0.1"
    screen_then_estimate: bool = False
    bounds_only: bool = False

    def validate(self):
        if self.command == "verify":
            return
        if not self.model:
            raise ConfigError("--model is required")
        for name in ("horizon", "dt"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"--{name} must be positive")
        if self.grid < 2:
            raise ConfigError("--grid must be at least 2")
        if self.ensemble < 1:
            raise ConfigError("--ensemble must be at least 1")
        if self.threshold < 0:
            raise ConfigError("--threshold must be nonnegative")
        if not 0 <= self.burn_in < self.horizon:
            raise ConfigError("--burn-in must lie in [0, horizon)")


# ---------------------------------------------------------------------------
# models


@dataclass
class SdeSetup:
    theta: np.ndarray
    names: tuple[str, ...]
    x0: float
    sigma: float


def _parse_builtin(spec: str) -> SdeSetup:
    # builtin:ou or builtin:ou:theta=1,sigma=1,x0=0
    parts = spec.split(":")
    if len(parts) < 2 or parts[1] != "ou":
        raise ConfigError(f"unknown builtin model {spec!r}; available: builtin:ou")
    opts = {"theta": 1.0, "sigma": 1.0, "x0": 0.0}
    if len(parts) > 2 and parts[2]:
        for item in parts[2].split(","):
            key, _, val = item.partition("=")
            if key not in opts:
                raise ConfigError(f"unknown builtin option {key!r}")
            try:
                opts[key] = float(val)
            except ValueError:
                raise ConfigError(f"bad value for {key}: {val!r}") from None
    if not opts["theta"] > 0 or not opts["sigma"] > 0:
        raise ModelError("OU theta and sigma must be positive")
    return SdeSetup(np.array([opts["theta"]]), ("theta",), opts["x0"], opts["sigma"])


def _load_model(path: str) -> NetworkFile:
    p = Path(path)
    if not p.exists() and not p.suffix:
        try:
            p = fixture_path(path)
        except FileNotFoundError:
            pass
    if not p.exists():
        raise ConfigError(f"model file not found: {path}")
    return load_network(p)


def _initial(nf: NetworkFile):
    if not nf.initial_poisson:
        return nf.initial
    base, means = nf.initial, nf.initial_poisson

    def draw(rng):
        x = base.copy()
        for s, m in sorted(means.items()):
            x[s] = rng.poisson(m)
        return x

    return draw


def parse_perturbation(items: list[str], theta: np.ndarray, names: tuple[str, ...]) -> np.ndarray:
    """``rel:X`` (all coordinates), ``NAME=VAL`` or ``NAME=rel:X``; later items win."""
    eps = np.zeros(theta.size)
    for item in items or ["rel:0.1"]:
        if item.startswith("rel:"):
            eps = _number(item[4:], item) * theta
            continue
        name, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"bad --perturb item {item!r}")
        if name not in names:
            raise ConfigError(f"--perturb names unknown parameter {name!r}")
        k = names.index(name)
        eps[k] = _number(val[4:], item) * theta[k] if val.startswith("rel:") else _number(val, item)
    if np.any(theta + eps <= 0):
        raise ConfigError("perturbation drives a parameter nonpositive")
    return eps


def _number(text: str, ctx: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"not a number in {ctx!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"non-finite number in {ctx!r}")
    return v


# ---------------------------------------------------------------------------
# output


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    return "" if math.isnan(x) else repr(x)


class Output:
    """Collects one CSV in memory and writes it atomically on success."""

    def __init__(self, cfg: RunConfig, meta: dict):
        self.cfg = cfg
        self.buf = io.StringIO()
        self.writer = csv.writer(self.buf, lineterminator="\n")
        fields = {"tool": f"pathsens-{__version__}", "command": cfg.command, **meta,
                  "created": _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")}
        self.buf.write("# " + " ".join(f"{k}={v}" for k, v in fields.items()) + "\n")

    def row(self, *values):
        self.writer.writerow(values)

    def close(self):
        text = self.buf.getvalue()
        if self.cfg.out in (None, "-"):
            sys.stdout.write(text)
            return
        target = Path(self.cfg.out)
        fd, tmp = tempfile.mkstemp(dir=target.parent if str(target.parent) else ".", prefix=".pathsens-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def _vec(names, values) -> str:
    return ";".join(f"{n}:{float(v)!r}" for n, v in zip(names, values))


def _meta(cfg: RunConfig, sha: str, names, theta, eps=None) -> dict:
    meta = {"model": Path(cfg.model).name if cfg.model else "", "model_sha256": sha,
            "theta": _vec(names, theta), "M": cfg.ensemble, "seed": cfg.seed, "T": repr(cfg.horizon)}
    if eps is not None:
        meta["eps"] = _vec(names, eps)
    return meta


# ---------------------------------------------------------------------------
# commands


def _ctmc_ensemble(cfg, nf):
    return ssa_ensemble(nf.network, nf.theta, _initial(nf), cfg.horizon, cfg.ensemble, cfg.seed)


def _sde_ensemble(cfg, setup: SdeSetup):
    sde = ornstein_uhlenbeck(setup.sigma)
    ens = em_ensemble(sde, setup.theta, np.array([setup.x0]), cfg.horizon, cfg.dt, cfg.ensemble, cfg.seed)
    n_steps = ens[0].n_steps
    if n_steps % (cfg.grid - 1):
        raise ConfigError(f"--grid {cfg.grid} must split the {n_steps} Euler steps evenly")
    return sde, ens, n_steps // (cfg.grid - 1)


def cmd_simulate(cfg: RunConfig):
    nf = _load_model(cfg.model)
    ens = _ctmc_ensemble(cfg, nf)
    out = Output(cfg, _meta(cfg, nf.sha256, nf.theta.names, nf.theta.values))
    out.buf.write("")
    write_trajectories_csv(ens, nf.network.species_names, out.buf)
    out.close()


def cmd_ire(cfg: RunConfig):
    if cfg.model.startswith("builtin:"):
        setup = _parse_builtin(cfg.model)
        eps = parse_perturbation(cfg.perturb, setup.theta, setup.names)
        sde, ens, stride = _sde_ensemble(cfg, setup)
        curve = ire_sde_curve(sde, ens, setup.theta, eps, stride)
        meta = _meta(cfg, "builtin", setup.names, setup.theta, eps) | {"dt": repr(cfg.dt)}
    else:
        nf = _load_model(cfg.model)
        eps = parse_perturbation(cfg.perturb, nf.theta.values, nf.theta.names)
        ens = _ctmc_ensemble(cfg, nf)
        curve = estimate_ire_ctmc(ens, TimeGrid.uniform(cfg.horizon, cfg.grid), nf.network, nf.theta, eps)
        meta = _meta(cfg, nf.sha256, nf.theta.names, nf.theta.values, eps)
    if curve.degenerate:
        meta["se"] = "degenerate(M=1)"
    out = Output(cfg, meta)
    out.row("t", "value", "std_error")
    for t, v, s in zip(curve.grid.points, curve.values, curve.std_errors):
        out.row(_fmt(t), _fmt(v), _fmt(s))
    out.close()


def cmd_ifim(cfg: RunConfig):
    if cfg.model.startswith("builtin:"):
        setup = _parse_builtin(cfg.model)
        sde, ens, stride = _sde_ensemble(cfg, setup)
        curve = ifim_sde_curve(sde, ens, setup.theta, stride)
        names = setup.names
        meta = _meta(cfg, "builtin", names, setup.theta) | {"dt": repr(cfg.dt)}
    else:
        nf = _load_model(cfg.model)
        ens = _ctmc_ensemble(cfg, nf)
        curve = estimate_ifim_ctmc(ens, TimeGrid.uniform(cfg.horizon, cfg.grid), nf.network, nf.theta)
        names = nf.theta.names
        meta = _meta(cfg, nf.sha256, names, nf.theta.values)
    out = Output(cfg, meta)
    out.row("t", "i", "j", "value", "std_error")
    K = len(names)
    for g, t in enumerate(curve.grid.points):
        for i in range(K):
            for j in range(K):
                out.row(_fmt(t), names[i], names[j], _fmt(curve.matrices[g, i, j]), _fmt(curve.std_errors[g, i, j]))
    out.close()


def cmd_avg_re(cfg: RunConfig):
    nf = _load_model(cfg.model)
    eps = parse_perturbation(cfg.perturb, nf.theta.values, nf.theta.names)
    ens = _ctmc_ensemble(cfg, nf)
    curve = averaged_re_curve(ens, TimeGrid.uniform(cfg.horizon, cfg.grid), nf.network, nf.theta, eps)
    out = Output(cfg, _meta(cfg, nf.sha256, nf.theta.names, nf.theta.values, eps))
    out.row("t", "value", "std_error")
    for t, v, s in zip(curve.grid.points[1:], curve.values[1:], curve.std_errors[1:]):
        out.row(_fmt(t), _fmt(v), _fmt(s))
    out.close()


def cmd_rer(cfg: RunConfig):
    nf = _load_model(cfg.model)
    eps = parse_perturbation(cfg.perturb, nf.theta.values, nf.theta.names)
    ens = _ctmc_ensemble(cfg, nf)
    rer = rer_stationary_ctmc(ens, nf.network, nf.theta, eps, cfg.burn_in)
    fim = fim_rer_stationary_ctmc(ens, nf.network, nf.theta, cfg.burn_in)
    meta = _meta(cfg, nf.sha256, nf.theta.names, nf.theta.values, eps) | {"burn_in": repr(cfg.burn_in)}
    if rer.note:
        meta["se"] = rer.note.replace(" ", "_").replace(":", "")
    out = Output(cfg, meta)
    out.row("quantity", "i", "j", "value", "std_error")
    out.row("rer", "", "", _fmt(rer.value), _fmt(rer.std_error))
    names = nf.theta.names
    for i in range(len(names)):
        for j in range(len(names)):
            out.row("fim", names[i], names[j], _fmt(fim.value[i, j]), _fmt(fim.std_error[i, j]))
    out.close()


def cmd_fd_si(cfg: RunConfig):
    nf = _load_model(cfg.model)
    eps = parse_perturbation(cfg.perturb, nf.theta.values, nf.theta.names)
    grid = TimeGrid.uniform(cfg.horizon, cfg.grid)
    x0 = _initial(nf)
    base = _ctmc_ensemble(cfg, nf)
    meta = _meta(cfg, nf.sha256, nf.theta.names, nf.theta.values, eps)
    meta["denominator"] = "ensemble_mean"
    out = Output(cfg, meta)
    out.row("parameter", "species", "t", "value", "skipped")
    species = nf.network.species_names
    for k in np.flatnonzero(eps):
        si = fd_species_si(nf.network, nf.theta, int(k), grid, cfg.ensemble, cfg.seed, x0,
                           eps=float(eps[k]), base=base)
        name = nf.theta.names[k]
        for s in range(len(species)):
            for g, t in enumerate(grid.points):
                out.row(name, species[s], _fmt(t), _fmt(si.values[s, g]), "")
        total, skipped = total_si(si.values)
        for g, t in enumerate(grid.points):
            out.row(name, "TOTAL", _fmt(t), _fmt(total[g]), int(skipped[g]))
    out.close()


def cmd_screen(cfg: RunConfig):
    nf = _load_model(cfg.model)
    if not cfg.h.startswith("rel:"):
        raise ConfigError("--h takes rel:X (step = X * theta_k)")
    rel = _number(cfg.h[4:], cfg.h)
    if not 0 < rel < 1:
        raise ConfigError("--h rel:X needs 0 < X < 1")
    net = nf.network
    observables = [time_averaged_count(s, cfg.horizon, f"mean_{name}") for s, name in enumerate(net.species_names)]
    report = screen(net, nf.theta, _initial(nf), cfg.horizon, observables, cfg.ensemble, cfg.seed,
                    threshold=cfg.threshold, screen_then_estimate=cfg.screen_then_estimate, rel_step=rel,
                    estimate=not cfg.bounds_only)
    meta = _meta(cfg, nf.sha256, nf.theta.names, nf.theta.values)
    meta |= {"threshold": repr(cfg.threshold), "h": cfg.h, "fd": "central_crn"}
    out = Output(cfg, meta)
    report.write_csv(out.buf)
    out.close()


def cmd_verify(cfg: RunConfig):
    out = Output(cfg, {})
    out.row("label", "value")
    for label, value in verify_table():
        out.row(label, _fmt(value))
    out.close()


HANDLERS = {
    "simulate": cmd_simulate, "ire": cmd_ire, "ifim": cmd_ifim, "avg-re": cmd_avg_re, "rer": cmd_rer,
    "fd-si": cmd_fd_si, "screen": cmd_screen, "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--model")
    common.add_argument("--horizon", type=float, default=10.0)
    common.add_argument("--dt", type=float, default=1e-3)
    common.add_argument("--grid", type=int, default=11)
    common.add_argument("--ensemble", type=int, default=1000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--perturb", action="append", default=[], metavar="NAME=VAL|rel:X")
    common.add_argument("--threshold", type=float, default=0.0)
    common.add_argument("--out")
    common.add_argument("--burn-in", type=float, default=0.0)
    common.add_argument("--h", default="rel:0.1")
    common.add_argument("--screen-then-estimate", action="store_true")
    common.add_argument("--bounds-only", action="store_true")
    parser = _Parser(prog="pathsens", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _diagnostic(code: int, exc: BaseException):
    msg = str(exc).replace("\n", " ").replace('"', "'")
    print(f'pathsens: error code={code} kind={type(exc).__name__} message="{msg}"', file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = RunConfig(**{k: v for k, v in vars(ns).items()})
        cfg.validate()
        HANDLERS[cfg.command](cfg)
    except (ConfigError, NetworkFormatError, OSError) as exc:
        return _diagnostic(1, exc)
    except ModelError as exc:
        return _diagnostic(2, exc)
    except PathSensError as exc:
        return _diagnostic(3, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
