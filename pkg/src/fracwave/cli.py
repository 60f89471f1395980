"""Command-line front end: ``fracwave {kernel,solve,verify,oracle-compare} --config FILE``.

Config files are flat ``key = value`` lines grouped in ``[section]`` blocks
with ``#`` comments. CSV goes to ``--out`` (or stdout); the plain-text summary
goes to ``<out>.summary.txt`` (or stderr).

Exit codes: 0 success, 2 config error, 3 evaluation error, 4 target missed.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import sys
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .cauchy import CauchyConfig, CauchyProblem, initial_condition_report, residual_from_samples, solve_cauchy
from .errors import FracwaveError
from .kernels import EllipticParamField, KernelId, frozen_kernel, identity_target
from .levi import EllipticOperator, QuadRule

EXIT_OK, EXIT_CONFIG, EXIT_EVAL, EXIT_TARGET = 0, 2, 3, 4


class ConfigError(Exception):
    pass


# keys allowed in each section; the value is the default (None = required)
SCHEMA = {
    "kernel": {"alpha": None, "n": "1", "kernel": "Z1", "a": "1.0", "derivative": "", "time": "0",
               "t": "1.0", "x": "", "x_range": "", "identity": "false"},
    "problem": {"alpha": None, "T": None, "a": "1.0", "c": "0.0", "u0": "zero", "u1": "zero", "f": "zero"},
    "grid": {"t_count": "16", "t_grading": "1.0", "times": "", "x_lo": "-2.0", "x_hi": "2.0", "x_count": "41"},
    "levi": {"n_time": "16", "grading": "2.0", "h": "0.1", "xi_panels": "8", "order": "8",
             "lam_panels": "6", "y_panels": "6", "tol": "1e-12", "max_iter": "200"},
    "check": {"exact": "", "residual": "true", "rel_tol": "0.05", "abs_tol": "1e-3", "ic_times": ""},
    "fd": {"dt": "0.00125", "dx": "0.01", "boundary": "dirichlet", "factor": "6.0"},
    "compare": {"t_min": "0.0", "t_max": "", "norm": "sup", "tol": "0.05"},
    "verify": {"suites": "special,identities,fraccalc"},
}

SECTIONS = {
    "kernel": ("kernel",),
    "solve": ("problem", "grid", "levi", "check"),
    "verify": ("verify",),
    "oracle-compare": ("problem", "grid", "levi", "fd", "compare"),
}


@dataclass
class RunConfig:
    command: str
    values: dict

    def get(self, section, key):
        v = self.values.get(section, {}).get(key, SCHEMA[section][key])
        if v is None:
            raise ConfigError(f"missing required key '{key}' in [{section}]")
        return v

    def float(self, section, key):
        return _num(self.get(section, key), float, f"{section}.{key}")

    def int(self, section, key):
        return _num(self.get(section, key), int, f"{section}.{key}")

    def bool(self, section, key):
        v = self.get(section, key).strip().lower()
        if v not in ("true", "false", "yes", "no", "1", "0"):
            raise ConfigError(f"key '{section}.{key}' must be a boolean, got {v!r}")
        return v in ("true", "yes", "1")

    def floats(self, section, key):
        v = self.get(section, key).strip()
        return [] if not v else [_num(s, float, f"{section}.{key}") for s in v.replace(",", " ").split()]


def _num(text, kind, where):
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"key '{where}' is not a valid {kind.__name__}: {text!r}") from None


def load_config(path: str | None, command: str) -> RunConfig:
    parser = configparser.ConfigParser(comment_prefixes=("#",), inline_comment_prefixes=("#",),
                                       interpolation=None, delimiters=("=",))
    parser.optionxform = str
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in SECTIONS[command]:
            raise ConfigError(f"unknown section [{section}] for '{command}'")
        for key, val in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]")
        values[section] = dict(parser.items(section))
    return RunConfig(command, values)


# ---------------------------------------------------------------------------
# named coefficients and data


def coefficient(spec: str):
    """'1.3' (constant), 'sine a0 eps' (a0 + eps sin x) or 'file path' (two columns x, a)."""
    parts = spec.split()
    if not parts:
        raise ConfigError("empty coefficient specification")
    if parts[0] == "sine":
        if len(parts) != 3:
            raise ConfigError("'sine' needs a0 and eps")
        a0, eps = _num(parts[1], float, "a"), _num(parts[2], float, "a")
        return EllipticOperator.one_dim(lambda x: a0 + eps * np.sin(x), bounds=(a0 - abs(eps), a0 + abs(eps)),
                                        holder_const=abs(eps))
    if parts[0] == "file":
        if len(parts) != 2:
            raise ConfigError("'file' needs a path")
        try:
            tab = np.loadtxt(parts[1], comments="#", delimiter=None, ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read coefficient table: {exc}") from None
        if tab.shape[1] != 2 or tab.shape[0] < 2 or np.any(np.diff(tab[:, 0]) <= 0):
            raise ConfigError("coefficient table needs two columns with increasing x")
        xs, av = tab[:, 0].copy(), tab[:, 1].copy()
        if np.any(av <= 0):
            raise ConfigError("tabulated coefficient must be positive")
        # a C^2 interpolant keeps the Levi quadratures at full order; held constant outside the table
        spline = CubicSpline(xs, av)

        def a(x):
            return spline(np.clip(x, xs[0], xs[-1]))

        dense = a(np.linspace(xs[0], xs[-1], 20 * xs.size))
        if np.any(dense <= 0):
            raise ConfigError("interpolated coefficient must stay positive")
        return EllipticOperator.one_dim(a, bounds=(float(dense.min()), float(dense.max())))
    a0 = _num(parts[0], float, "a")
    if len(parts) != 1 or a0 <= 0:
        raise ConfigError("a constant coefficient must be one positive number")
    return a0


def _operator(cfg: RunConfig) -> EllipticOperator:
    a = coefficient(cfg.get("problem", "a"))
    c0 = cfg.float("problem", "c")
    if isinstance(a, float):
        return EllipticOperator.laplacian(a, c0)
    if c0 != 0.0:
        return EllipticOperator(1, a.a, None, lambda x: np.full_like(np.asarray(x, dtype=float), c0),
                                a.delta0, a.gamma, a.holder_const, a.a_max)
    return a


def spatial_data(spec: str):
    parts = spec.split()
    name = parts[0] if parts else ""
    if name == "zero":
        return None
    if name == "one":
        return lambda x: np.ones_like(np.asarray(x, dtype=float))
    if name == "gauss":
        return lambda x: np.exp(-np.asarray(x, dtype=float) ** 2)
    if name in ("sin", "cos"):
        return getattr(np, name)
    if name == "bump":
        w = _num(parts[1], float, "bump width") if len(parts) > 1 else 0.25

        def bump(x):
            x = np.asarray(x, dtype=float)
            return np.where(np.abs(x) < w, np.cos(0.5 * math.pi * x / w) ** 2, 0.0)

        return bump
    raise ConfigError(f"unknown data name {spec!r} (zero, one, gauss, sin, cos, bump w)")


def forcing(spec: str):
    g = spatial_data(spec)
    if g is None:
        return None
    return lambda t, x: np.broadcast_to(g(x), np.broadcast(t, x).shape)


def exact_solution(name: str, alpha: float):
    table = {
        "one": (lambda t: np.ones_like(t), lambda t: np.zeros_like(t)),
        "t": (lambda t: t, lambda t: np.ones_like(t)),
        "t_alpha": (lambda t: t**alpha / math.gamma(alpha + 1), lambda t: t ** (alpha - 1) / math.gamma(alpha)),
    }
    if name not in table:
        raise ConfigError(f"unknown exact solution {name!r} (one, t, t_alpha)")
    return table[name]


def _problem(cfg: RunConfig) -> CauchyProblem:
    alpha, T = cfg.float("problem", "alpha"), cfg.float("problem", "T")
    if not 1.0 < alpha < 2.0:
        raise ConfigError("key 'problem.alpha' must lie in (1, 2)")
    if not T > 0:
        raise ConfigError("key 'problem.T' must be positive")
    return CauchyProblem(_operator(cfg), alpha, T, spatial_data(cfg.get("problem", "u0")),
                         spatial_data(cfg.get("problem", "u1")), forcing(cfg.get("problem", "f")))


def _lattice(cfg: RunConfig, T: float):
    times = cfg.floats("grid", "times")
    if times:
        times = np.array(sorted(set(times)))
    else:
        n = cfg.int("grid", "t_count")
        if n < 2:
            raise ConfigError("key 'grid.t_count' must be at least 2")
        q = cfg.float("grid", "t_grading")
        if q < 1.0:
            raise ConfigError("key 'grid.t_grading' must be at least 1")
        times = T * (np.arange(n + 1) / n) ** q
    n = cfg.int("grid", "x_count")
    if n < 1:
        raise ConfigError("key 'grid.x_count' must be positive")
    x = np.linspace(cfg.float("grid", "x_lo"), cfg.float("grid", "x_hi"), n)
    return times, x


def _solver_config(cfg: RunConfig, tol: float | None) -> CauchyConfig:
    g = lambda k: cfg.int("levi", k)
    rule = QuadRule(g("lam_panels"), g("y_panels"))
    return CauchyConfig(n_time=g("n_time"), grading=cfg.float("levi", "grading"), h=cfg.float("levi", "h"),
                        rule=rule, xi_panels=g("xi_panels"), order=g("order"),
                        tol=cfg.float("levi", "tol") if tol is None else tol, max_iter=g("max_iter"))


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return "%.17g" % v


def write_csv(stream, header, rows):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])


@dataclass
class Outcome:
    header: list
    rows: list
    summary: list
    code: int = EXIT_OK


# ---------------------------------------------------------------------------
# commands


def cmd_kernel(cfg: RunConfig, tol: float | None, threads: int) -> Outcome:
    alpha = cfg.float("kernel", "alpha")
    n = cfg.int("kernel", "n")
    if not 1.0 < alpha < 2.0:
        raise ConfigError("key 'kernel.alpha' must lie in (1, 2)")
    if n not in (1, 2, 3):
        raise ConfigError("key 'kernel.n' must be 1, 2 or 3")
    which = cfg.get("kernel", "kernel").strip()
    deriv = tuple(int(v) for v in cfg.floats("kernel", "derivative"))
    try:
        kid = KernelId(which, deriv, cfg.int("kernel", "time"))
    except FracwaveError as exc:
        raise ConfigError(f"invalid kernel selection: {exc}") from None
    if any(d >= n or d < 0 for d in deriv):
        raise ConfigError("key 'kernel.derivative' has an index beyond n")
    try:
        a = np.array([[float(v) for v in row.split()] for row in cfg.get("kernel", "a").split(";")])
    except ValueError:
        raise ConfigError("key 'kernel.a' must be a number or rows of numbers separated by ';'") from None
    if a.size == 1:
        a = a[0, 0] * np.eye(n)
    if a.shape != (n, n):
        raise ConfigError("key 'kernel.a' must be a number or an n x n matrix (rows separated by ';')")
    fld = EllipticParamField.constant(a)
    ts = cfg.floats("kernel", "t")
    xr = cfg.floats("kernel", "x_range")
    if xr:
        if len(xr) != 3 or xr[2] < 2:
            raise ConfigError("key 'kernel.x_range' must be 'lo, hi, count'")
        xs = np.linspace(xr[0], xr[1], int(xr[2]))
    else:
        xs = np.array(cfg.floats("kernel", "x") or [0.0])
    if not ts or min(ts) <= 0:
        raise ConfigError("key 'kernel.t' must list positive times")
    axes = np.meshgrid(*([xs] * n), indexing="ij")
    pts = np.stack([ax.ravel() for ax in axes], axis=-1)
    label = which + "".join(f"_x{d + 1}" for d in deriv) + ("_t" if kid.time else "")
    header = ["t"] + [f"x{i + 1}" for i in range(n)] + ["kernel_id", "value"]
    rows, summary, code = [], [], EXIT_OK
    for t in ts:
        vals = frozen_kernel(fld, kid, alpha, np.full(len(pts), t), pts, np.zeros(n))
        rows.extend([t, *p, label, v] for p, v in zip(pts, vals))
        if cfg.bool("kernel", "identity"):
            if n != 1 or deriv or kid.time or not xr:
                raise ConfigError("identity runs need n = 1, no derivatives and an x_range")
            total = float(simpson(vals, x=xs))
            target = identity_target(alpha, which, t)
            rel = abs(total - target) / abs(target)
            ok = rel <= (1e-6 if tol is None else tol)
            summary.append(f"identity t={t:g}: sum {total:.15g} target {target:.15g} "
                           f"relative {rel:.3e} {'PASS' if ok else 'FAIL'}")
            code = code if ok else EXIT_TARGET
    summary.insert(0, f"kernel {label}, alpha={alpha:g}, n={n}: {len(rows)} rows")
    return Outcome(header, rows, summary, code)


def _residual_stats(problem, field, rel_tol, abs_tol):
    """Residual at interior lattice points from the fourth time on (needs times[0] = 0, uniform x).

    The first two cells carry the start-up error of the sampled Caputo operator,
    so the earliest times are skipped.
    """
    times, x = field.times, field.x
    out = []
    if times[0] != 0.0 or times.size < 4 or x.size < 5:
        return out
    for it in range(3, times.size):
        for ix in range(2, x.size - 2):
            f = float(problem.data("f", np.asarray(times[it]), np.asarray(x[ix])))
            rep = residual_from_samples(problem.op, problem.alpha, times, x, field.values, field.dt_values,
                                        it, ix, f)
            out.append((abs(rep.value), rep.scale, abs(rep.value) <= rel_tol * rep.scale + abs_tol))
    return out


def cmd_solve(cfg: RunConfig, tol: float | None, threads: int) -> Outcome:
    problem = _problem(cfg)
    times, x = _lattice(cfg, problem.T)
    field = solve_cauchy(problem, times, x, _solver_config(cfg, None), threads=threads)
    header = ["t", "x", "u", "u_t"]
    rows = [[t, xv, field.values[i, j], field.dt_values[i, j]]
            for i, t in enumerate(field.times) for j, xv in enumerate(field.x)]
    summary = [f"solve: alpha={problem.alpha:g}, T={problem.T:g}, {times.size} times x {x.size} points, "
               f"kernels {'+'.join(field.provenance) or 'none'}, iterations {field.info.get('iterations', {})}"]
    code = EXIT_OK
    exact = cfg.get("check", "exact").strip()
    if exact:
        u, ut = exact_solution(exact, problem.alpha)
        err = float(np.max(np.abs(field.values - u(field.times)[:, None])))
        target = 1e-6 if tol is None else tol
        ok = err <= target
        summary.append(f"exact solution '{exact}': max |u - exact| {err:.3e} (target {target:.1e}) "
                       f"{'PASS' if ok else 'FAIL'}")
        code = code if ok else EXIT_TARGET
    if cfg.bool("check", "residual"):
        rel_tol, abs_tol = cfg.float("check", "rel_tol"), cfg.float("check", "abs_tol")
        stats = _residual_stats(problem, field, rel_tol, abs_tol)
        if stats:
            r = np.array([s[0] for s in stats])
            sc = np.array([s[1] for s in stats])
            ok = all(s[2] for s in stats)
            summary.append(f"residual: {len(stats)} interior points, max {r.max():.3e}, mean {r.mean():.3e}, "
                           f"max scale {sc.max():.3e}, rule |r| <= {rel_tol:g} scale + {abs_tol:g} "
                           f"{'PASS' if ok else 'FAIL'}")
            code = code if ok else EXIT_TARGET
        else:
            summary.append("residual: skipped (needs times from 0 with >= 4 nodes and >= 5 x points)")
    ic = cfg.floats("check", "ic_times")
    if ic:
        rep = initial_condition_report(problem, sorted(ic, reverse=True), x, _solver_config(cfg, None))
        summary.append("initial conditions: t " + " ".join(f"{v:g}" for v in rep.times))
        summary.append("  value gap " + " ".join(f"{v:.3e}" for v in rep.value_gap)
                       + f" monotone {rep.value_monotone}")
        summary.append("  derivative gap " + " ".join(f"{v:.3e}" for v in rep.derivative_gap)
                       + f" monotone {rep.derivative_monotone}")
    return Outcome(header, rows, summary, code)


def cmd_oracle_compare(cfg: RunConfig, tol: float | None, threads: int) -> Outcome:
    from .oracle import FDGrid, compare, fd_solve_1d

    problem = _problem(cfg)
    norm = cfg.get("compare", "norm").strip()
    if norm not in ("sup", "L2"):
        raise ConfigError("key 'compare.norm' must be 'sup' or 'L2'")
    times, x = _lattice(cfg, problem.T)
    times = times[times > 0]
    levi = solve_cauchy(problem, times, x, _solver_config(cfg, None), derivative=False, threads=threads)
    boundary = cfg.get("fd", "boundary").strip()
    grid = FDGrid.around(problem, float(x[0]), float(x[-1]), cfg.float("fd", "dt"), cfg.float("fd", "dx"),
                         boundary, cfg.float("fd", "factor"))
    fd = fd_solve_1d(problem, grid)
    t_max = cfg.get("compare", "t_max").strip()
    t_range = (cfg.float("compare", "t_min"), float(t_max) if t_max else problem.T)
    rep = compare(levi, fd, t_range=t_range)
    measured = rep.relative_sup if norm == "sup" else rep.relative_l2
    target = cfg.float("compare", "tol") if tol is None else tol
    ok = measured <= target
    fd_vals = [np.interp(x, fd.x, [np.interp(t, fd.times, col) for col in fd.values.T]) for t in times]
    header = ["t", "x", "levi", "fd", "difference"]
    rows = [[t, xv, levi.values[i, j], fd_vals[i][j], levi.values[i, j] - fd_vals[i][j]]
            for i, t in enumerate(times) for j, xv in enumerate(x)]
    summary = [f"oracle-compare: t in [{t_range[0]:g}, {t_range[1]:g}], {rep.points} points",
               f"relative {norm} discrepancy {measured:.3e} (target {target:.1e}) {'PASS' if ok else 'FAIL'}"]
    return Outcome(header, rows, summary, EXIT_OK if ok else EXIT_TARGET)


def cmd_verify(cfg: RunConfig, tol: float | None, threads: int) -> Outcome:
    from .verify import SUITES, run_suites

    names = [s.strip() for s in cfg.get("verify", "suites").split(",") if s.strip()]
    for s in names:
        if s not in SUITES:
            raise ConfigError(f"unknown suite {s!r} in 'verify.suites' ({', '.join(SUITES)})")
    checks = run_suites(names)
    header = ["check", "measured", "target", "passed"]
    rows = [[c.name, c.measured, c.target, "true" if c.passed else "false"] for c in checks]
    summary = [c.line() for c in checks]
    npass = sum(c.passed for c in checks)
    summary.append(f"{npass}/{len(checks)} checks passed")
    return Outcome(header, rows, summary, EXIT_OK if npass == len(checks) else EXIT_TARGET)


COMMANDS = {"kernel": cmd_kernel, "solve": cmd_solve, "verify": cmd_verify, "oracle-compare": cmd_oracle_compare}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracwave", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="config file (key = value lines in [section] blocks)")
    p.add_argument("--out", help="CSV output path; the summary goes to <out>.summary.txt")
    p.add_argument("--threads", type=int, default=1, help="worker threads for lattice evaluation")
    p.add_argument("--tol", type=float, help="override the target tolerance of the command")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    err = sys.stderr
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if args.tol is not None and not args.tol > 0:
            raise ConfigError("--tol must be positive")
        cfg = load_config(args.config, args.command)
        outcome = COMMANDS[args.command](cfg, args.tol, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_CONFIG
    except (FracwaveError, ArithmeticError, ValueError) as exc:
        print(f"evaluation error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_EVAL
    buf = io.StringIO()
    write_csv(buf, outcome.header, outcome.rows)
    text = "\n".join(outcome.summary) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        with open(args.out + ".summary.txt", "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(buf.getvalue())
        err.write(text)
    return outcome.code


if __name__ == "__main__":
    sys.exit(main())
