"""Command-line front end: ``qamlab <subcommand> [options]``.

Subcommands: resonance, evolve, portrait, orbits, predict, detect, stability.
Every option can also come from a ``--config`` file of ``key = value``
lines (``#`` starts a comment); options given on the command line win.
Exit status is 0 on success, 2 on a configuration error and 1 when the
computation itself fails.

Real-valued options accept multiples of pi, e.g. ``--k 0.8pi`` or
``--drift 20pi/13``.
"""

from __future__ import annotations

import argparse
import math
import re
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import csvio
from .detect import detect_scan
from .epsmaps import DeltaSequence, TorusMapSpec, portrait, seed_grid
from .orbits import (
    CatalogEntry,
    acceleration,
    build_catalog,
    build_ray_hessian,
    det_growth,
    find_periodic_orbits,
    growth_slope,
    orbit_to_ray,
    predict_acceleration,
    ray_lyapunov,
    tangent_log_radius,
)
from .quantum import ScanConfig, scan_tau
from .resonance import ResonanceSpec, gauss_coefficients, nearest_resonances

TWO_PI = 2.0 * math.pi

# not part of the echoed configuration: they do not change any result
_NOT_ECHOED = {"config", "out", "workers", "func", "command"}


class ConfigError(Exception):
    pass


# --------------------------------------------------------------------------
# value parsers

_PI_RE = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+-])?\s*\*?\s*pi\s*(?:/\s*(\d+))?\s*$")


def real(text) -> float:
    """Float, or a multiple of pi such as ``0.8pi``, ``-pi`` or ``20pi/13``."""
    if isinstance(text, (int, float)):
        return float(text)
    try:
        return float(text)
    except ValueError:
        pass
    m = _PI_RE.match(str(text))
    if not m:
        raise argparse.ArgumentTypeError(f"not a real number: {text!r}")
    coef = m.group(1)
    if coef in (None, "", "+"):
        c = 1.0
    elif coef == "-":
        c = -1.0
    else:
        c = float(coef)
    den = int(m.group(2)) if m.group(2) else 1
    return c * math.pi / den


def int_list(text) -> list[int]:
    """``"1,2,5"`` or ranges ``"1-5"``."""
    if isinstance(text, list):
        return text
    out = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            continue
        m = re.fullmatch(r"(-?\d+)-(-?\d+)", part)
        if m:
            out.extend(range(int(m.group(1)), int(m.group(2)) + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty integer list")
    return out


def ratio(text) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(\d+)\s*/\s*(\d+)\s*", str(text))
    if not m:
        raise argparse.ArgumentTypeError(f"expected p/q, got {text!r}")
    p, q = int(m.group(1)), int(m.group(2))
    if p < 1 or q < 1 or math.gcd(p, q) != 1:
        raise argparse.ArgumentTypeError(f"{text!r} is not a reduced positive fraction")
    return p, q


def family(text) -> tuple[int, int, int, int, int]:
    """``q:T:p:j:dsum`` labels of an acceleration curve."""
    parts = str(text).split(":")
    if len(parts) != 5:
        raise argparse.ArgumentTypeError(f"expected q:T:p:j:dsum, got {text!r}")
    q, T, p, j, dsum = (int(x) for x in parts)
    if q < 1 or T < 1 or p < 1:
        raise argparse.ArgumentTypeError("q, T and p must be positive")
    return q, T, p, j, dsum


def boolean(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def load_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` file; keys may use ``-`` or ``_``."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{no}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


# --------------------------------------------------------------------------
# shared argument groups


def _add_common(p):
    p.add_argument("--config", help="key = value file; command-line options override it")
    p.add_argument("--out", help="output file or directory")


def _add_eta(p):
    p.add_argument("--eta", type=real, help="gravity parameter (absolute)")
    p.add_argument("--eta-ratio", type=real, help="eta as a multiple of tau, recomputed per tau")


def _add_scan(p):
    p.add_argument("--k", type=real, help="kick strength")
    _add_eta(p)
    p.add_argument("--tau-min", type=real, help="first tau/(2 pi) of the grid")
    p.add_argument("--tau-max", type=real, help="last tau/(2 pi) of the grid")
    p.add_argument("--n-tau", type=int, default=150, help="grid points (inclusive ends)")
    p.add_argument("--kicks", type=int, default=100)
    p.add_argument("--members", type=int, default=100, help="plane waves in the ensemble")
    p.add_argument("--sigma", type=real, default=2.5, help="width of the initial momentum Gaussian")
    p.add_argument("--mean", type=real, default=0.0)
    p.add_argument("--seed", type=int, help="RNG seed (mandatory)")
    p.add_argument("--workers", type=int, default=1)


def _add_map(p):
    p.add_argument("--k-tilde", type=real, help="kick strength of the map, k*epsilon")
    p.add_argument("--drift", type=real, help="tau*eta")
    p.add_argument("--q", type=int, default=1, help="denominator of the offsets 2 pi d/q")
    p.add_argument("--d", default="0", help="offset integers d_0,...,d_{T-1}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qamlab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("resonance", help="resonant quasi-momenta and Gauss coefficients")
    _add_common(p)
    p.add_argument("--p", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--tau-over-2pi", type=real, help="list resonances near this tau instead")
    p.add_argument("--q-max", type=int, default=13)
    p.add_argument("--window", type=real, help="half-width of the search in tau/(2 pi)")
    p.set_defaults(func=cmd_resonance)

    p = sub.add_parser("evolve", help="momentum distributions over a tau grid")
    _add_common(p)
    _add_scan(p)
    p.add_argument("--history", default="none", help="'none', 'all' or tau indices whose per-kick history is written")
    p.add_argument("--family", type=family, action="append", default=[],
                   help="q:T:p:j:dsum acceleration curve for the overlay (repeatable)")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("portrait", help="phase portrait of a period map")
    _add_common(p)
    _add_map(p)
    p.add_argument("--n-seeds", type=int, default=8, help="seeds per torus axis")
    p.add_argument("--iters", type=int, default=500)
    p.set_defaults(func=cmd_portrait)

    p = sub.add_parser("orbits", help="periodic orbits of one map, or a catalog near tau")
    _add_common(p)
    _add_map(p)
    p.add_argument("--periods", type=int_list, default=[1, 2, 3, 4, 5])
    p.add_argument("--j", type=int_list, help="jumping indices (default: all admissible)")
    p.add_argument("--epsilon", type=real, help="detuning, for the predicted acceleration")
    p.add_argument("--tau-over-2pi", type=real, help="catalog mode: kicking period")
    p.add_argument("--k", type=real, help="catalog mode: kick strength")
    _add_eta(p)
    p.add_argument("--q-max", type=int, default=2)
    p.add_argument("--resonance", type=ratio, action="append", default=[], help="p/q (repeatable)")
    p.add_argument("--T-values", dest="T_values", type=int_list, default=[1])
    p.add_argument("--seeds", type=int, default=32, help="Newton seeds per torus axis")
    p.add_argument("--stable-only", type=boolean, nargs="?", const=True, default=False)
    p.set_defaults(func=cmd_orbits)

    p = sub.add_parser("predict", help="acceleration of a (T, p, j, Delta) family")
    _add_common(p)
    p.add_argument("--T", dest="T", type=int, default=1)
    p.add_argument("--p", type=int)
    p.add_argument("--j", type=int)
    p.add_argument("--dsum", type=int, default=0, help="sum of the offsets d_t")
    p.add_argument("--tau-over-2pi", type=real)
    _add_eta(p)
    p.add_argument("--resonance", type=ratio, help="p/q the detuning is measured from")
    p.add_argument("--q-max", type=int, default=2, help="otherwise: nearest resonance with q <= q-max")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("detect", help="scan, track modes and match them to a catalog")
    _add_common(p)
    _add_scan(p)
    p.add_argument("--q-max", type=int, default=2)
    p.add_argument("--resonance", type=ratio, action="append", default=[], help="p/q (repeatable)")
    p.add_argument("--d", help="restrict the catalog to one offset sequence d_0,...,d_{T-1}")
    p.add_argument("--T-values", dest="T_values", type=int_list, default=[1])
    p.add_argument("--periods", type=int_list, default=[1, 2, 3, 4, 5])
    p.add_argument("--catalog-seeds", type=int, default=32)
    p.add_argument("--tolerance", type=real, default=0.15)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("stability", help="determinant growth and Lyapunov exponent along rays")
    _add_common(p)
    _add_map(p)
    p.add_argument("--random-diag", type=boolean, nargs="?", const=True, default=False,
                   help="use a ray with random angles instead of periodic orbits")
    p.add_argument("--n", type=int, default=10000, help="ray length")
    p.add_argument("--period", type=int, default=1)
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_stability)
    return parser


# --------------------------------------------------------------------------
# helpers


def _echo(args) -> dict:
    out = {"command": args.command}
    for key, value in vars(args).items():
        if key in _NOT_ECHOED or value is None:
            continue
        if isinstance(value, list) and value and isinstance(value[0], tuple):
            value = ";".join(":".join(str(x) for x in v) for v in value)
        out[key] = value
    return out


def _out_dir(args) -> Path:
    path = Path(args.out or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise ConfigError("missing required option(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _scan_config(args, history) -> ScanConfig:
    _require(args, "k", "tau_min", "tau_max")
    if args.seed is None:
        raise ConfigError("--seed is required: refusing to run an unseeded ensemble")
    if (args.eta is None) == (args.eta_ratio is None):
        raise ConfigError("give exactly one of --eta or --eta-ratio")
    if args.n_tau < 1 or args.tau_max < args.tau_min:
        raise ConfigError("need n-tau >= 1 and tau-max >= tau-min")
    grid = TWO_PI * np.linspace(args.tau_min, args.tau_max, args.n_tau)
    try:
        return ScanConfig(
            tau_grid=grid, k=args.k, n_kicks=args.kicks, n_members=args.members, seed=args.seed,
            eta=args.eta, eta_ratio=args.eta_ratio, sigma=args.sigma, mean=args.mean,
            history=history, workers=args.workers,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _delta_sequence(args) -> DeltaSequence:
    try:
        return DeltaSequence(args.q, tuple(int_list(args.d)))
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise ConfigError(f"bad offsets --d {args.d!r}: {exc}") from exc


def _map_spec(args) -> TorusMapSpec:
    _require(args, "k_tilde", "drift")
    return TorusMapSpec(args.k_tilde, args.drift, _delta_sequence(args))


def _eta_at(args, tau: float) -> float:
    if (args.eta is None) == (args.eta_ratio is None):
        raise ConfigError("give exactly one of --eta or --eta-ratio")
    return args.eta if args.eta is not None else args.eta_ratio * tau


def _nearest(tau: float, q_max: int) -> ResonanceSpec:
    found = nearest_resonances(tau, q_max, window=Fraction(1, 2))
    if not found:
        raise ConfigError(f"no resonance with q <= {q_max} near tau")
    return found[0][0]


def _family_rows(fams, tau_grid, eta_of, n_kicks):
    for q, T, p, j, dsum in fams:
        for tau in tau_grid:
            p_res = round(tau * q / TWO_PI)
            eps = tau - TWO_PI * p_res / q
            if p_res < 1 or eps == 0:
                continue
            a = acceleration(j, p, T, TWO_PI * dsum / (q * T), tau * eta_of(tau), eps)
            yield tau / TWO_PI, q, T, p, j, dsum, eps, a, a * n_kicks


# --------------------------------------------------------------------------
# commands


def cmd_resonance(args) -> int:
    if args.p is not None and args.q is not None:
        try:
            spec = ResonanceSpec(args.p, args.q)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        rows = []
        print(f"tau = 2 pi * {spec.p}/{spec.q} = {spec.tau_res!r}")
        for beta in spec.beta_r_set:
            G = gauss_coefficients(spec.p, spec.q, beta)
            print(f"beta_r = {beta}")
            print("   s              Re G_s              Im G_s               |G_s|")
            for s, g in enumerate(G.values):
                print(f"{s:4d} {g.real:+.17f} {g.imag:+.17f} {abs(g):.17f}")
                rows.append((beta, s, g.real, g.imag, abs(g)))
        if args.out:
            csvio.write_csv(args.out, ("beta_r", "s", "real", "imag", "modulus"), rows, _echo(args))
        return 0
    if args.tau_over_2pi is not None:
        tau = TWO_PI * args.tau_over_2pi
        try:
            found = nearest_resonances(tau, args.q_max, args.window)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        rows = [(s.p, s.q, s.p / s.q, eps) for s, eps in found]
        print("   p    q   tau_res/2pi              epsilon")
        for p, q, x, eps in rows:
            print(f"{p:4d} {q:4d}   {x:.12f}   {eps:+.17g}")
        if args.out:
            csvio.write_csv(args.out, ("p", "q", "tau_res_over_2pi", "epsilon"), rows, _echo(args))
        return 0
    raise ConfigError("give --p and --q, or --tau-over-2pi")


def _history_policy(text):
    text = str(text).strip().lower()
    if text in ("", "none"):
        return None
    if text == "all":
        return "all"
    try:
        return int_list(text)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise ConfigError(f"bad --history {text!r}") from exc


def cmd_evolve(args) -> int:
    config = _scan_config(args, _history_policy(args.history))
    scan = scan_tau(config)
    out = _out_dir(args)
    echo = _echo(args)
    csvio.write_csv(out / "scan.csv", csvio.SCAN_HEADER, csvio.scan_rows(scan), echo)
    header = ("momentum", *(csvio.fmt(x) for x in scan.tau_grid / TWO_PI))
    csvio.write_csv(out / "heatmap.csv", header, csvio.heatmap_rows(scan), echo)
    for i in sorted(scan.history):
        h_echo = dict(echo, tau_index=i, tau_over_2pi=scan.tau_grid[i] / TWO_PI)
        csvio.write_csv(out / f"history_{i:04d}.csv", csvio.HISTORY_HEADER,
                        csvio.history_rows(scan.history[i], scan.momentum_grid), h_echo)
    if args.family:
        rows = _family_rows(args.family, scan.tau_grid, config.eta_at, config.n_kicks)
        csvio.write_csv(out / "overlay.csv", csvio.OVERLAY_HEADER, rows, echo)
    print(f"wrote {scan.tau_grid.size} tau columns x {scan.momentum_grid.size} momenta to {out}")
    return 0


def cmd_portrait(args) -> int:
    spec = _map_spec(args)
    if args.n_seeds < 1 or args.iters < 1:
        raise ConfigError("need n-seeds >= 1 and iters >= 1")
    data = portrait(spec, seed_grid(args.n_seeds), args.iters)
    path = Path(args.out or "portrait.csv")
    csvio.write_csv(path, csvio.PORTRAIT_HEADER, csvio.portrait_rows(data), _echo(args))
    print(f"wrote {data.shape[0]} orbits x {data.shape[1]} points to {path}")
    return 0


def _map_catalog(args) -> list[CatalogEntry]:
    spec = _map_spec(args)
    eps = args.epsilon
    entries = []
    for period in args.periods:
        if args.j is not None:
            js = args.j
        else:
            # |2 pi j/(p T) - Delta_T - drift| <= |k_tilde| is necessary for an orbit
            centre = (spec.deltas.Delta_T + spec.drift) * period * spec.T / TWO_PI
            half = abs(spec.k_tilde) * period * spec.T / TWO_PI
            js = range(math.ceil(centre - half - 1e-12), math.floor(centre + half + 1e-12) + 1)
        for j in js:
            for orb in find_periodic_orbits(spec, period, j, seeds=args.seeds):
                if orb.parabolic or (args.stable_only and not orb.stable):
                    continue
                a = predict_acceleration(orb, eps).a if eps else math.nan
                entries.append(CatalogEntry(
                    q=spec.q, p_res=0, tau=math.nan, epsilon=eps if eps is not None else math.nan,
                    d=spec.deltas.d, k_tilde=spec.k_tilde, drift=spec.drift, period_p=period,
                    jump_j=j, theta0=float(orb.points[0, 0]), J0=float(orb.points[0, 1]),
                    trace=orb.trace, residue=orb.residue, stable=orb.stable, a_predicted=a,
                ))
    return entries


def cmd_orbits(args) -> int:
    if args.tau_over_2pi is not None:
        _require(args, "k")
        tau = TWO_PI * args.tau_over_2pi
        entries = build_catalog(
            tau, args.k, _eta_at(args, tau), q_max=args.q_max, T_values=args.T_values,
            periods=args.periods, resonances=args.resonance or None, seeds=args.seeds,
            stable_only=args.stable_only,
        )
    else:
        entries = _map_catalog(args)
    for e in entries:
        print(f"q={e.q} d={e.d} p={e.period_p} j={e.jump_j} theta0={e.theta0:.10f} J0={e.J0:.10f} "
              f"trace={e.trace:+.10f} {'stable' if e.stable else 'unstable'} a={e.a_predicted:+.6f}")
    if args.out:
        csvio.write_csv(args.out, csvio.CATALOG_HEADER, csvio.catalog_rows(entries), _echo(args))
    return 0


def cmd_predict(args) -> int:
    _require(args, "p", "j", "tau_over_2pi")
    tau = TWO_PI * args.tau_over_2pi
    res = ResonanceSpec(*args.resonance) if args.resonance else _nearest(tau, args.q_max)
    eps = tau - res.tau_res
    if eps == 0:
        raise ConfigError("tau sits exactly on the resonance: epsilon = 0")
    eta = _eta_at(args, tau)
    a = acceleration(args.j, args.p, args.T, TWO_PI * args.dsum / (res.q * args.T), tau * eta, eps)
    print(f"resonance {res.p}/{res.q}  epsilon = {eps:+.17g}")
    print(f"a = {a:+.17g} ladder units per kick")
    if args.out:
        row = (args.tau_over_2pi, res.q, args.T, args.p, args.j, args.dsum, eps, a, None)
        csvio.write_csv(args.out, csvio.OVERLAY_HEADER, [row], _echo(args))
    return 0


def cmd_detect(args) -> int:
    config = _scan_config(args, "all")
    delta_sequences = None
    if args.d is not None:
        if len(args.resonance) != 1:
            raise ConfigError("--d needs exactly one --resonance to fix q")
        q = args.resonance[0][1]
        try:
            delta_sequences = [DeltaSequence(q, tuple(int_list(args.d)))]
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError(f"bad offsets --d {args.d!r}") from exc
    catalogs = {}

    def catalog(tau):
        if tau not in catalogs:
            catalogs[tau] = build_catalog(
                tau, config.k, config.eta_at(tau), q_max=args.q_max, T_values=args.T_values,
                periods=args.periods, resonances=args.resonance or None,
                delta_sequences=delta_sequences, seeds=args.catalog_seeds, stable_only=True,
            )
        return catalogs[tau]

    scan = scan_tau(config)
    detections = detect_scan(scan, catalog, tolerance=args.tolerance)
    out = _out_dir(args)
    echo = _echo(args)
    csvio.write_csv(out / "scan.csv", csvio.SCAN_HEADER, csvio.scan_rows(scan), echo)
    csvio.write_csv(out / "detections.csv", csvio.DETECTION_HEADER, csvio.detection_rows(detections), echo)
    entries = [e for tau in sorted(catalogs) for e in catalogs[tau]]
    csvio.write_csv(out / "catalog.csv", csvio.CATALOG_HEADER, csvio.catalog_rows(entries), echo)
    matched = sum(d.matched for d in detections)
    print(f"{len(detections)} tracks, {matched} matched to a stable orbit; wrote {out}")
    return 0


def cmd_stability(args) -> int:
    if args.n < 2:
        raise ConfigError("--n must be at least 2")
    rays = []
    if args.random_diag:
        _require(args, "k_tilde")
        if args.seed is None:
            raise ConfigError("--seed is required for random rays")
        rng = np.random.default_rng(args.seed)
        rays.append(("random", rng.uniform(0.0, TWO_PI, args.n), None))
    else:
        spec = _map_spec(args)
        for orb in find_periodic_orbits(spec, args.period, args.j):
            rays.append((orb.kind, orbit_to_ray(orb, args.n), orb))
        if not rays:
            raise RuntimeError("no periodic orbit found for these labels")
    rows = []
    print(" ray  kind         det-growth slope   transfer Lyapunov   tangent log-radius")
    for r, (kind, thetas, orb) in enumerate(rays):
        log_det = det_growth(build_ray_hessian(thetas, args.k_tilde))
        slope = growth_slope(log_det)
        lyap = ray_lyapunov(thetas, args.k_tilde)
        radius = tangent_log_radius(orb) if orb is not None else math.nan
        print(f"{r:4d}  {kind:10s}  {slope:+.10e}  {lyap:+.10e}  {radius:+.10e}")
        rows.extend((r, n + 1, v) for n, v in enumerate(log_det))
    if args.out:
        csvio.write_csv(args.out, ("ray", "n", "log_abs_det"), rows, _echo(args))
    return 0


# --------------------------------------------------------------------------


def _apply_config_file(parser, argv):
    args = parser.parse_args(argv)
    if not args.config:
        return args
    values = load_config_file(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in values.items():
        if key not in known or key in ("config", "help"):
            raise ConfigError(f"unknown key {key!r} for '{args.command}'")
        action = known[key]
        if isinstance(action, argparse._AppendAction):
            value = [action.type(v) for v in re.split(r"[;\s]+", value) if v]
        elif action.type is not None:
            value = action.type(value)
        defaults[key] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config_file(parser, argv)
        return args.func(args)
    except (ConfigError, argparse.ArgumentTypeError) as exc:
        print(f"qamlab: configuration error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        # argparse usage errors
        return int(exc.code) if isinstance(exc.code, int) else 2
    except Exception as exc:  # noqa: BLE001
        print(f"qamlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
