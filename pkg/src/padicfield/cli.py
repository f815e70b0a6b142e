"""Command-line runner.

Every subcommand reads one section of an INI file (keys missing from the
section fall back to ``[DEFAULT]``), validates all of its keys before doing
any work, writes CSV files for arrays and prints one JSON object.

Exit codes: 0 success, 1 mathematical rejection, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import ast
import configparser
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from .lattice import BilinearForm, GridFn, Lattice, LatticeMismatch, write_csv
from .moments import schwinger_analytic, schwinger_mc, set_partitions, sheet_covariance, sheet_paths
from .noise import (
    LevyTriple,
    analytic_char_field,
    empirical_char_field,
    psi_eval,
    sample_field,
    sample_increments,
    sample_noise,
)
from .operators import (
    EllipticPolynomial,
    NotCertified,
    PolynomialSyntaxError,
    apply_symbol,
    certify_elliptic,
    decay_fit,
    green_series_lattice,
    green_spectral,
    klein_gordon_solve,
    klein_gordon_symbol,
)
from .padic import is_prime
from .symmetry import EuclideanElement, invariance_report

EXIT_OK, EXIT_REJECTED, EXIT_USAGE = 0, 1, 2


class ConfigError(Exception):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"config key '{key}': {message}")


class Rejected(Exception):
    """A mathematical rejection; carries the JSON summary to print."""

    def __init__(self, summary):
        self.summary = summary
        super().__init__(summary.get("reason", "rejected"))


_MISSING = object()


class Config:
    """Typed access to one config section with fail-fast validation."""

    def __init__(self, section: dict, overrides: dict):
        self.raw = dict(section)
        self.raw.update({k: str(v) for k, v in overrides.items() if v is not None})

    def _value(self, key):
        text = self.raw[key]
        try:
            return ast.literal_eval(text)
        except (ValueError, SyntaxError):
            return text.strip()

    def get(self, key, kind=None, default=_MISSING, check=None, message="invalid value"):
        if key not in self.raw:
            if default is _MISSING:
                raise ConfigError(key, "missing")
            return default
        value = self._value(key)
        if kind is not None:
            try:
                if kind is int and (isinstance(value, bool) or float(value) != int(value)):
                    raise ValueError
                value = kind(value)
            except (TypeError, ValueError):
                raise ConfigError(key, f"expected {kind.__name__}, got {self.raw[key]!r}") from None
        if check is not None and not check(value):
            raise ConfigError(key, f"{message} ({self.raw[key]!r})")
        return value

    def text(self, key, default=_MISSING):
        if key not in self.raw:
            if default is _MISSING:
                raise ConfigError(key, "missing")
            return default
        return self.raw[key].strip().strip('"').strip("'")


# -- shared config pieces ----------------------------------------------------------

def _prime(cfg):
    return cfg.get("prime", int, check=lambda p: p >= 2 and is_prime(p), message="not a prime")


def _lattice(cfg):
    p = _prime(cfg)
    N = cfg.get("dimension", int, check=lambda n: n >= 1, message="must be >= 1")
    j = cfg.get("j", int, check=lambda v: v >= 0, message="must be >= 0")
    k = cfg.get("k", int, check=lambda v: v >= 0, message="must be >= 0")
    if p ** (j + k) > 3_037_000_499:
        raise ConfigError("j", "p^(j+k) exceeds the supported lattice side")
    if (p ** (j + k)) ** N > 50_000_000:
        raise ConfigError("k", "lattice has more than 5e7 points")
    return Lattice(p, N, j, k)


def _poly(cfg, p, N=None):
    try:
        poly = EllipticPolynomial.parse(cfg.text("poly"), p, N)
    except (PolynomialSyntaxError, ValueError) as exc:
        raise ConfigError("poly", str(exc)) from None
    return poly


def _bilinear(cfg, p, N):
    if "bilinear" not in cfg.raw:
        return BilinearForm.standard(p, N)
    mat = cfg.get("bilinear", check=lambda m: isinstance(m, (list, tuple)), message="expected a matrix")
    try:
        B = BilinearForm(tuple(tuple(row) for row in mat), p)
    except (ValueError, TypeError) as exc:
        raise ConfigError("bilinear", str(exc)) from None
    if B.N != N:
        raise ConfigError("bilinear", f"matrix is {B.N}x{B.N}, dimension is {N}")
    return B


def _levy(cfg):
    a = cfg.get("levy.a", float, default=0.0)
    sigma = cfg.get("levy.sigma", float, default=0.0, check=lambda s: s >= 0, message="must be >= 0")
    atoms = cfg.get("levy.atoms", default=[], check=lambda v: isinstance(v, (list, tuple)),
                    message="expected [(s, lambda), ...]")
    try:
        return LevyTriple(a, sigma, tuple(tuple(t) for t in atoms))
    except (ValueError, TypeError) as exc:
        raise ConfigError("levy.atoms", str(exc)) from None


def _positive(cfg, key, default=_MISSING, kind=float):
    return cfg.get(key, kind, default=default, check=lambda v: v > 0, message="must be > 0")


def _nsamples(cfg, default=_MISSING):
    return cfg.get("nsamples", int, default=default, check=lambda n: n >= 1, message="must be >= 1")


_TEST_FN = re.compile(r"(omega|delta|ball|sphere)(?:\(\s*(-?\d+)\s*(?:,\s*\[([-\d,\s]*)\])?\s*\))?")


def _test_function(lat: Lattice, spec: str, key: str) -> GridFn:
    """``omega``, ``delta``, ``ball(e)``, ``ball(e, [m1, ..])`` or ``sphere(e)``."""
    m = _TEST_FN.fullmatch(str(spec).replace(" ", ""))
    if not m:
        raise ConfigError(key, f"unknown test function {spec!r}")
    name, e, center = m.groups()
    try:
        if name == "omega":
            return lat.omega()
        if name == "delta":
            return lat.delta()
        if e is None:
            raise ConfigError(key, f"{name} needs a radius exponent")
        if name == "sphere":
            return lat.sphere(int(e))
        c = [int(v) for v in center.split(",") if v] if center else None
        if c is not None and len(c) != lat.N:
            raise ConfigError(key, "ball center has the wrong dimension")
        return lat.ball(int(e), c)
    except LatticeMismatch as exc:
        raise ConfigError(key, str(exc)) from None


def _certify(poly, cfg, alpha=1.0):
    L = cfg.get("level", int, default=2, check=lambda v: 1 <= v <= 8, message="must be in [1, 8]")
    try:
        return certify_elliptic(poly, L, alpha)
    except NotCertified as exc:
        raise Rejected({"status": "rejected", "poly": poly.literal(), "prime": poly.p, "level": exc.level,
                        "witness": list(exc.witness), "witness_mod_p": list(exc.witness_mod_p),
                        "reason": str(exc)}) from None


def _kg_setup(cfg):
    lat = _lattice(cfg)
    poly = _poly(cfg, lat.p, lat.N)
    if poly.N != lat.N:
        raise ConfigError("poly", f"polynomial has {poly.N} variables, dimension is {lat.N}")
    alpha = _positive(cfg, "alpha")
    m = _positive(cfg, "mass")
    B = _bilinear(cfg, lat.p, lat.N)
    if not B.lattice_compatible:
        raise ConfigError("bilinear", "p^-beta B must be unimodular for lattice Fourier transforms")
    return lat, poly, alpha, m, B


def _write_rows(path: Path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(v) for v in r) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def _clean(obj):
    """Make numpy scalars JSON serialisable."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


# -- subcommands ------------------------------------------------------------------

def cmd_ellipticity(cfg, out: Path, args):
    p = _prime(cfg)
    N = cfg.get("dimension", int, default=None)
    poly = _poly(cfg, p, N)
    alpha = _positive(cfg, "alpha", 1.0)
    cert = _certify(poly, cfg, alpha)
    return {"status": "accepted", **cert.summary()}


def cmd_green(cfg, out: Path, args):
    lat, poly, alpha, m, B = _kg_setup(cfg)
    tol = _positive(cfg, "tol", 1e-8)
    cert = _certify(poly, cfg, alpha)
    G = green_spectral(lat, poly, alpha, m, B, cert)
    write_csv(G.values, out / "green.csv", {"m": m, "alpha": alpha, "poly": poly.literal()})
    series, tails = green_series_lattice(lat, poly, alpha, m, B, cert, tol)
    dev = np.abs(series[1:] - G.real[1:])
    rows = []
    for regime in ("near_zero", "infinity"):
        try:
            fit = decay_fit(G, regime)
            rows.append((regime, fit.slope, fit.expected, fit.rel_error, fit.continuous, list(fit.shells)))
        except ValueError as exc:
            rows.append((regime, float("nan"), float("nan"), float("nan"), "", str(exc).replace(",", ";")))
    _write_rows(out / "decay.csv", ["regime", "slope", "expected", "rel_error", "continuous", "shells"], rows)
    return {
        "status": "ok",
        "points": lat.npoints,
        "max_imag": G.max_imag(),
        "min_off_origin": float(G.off_origin().min()),
        "series_max_abs_dev": float(dev.max()),
        "series_max_rel_dev": float(np.max(dev / np.abs(G.real[1:]))),
        "series_within_tail": bool(np.all(dev <= tails[1:] + 1e-12)),
        "decay": {r[0]: {"slope": r[1], "expected": r[2]} for r in rows},
    }


def cmd_solve(cfg, out: Path, args):
    lat, poly, alpha, m, B = _kg_setup(cfg)
    g = _test_function(lat, cfg.text("source", "omega"), "source")
    cert = _certify(poly, cfg, alpha)
    u = klein_gordon_solve(g, poly, alpha, m, B, cert)
    back = apply_symbol(u, klein_gordon_symbol(poly, alpha, m, cert), B)
    write_csv(u, out / "solution.csv", {"m": m, "alpha": alpha, "poly": poly.literal()})
    resid = math.sqrt(float(np.sum(np.abs(back.values - g.values) ** 2)) * lat.cell_volume)
    return {"status": "ok", "u0": float(u.values[0].real), "residual_l2": resid}


def _char_rows(levy, v, nsamples, seed, threads):
    X = sample_increments(levy, v, nsamples, seed, threads=threads)
    rows = []
    for t in range(-3, 4):
        emp = complex(np.mean(np.exp(1j * t * X)))
        ana = complex(np.exp(v * psi_eval(float(t), levy)))
        rows.append((t, emp.real, emp.imag, ana.real, ana.imag, abs(emp - ana)))
    return rows


def cmd_sample(cfg, out: Path, args):
    lat, poly, alpha, m, B = _kg_setup(cfg)
    levy = _levy(cfg)
    seed = cfg.get("seed", int, default=0, check=lambda s: s >= 0, message="must be >= 0")
    nsamples = _nsamples(cfg, 100_000)
    cert = _certify(poly, cfg, alpha)
    G = green_spectral(lat, poly, alpha, m, B, cert)
    noise = sample_noise(lat, levy, seed, threads=args.threads)
    field = sample_field(noise, G, B)
    write_csv(GridFn(lat, noise.increments), out / "noise.csv", {"seed": seed})
    write_csv(field.as_gridfn(), out / "field.csv", {"seed": seed})
    v = cfg.get("cell_volume", float, default=1.0, check=lambda x: x > 0, message="must be > 0")
    rows = _char_rows(levy, v, nsamples, seed, args.threads)
    worst = max(r[-1] for r in rows)
    _write_rows(out / "char.csv", ["t", "emp_re", "emp_im", "psi_re", "psi_im", "abs_diff"], rows)
    return {"status": "ok", "seed": seed, "nsamples": nsamples, "max_char_diff": worst,
            "char_pass": bool(worst < 5e-2)}


def cmd_char_check(cfg, out: Path, args):
    lat, poly, alpha, m, B = _kg_setup(cfg)
    levy = _levy(cfg)
    seed = cfg.get("seed", int, default=0, check=lambda s: s >= 0, message="must be >= 0")
    nsamples = _nsamples(cfg, 100_000)
    specs = cfg.get("tests", default=["omega"], check=lambda v: isinstance(v, (list, tuple)),
                    message="expected a list of test functions")
    fs = [_test_function(lat, s, "tests") for s in specs]
    cert = _certify(poly, cfg, alpha)
    G = green_spectral(lat, poly, alpha, m, B, cert)
    rows = []
    for spec, f in zip(specs, fs):
        emp = empirical_char_field(f, levy, G, nsamples, seed)
        ana = analytic_char_field(f, levy, G)
        rows.append((spec.replace(",", ";"), emp.real, emp.imag, ana.real, ana.imag, abs(emp - ana)))
    _write_rows(out / "char_field.csv", ["test", "emp_re", "emp_im", "ana_re", "ana_im", "abs_diff"], rows)
    worst = max(r[-1] for r in rows)
    return {"status": "ok", "nsamples": nsamples, "max_abs_diff": worst, "pass": bool(worst < 5e-2)}


def cmd_schwinger(cfg, out: Path, args):
    lat, poly, alpha, m, B = _kg_setup(cfg)
    levy = _levy(cfg)
    seed = cfg.get("seed", int, default=0, check=lambda s: s >= 0, message="must be >= 0")
    nsamples = cfg.get("nsamples", int, default=100_000, check=lambda n: n >= 1000, message="must be >= 1000")
    mmax = cfg.get("mmax", int, default=4, check=lambda v: 1 <= v <= 8, message="must be in [1, 8]")
    specs = cfg.get("tests", default=["omega"], check=lambda v: isinstance(v, (list, tuple)) and len(v) > 0,
                    message="expected a non-empty list of test functions")
    fs = [_test_function(lat, s, "tests") for s in specs]
    cert = _certify(poly, cfg, alpha)
    G = green_spectral(lat, poly, alpha, m, B, cert)
    rows = []
    for order in range(1, mmax + 1):
        gs = [fs[i % len(fs)] for i in range(order)]
        ana = schwinger_analytic(gs, levy, G, B)
        est, se = schwinger_mc(gs, levy, G, B, nsamples, seed)
        rows.append((order, len(set_partitions(order)), ana, est, se))
    _write_rows(out / "schwinger.csv", ["m", "partition_count", "analytic", "mc_estimate", "stderr"], rows)
    ok = all(abs(r[2] - r[3]) <= 3 * r[4] for r in rows)
    return {"status": "ok", "nsamples": nsamples, "within_3_stderr": ok}


def cmd_sheet(cfg, out: Path, args):
    p = _prime(cfg)
    N = cfg.get("dimension", int, default=1, check=lambda n: n >= 1, message="must be >= 1")
    emin = cfg.get("emin", int, default=-2)
    emax = cfg.get("emax", int, default=2, check=lambda e: e >= emin, message="must be >= emin")
    sigma = _positive(cfg, "sigma", 1.0)
    seed = cfg.get("seed", int, default=0, check=lambda s: s >= 0, message="must be >= 0")
    nsamples = _nsamples(cfg, 100_000)
    radii = [float(p) ** e for e in range(emin, emax + 1)]
    W = sheet_paths(radii, N, sigma, nsamples, seed)
    emp = W.T @ W / nsamples
    exact = sheet_covariance(radii, N, sigma)
    rel = np.abs(emp / exact - 1.0)
    rows = [(radii[a], radii[b], float(emp[a, b]), float(exact[a, b]), float(rel[a, b]))
            for a in range(len(radii)) for b in range(len(radii))]
    _write_rows(out / "sheet_covariance.csv", ["t", "s", "empirical", "expected", "rel_error"], rows)
    _write_rows(out / "sheet_path.csv", ["radius", "value"], [(r, float(w)) for r, w in zip(radii, W[0])])
    corr = float("nan")
    if len(radii) >= 4:
        d1, d2 = W[:, 1] - W[:, 0], W[:, -1] - W[:, -2]
        corr = float(np.corrcoef(d1, d2)[0, 1])
    return {"status": "ok", "max_rel_error": float(rel.max()), "disjoint_increment_corr": corr}


def _elements(cfg, p, N):
    if "elements" in cfg.raw:
        items = cfg.get("elements", check=lambda v: isinstance(v, (list, tuple)), message="expected a list")
    elif "g" in cfg.raw:
        items = [(cfg.get("g"), cfg.get("a", default=None))]
    else:
        items = [(tuple(tuple(int(i == c) for c in range(N)) for i in range(N)), None)]
    out = []
    for item in items:
        g, a = (item["g"], item.get("a")) if isinstance(item, dict) else (item[0], item[1] if len(item) > 1 else None)
        try:
            e = EuclideanElement(tuple(tuple(r) for r in g), tuple(a) if a is not None else None, p)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise ConfigError("elements", str(exc)) from None
        if e.N != N:
            raise ConfigError("elements", "element dimension differs from lattice dimension")
        out.append(e)
    return out


def cmd_symmetry(cfg, out: Path, args):
    lat, poly, alpha, m, B = _kg_setup(cfg)
    els = _elements(cfg, lat.p, lat.N)
    cert = _certify(poly, cfg, alpha)
    G = green_spectral(lat, poly, alpha, m, B, cert)
    rows = invariance_report(G, els, B)
    table = []
    for r in rows:
        g = ";".join(" ".join(str(v) for v in row) for row in r.element.g)
        a = " ".join(str(v) for v in r.element.a)
        table.append((g, a, r.preserves_quadratic, r.preserves_polynomial,
                      "" if r.green_deviation is None else r.green_deviation,
                      "" if r.schwinger_deviation is None else r.schwinger_deviation, r.reason))
    _write_rows(out / "symmetry.csv",
                ["g", "a", "preserves_quadratic", "preserves_polynomial", "green_deviation",
                 "schwinger_deviation", "reason"], table)
    summary = {"status": "ok", "elements": len(rows), "passed": sum(r.passed for r in rows)}
    if any(not r.passed for r in rows):
        raise Rejected({**summary, "status": "rejected", "reason": "some elements are not symmetries"})
    return summary


COMMANDS = {
    "ellipticity": cmd_ellipticity,
    "green": cmd_green,
    "solve": cmd_solve,
    "sample": cmd_sample,
    "char-check": cmd_char_check,
    "schwinger": cmd_schwinger,
    "sheet": cmd_sheet,
    "symmetry": cmd_symmetry,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="padicfield", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="INI file; the section named after the command is used")
    ap.add_argument("--out", default=".", help="directory for CSV/JSON outputs")
    ap.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    ap.add_argument("--threads", type=int, default=1, help="cap on worker threads (results do not depend on it)")
    return ap


def load_section(path, command) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    with open(path) as fh:
        parser.read_file(fh)
    if parser.has_section(command):
        return dict(parser.items(command))
    return dict(parser.defaults())


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.threads < 1:
        print(json.dumps({"status": "error", "reason": "--threads must be >= 1"}), file=sys.stderr)
        return EXIT_USAGE
    try:
        section = load_section(args.config, args.command)
    except (OSError, configparser.Error) as exc:
        print(json.dumps({"status": "error", "reason": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    cfg = Config(section, {"seed": args.seed})
    try:
        out.mkdir(parents=True, exist_ok=True)
        summary = COMMANDS[args.command](cfg, out, args)
        code = EXIT_OK
    except ConfigError as exc:
        summary = {"status": "error", "key": exc.key, "reason": str(exc)}
        code = EXIT_USAGE
    except Rejected as exc:
        summary = exc.summary
        code = EXIT_REJECTED
    text = json.dumps(_clean(summary), sort_keys=True)
    (out / f"{args.command}.json").write_text(text + "\n")
    print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
