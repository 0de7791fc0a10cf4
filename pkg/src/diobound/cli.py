"""Command-line entry point: ``diobound <group> <command> [options]``.

Primary outputs (JSON on stdout or ``--out``, CSV files) depend only on the
parameters, never on ``--workers``. The resolved configuration is echoed to
stderr as one JSON line and wall-clock timings go to the ``--timing``
sidecar, so the primary outputs stay byte-identical between runs.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import bounds, cutoff, eigen, lattice, numtheory, symbol
from .errors import ArgumentError, ConvergenceError, DioboundError, ResourceError

EXIT_OK, EXIT_ARGS, EXIT_RESOURCE = 0, 2, 3
DEFAULT_SEED = eigen.domain.PERCOLATION_SEED


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(f"{self.prog}: {message}")


# argument helpers -------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ArgumentError(f"expected comma-separated numbers, got '{text}'") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ArgumentError(f"expected comma-separated integers, got '{text}'") from None


def _complex(text: str) -> complex:
    v = _floats(text)
    if len(v) not in (1, 2):
        raise ArgumentError(f"expected 're' or 're,im', got '{text}'")
    return complex(v[0], v[1] if len(v) == 2 else 0.0)


PRESETS = {
    "laplacian": lambda d: symbol.Symbol.laplacian(d),
    "bilaplacian": lambda d: symbol.Symbol.norm_power(d, 2),
    "wave": lambda d: symbol.Symbol.from_terms(
        d, {tuple(2 * (j == 0) for j in range(d)): 1, tuple(2 * (j == 1) for j in range(d)): -1}),
}


def _symbol(args) -> symbol.Symbol:
    if args.symbol:
        return symbol.Symbol.load(args.symbol)
    if args.preset == "wave" and args.dim < 2:
        raise ArgumentError("the wave symbol needs d >= 2")
    return PRESETS[args.preset](args.dim)


def _add_symbol_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--symbol", help="symbol file (JSON or 'alpha_1 .. alpha_d re im' lines)")
    g.add_argument("--preset", choices=sorted(PRESETS), default="laplacian")
    p.add_argument("-d", "--dim", type=int, default=2)


def _pairs_or_oracle(args) -> list:
    if args.pairs:
        mask = eigen.DomainMask.load(args.mask) if args.mask else None
        return eigen.read_pairs(args.pairs, mask)
    if args.oracle:
        mn = _ints(args.oracle)
        if len(mn) % 2:
            raise ArgumentError("--oracle takes m,n[,m,n...]")
        return [eigen.rectangle_oracle(mn[i], mn[i + 1], args.N) for i in range(0, len(mn), 2)]
    raise ArgumentError("give --pairs FILE or --oracle m,n")


def _add_pair_args(p):
    p.add_argument("--pairs", help="eigenpair dump written by 'eigen solve'")
    p.add_argument("--mask", help="mask PGM matching the dump (default: support of the fields)")
    p.add_argument("--oracle", help="closed-form rectangle pairs m,n[,m,n...]")
    p.add_argument("--N", type=int, default=63, help="grid size for --oracle")


def _write_csv(path, rows: list[dict]) -> None:
    if not rows:
        Path(path).write_text("")
        return
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    Path(path).write_text(buf.getvalue())


# commands ------------------------------------------------------------------------------------


def cmd_symbol_check(args):
    sym = _symbol(args)
    cert = symbol.ellipticity_certificate(sym, grid_density=args.grid_density)
    return {"symbol": sym.to_json(), "order": sym.order, "certificate": cert.to_json()}


def cmd_symbol_witness(args):
    sym = _symbol(args)
    cert = symbol.ellipticity_certificate(sym, grid_density=args.grid_density)
    if args.zeta:
        z = np.asarray(_floats(args.zeta))
        z = z / np.linalg.norm(z)
        val = abs(symbol.eval_symbol(symbol.principal_symbol(sym), z))
        cert = symbol.EllipticityCertificate(val, tuple(z), symbol.VERDICT_NON_ELLIPTIC,
                                             cert.grid_density, cert.tolerance, True)
    seq = symbol.witness_sequence(sym, cert, args.count)
    return {"certificate": cert.to_json(), "witness": seq.to_json()}


def cmd_lattice_count_ball(args):
    return {"d": args.dim, "R": args.R, "count": lattice.count_ball(args.dim, args.R, args.workers)}


def cmd_lattice_fdelta(args):
    sym = _symbol(args)
    lam = _complex(args.lam)
    keep = bool(args.solutions_csv)
    if args.cap is None:
        rep = lattice.count_until_complete(sym, lam, args.delta, keep, workers=args.workers)
    else:
        rep = lattice.count_diophantine(sym, lam, args.delta, args.cap, keep, workers=args.workers)
    out = rep.to_json()
    out.pop("solutions", None)
    if keep:
        _write_csv(args.solutions_csv, [{f"xi{i + 1}": v for i, v in enumerate(s)} for s in rep.solutions])
    return out


def cmd_lattice_predict(args):
    return lattice.annulus_prediction(args.dim, args.m, args.lam, args.delta).to_json()


def cmd_nt_rdn(args):
    if args.n is not None:
        t = numtheory.rdn_table(args.dim, args.n)
        return {"d": args.dim, "n": args.n, "count": t[args.n]}
    t = numtheory.rdn_table(args.dim, args.N)
    rows = [{"n": n, "exact": t[n]} for n in range(args.N + 1)]
    if args.csv:
        _write_csv(args.csv, rows)
    return {"d": args.dim, "N": args.N, "counts": [r["exact"] for r in rows]}


def cmd_nt_zeta(args):
    return numtheory.zeta_d_partial(args.dim, args.s, args.N).to_json()


def cmd_nt_hardy(args):
    ns = [args.n] if args.n is not None else list(range(1, args.N + 1))
    table = numtheory.rdn_table(args.dim, max(ns))
    approx = numtheory.hardy_rdn_many(args.dim, ns, args.K)
    rows = [{"n": n, "exact": table[n], "hardy": float(h),
             "rel_err": abs(float(h) - table[n]) / table[n] if table[n] else float("nan")}
            for n, h in zip(ns, approx)]
    if args.csv:
        _write_csv(args.csv, rows)
    if args.n is not None:
        return {"d": args.dim, "K": args.K, **rows[0],
                "series": numtheory.singular_series(args.dim, args.n, args.K).to_json()}
    return {"d": args.dim, "K": args.K, "max_rel_err": max(r["rel_err"] for r in rows), "rows": rows}


def cmd_eigen_make_mask(args):
    kw = {}
    if args.kind == "koch":
        kw["level"] = args.level
    if args.kind == "percolation":
        kw["seed"] = args.seed
    mask = eigen.make_mask(args.kind, args.N, **kw)
    mask.save(args.out)
    return {"kind": args.kind, "N": args.N, "h": mask.h, "origin": list(mask.origin),
            "n_inside": mask.n_inside, "path": str(args.out)}


def cmd_eigen_solve(args):
    mask = eigen.DomainMask.load(args.mask)
    spec = eigen.ProblemSpec(mask, _complex(args.V) if args.V else 0.0)
    window = None
    if args.window:
        w = _floats(args.window)
        window = w[0] if len(w) == 1 else tuple(w)
    pairs = eigen.solve(spec, args.k, window)
    if args.out:
        eigen.write_pairs(args.out, pairs)
    return {"k": len(pairs), "lambda": [[complex(p.lam).real, complex(p.lam).imag] for p in pairs],
            "residual": [p.residual for p in pairs], "out": args.out}


def _cutoff(args, pair) -> cutoff.Cutoff:
    x0 = _floats(args.x0) if args.x0 else [o + pair.mask.h * (n - 1) / 2
                                           for o, n in zip(pair.mask.origin, pair.mask.shape)]
    return cutoff.Cutoff(tuple(x0), args.r, args.profile)


def cmd_cutoff_verify(args):
    sym = _symbol(args)
    alpha = None if args.alpha == "auto" else int(args.alpha)
    reports = []
    for pair in _pairs_or_oracle(args):
        field = cutoff.periodize_pair(pair, _cutoff(args, pair))
        rep = cutoff.coefficient_bound_report(field, sym, pair.lam, args.delta, alpha)
        row = rep.to_json()
        row["parseval_error"] = field.parseval_error()
        reports.append(row)
    return {"reports": reports}


def cmd_cutoff_deriv(args):
    gamma = tuple(_ints(args.gamma))
    out = []
    for pair in _pairs_or_oracle(args):
        field = cutoff.periodize_pair(pair, _cutoff(args, pair))
        row = cutoff.derivative_sup_bound(field, gamma).to_json()
        row["lambda"] = float(np.real(pair.lam))
        out.append(row)
    return {"bounds": out}


def cmd_bounds_ratios(args):
    gamma = tuple(_ints(args.gamma)) if args.gamma else None
    pts = [bounds.interior_ratio(p, args.r, gamma) for p in _pairs_or_oracle(args)]
    rows = [p.to_row() for p in pts]
    if args.csv:
        _write_csv(args.csv, rows)
    return {"points": rows}


def cmd_bounds_fit(args):
    with open(args.csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    x = [float(r[args.x]) for r in rows]
    y = [float(r[args.y]) for r in rows]
    fit = bounds.fit_loglog(x, y, args.min_decades)
    return fit.to_json()


def cmd_bounds_fdelta_scaling(args):
    sym = _symbol(args)
    res = bounds.fdelta_scaling(sym, args.delta, _floats(args.lams), args.workers, args.min_decades)
    if args.csv:
        _write_csv(args.csv, [p.to_row() for p in res.points])
    return res.to_json()


def cmd_selftest(args):
    from .selftest import run_selftest
    results = run_selftest()
    failed = [r for r in results if not r["pass"]]
    return {"cases": results, "passed": len(results) - len(failed), "failed": len(failed)}


# parser ----------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--workers", type=int, default=1, help="process count (results do not depend on it)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="recorded seed for random inputs")
    common.add_argument("--timing", help="sidecar JSON file for elapsed_ms")

    parser = _Parser(prog="diobound", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", metavar="group")

    def group(name, help_):
        g = groups.add_parser(name, help=help_)
        return g.add_subparsers(dest="command", metavar="command")

    def command(sub, name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    s = group("symbol", "ellipticity certificates and witness sequences")
    p = command(s, "check", cmd_symbol_check, "certify ellipticity")
    _add_symbol_args(p)
    p.add_argument("--grid-density", type=int, default=32)
    p = command(s, "witness", cmd_symbol_witness, "lattice witness sequence of a non-elliptic symbol")
    _add_symbol_args(p)
    p.add_argument("--grid-density", type=int, default=32)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--zeta", help="use this zero direction of the principal symbol")

    s = group("lattice", "lattice point counts")
    p = command(s, "count-ball", cmd_lattice_count_ball, "#{xi : |xi| <= R}")
    p.add_argument("-d", "--dim", type=int, required=True)
    p.add_argument("-R", type=float, required=True)
    p = command(s, "fdelta", cmd_lattice_fdelta, "F_delta(lambda, P)")
    _add_symbol_args(p)
    p.add_argument("--lam", required=True, help="re or re,im")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--cap", type=float, help="enumeration radius (default: just past R*)")
    p.add_argument("--solutions-csv")
    p = command(s, "predict", cmd_lattice_predict, "continuum annulus prediction")
    p.add_argument("-d", "--dim", type=int, required=True)
    p.add_argument("-m", type=int, default=2)
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)

    s = group("nt", "sums of squares")
    p = command(s, "rdn", cmd_nt_rdn, "r_d(n)")
    p.add_argument("-d", "--dim", type=int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("-n", type=int)
    g.add_argument("--N", type=int)
    p.add_argument("--csv")
    p = command(s, "zeta", cmd_nt_zeta, "partial sum of zeta_d(s) with tail bound")
    p.add_argument("-d", "--dim", type=int, required=True)
    p.add_argument("-s", type=float, required=True)
    p.add_argument("--N", type=int, default=10000)
    p = command(s, "hardy", cmd_nt_hardy, "Hardy's formula against exact r_d(n)")
    p.add_argument("-d", "--dim", type=int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("-n", type=int)
    g.add_argument("--N", type=int)
    p.add_argument("-K", type=int, default=numtheory.DEFAULT_K)
    p.add_argument("--csv")

    s = group("eigen", "Dirichlet eigenpairs on raster masks")
    p = command(s, "make-mask", cmd_eigen_make_mask, "write a built-in mask as PGM + JSON")
    p.add_argument("--kind", choices=sorted(eigen.MASK_GENERATORS), required=True)
    p.add_argument("--N", type=int, default=256)
    p.add_argument("--level", type=int, default=3)
    p = command(s, "solve", cmd_eigen_solve, "eigenpairs by shift-invert")
    p.add_argument("--mask", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--window", help="shift, or interval a,b")
    p.add_argument("--V", help="constant potential re[,im]")

    s = group("cutoff", "cutoff, periodization and Fourier checks")
    p = command(s, "verify", cmd_cutoff_verify, "Part I / Part II split report per pair")
    _add_pair_args(p)
    _add_symbol_args(p)
    p.add_argument("--x0", help="ball centre a,b (default: raster centre)")
    p.add_argument("--r", type=float, default=0.4)
    p.add_argument("--delta", type=float, default=0.4)
    p.add_argument("--alpha", default="auto")
    p.add_argument("--profile", choices=cutoff.PROFILES, default="plain")
    p = command(s, "deriv", cmd_cutoff_deriv, "Fourier bound for sup |D^gamma Psi|")
    _add_pair_args(p)
    p.add_argument("--x0")
    p.add_argument("--r", type=float, default=0.4)
    p.add_argument("--gamma", default="1,0")
    p.add_argument("--profile", choices=cutoff.PROFILES, default="plain")

    s = group("bounds", "sup-norm ratios and exponent fits")
    p = command(s, "ratios", cmd_bounds_ratios, "interior sup / L2 ratios")
    _add_pair_args(p)
    p.add_argument("--r", type=float, default=0.2)
    p.add_argument("--gamma")
    p.add_argument("--csv")
    p = command(s, "fit", cmd_bounds_fit, "log-log least squares on a CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--x", default="lambda")
    p.add_argument("--y", default="ratio")
    p.add_argument("--min-decades", type=float, default=bounds.MIN_DECADES)
    p = command(s, "fdelta-scaling", cmd_bounds_fdelta_scaling, "slope of log F_delta vs log lambda")
    _add_symbol_args(p)
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--lams", default="1e3,3162.2776601683795,1e4,31622.776601683792,1e5")
    p.add_argument("--min-decades", type=float, default=bounds.MIN_DECADES)
    p.add_argument("--csv")

    p = groups.add_parser("selftest", parents=[common], help="run the built-in trivial cases")
    p.set_defaults(func=cmd_selftest)
    return parser


_ARTIFACT_COMMANDS = (cmd_eigen_make_mask, cmd_eigen_solve)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, allow_nan=True) + "\n"


def run(argv=None, stdout=None, stderr=None) -> int:
    """Parse ``argv``, run the command and return its exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            raise ArgumentError("missing command\n" + parser.format_usage())
        if getattr(args, "workers", 1) < 1:
            raise ArgumentError("--workers must be >= 1")
        if args.func is cmd_eigen_make_mask and not args.out:
            raise ArgumentError("eigen make-mask needs --out PATH.pgm")
        config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "timing")}
        stderr.write("config " + _dump(config))
        t0 = time.perf_counter()
        result = args.func(args)
        elapsed = (time.perf_counter() - t0) * 1e3
    except ArgumentError as exc:
        stderr.write(f"error: {exc}\n")
        if "missing command" not in str(exc) and "invalid choice" not in str(exc):
            return EXIT_ARGS
        stderr.write(parser.format_usage())
        return EXIT_ARGS
    except (ResourceError, ConvergenceError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_RESOURCE
    except DioboundError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_ARGS
    text = _dump(result)
    # for these commands --out names the artifact (mask or pair dump); the report goes to stdout
    if args.out and args.func not in _ARTIFACT_COMMANDS:
        Path(args.out).write_text(text)
    else:
        stdout.write(text)
    if args.timing:
        Path(args.timing).write_text(_dump({"elapsed_ms": elapsed}))
    if args.func is cmd_selftest and result["failed"]:
        return 1
    return EXIT_OK


def main() -> None:
    sys.exit(run())
