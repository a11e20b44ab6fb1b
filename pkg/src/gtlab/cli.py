"""Batch command-line front end for gtlab.

One process, subcommand dispatch.  Every run resolves its full configuration
up front, embeds it (plus a schema version) in the output, and writes files
atomically (temp file + rename).  Identical config and seed give
byte-identical artifacts in the default single-threaded mode.

Exit codes: 0 success, 1 failed verification, then one code per error
class -- domain 2, capacity 3, precision 4, convergence 5, inconclusive 6.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import acceptance
from . import bead_exact as be
from . import free_compression as fc
from . import gt_engine as ge
from . import measure_core as mc
from . import variational as va
from .surface_tension import sigma, sigma_grad, sigma_gt
from .errors import (
    CapacityError,
    ConvergenceError,
    DomainError,
    InconclusiveError,
    PrecisionError,
)

SCHEMA_VERSION = "gtlab-output/1"

EXIT_CODES = (
    (DomainError, 2),
    (CapacityError, 3),
    (PrecisionError, 4),
    (ConvergenceError, 5),
    (InconclusiveError, 6),
)


# ---------------------------------------------------------------------------
# output plumbing


def _atomic_write_text(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".gtlab-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(payload: dict, config: dict, out: str | None, fmt: str) -> None:
    """Write the result with its resolved config and schema version."""
    doc = {"schema": SCHEMA_VERSION, "config": config, "result": payload}
    if fmt == "json":
        text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    else:  # csv: header comments carry the config, then rows
        lines = [f"# schema: {SCHEMA_VERSION}",
                 f"# config: {json.dumps(config, sort_keys=True)}"]
        rows = payload.get("rows")
        if rows is None:
            # flatten scalars into a two-column csv
            lines.append("key,value")
            for k, v in sorted(payload.items()):
                lines.append(f"{k},{v!r}")
        else:
            for k, v in sorted(payload.items()):
                if k not in ("rows", "columns"):
                    lines.append(f"# {k}: {v!r}")
            lines.append(",".join(payload["columns"]))
            for row in rows:
                lines.append(",".join(repr(x) for x in row))
        text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        _atomic_write_text(out, text)


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("GTLAB_SEED")
    if env is not None:
        return int(env)
    raise DomainError("no --seed given and GTLAB_SEED is not set")


def _measure(spec: str) -> mc.GridMeasure:
    """Parse a measure spec: semicircle[:variance], uniform:lo,hi,
    arcsine[:lo,hi is fixed builtin], or a builtin name."""
    name, _, rest = spec.partition(":")
    if name == "semicircle":
        return mc.semicircle(float(rest)) if rest else mc.semicircle()
    if name == "uniform":
        lo, hi = (float(x) for x in rest.split(",")) if rest else (0.0, 1.0)
        return mc.uniform(lo, hi)
    if name == "arcsine":
        return mc.arcsine()
    return mc.builtin(spec)


def _spectrum(spec: str, n: int) -> np.ndarray:
    """Bottom-row spectrum: comma-separated reals, or a measure name whose
    quantiles at (i + 1/2)/n are used."""
    if "," in spec:
        s = np.array([float(x) for x in spec.split(",")])
        if n and s.size != n:
            raise DomainError(f"--bottom has {s.size} entries, --n is {n}")
        return s
    Q = mc.quantile_of(_measure(spec))
    return np.array([Q((i + 0.5) / n) for i in range(n)])


def _config_of(args, names) -> dict:
    cfg = {"command": args.command}
    for name in names:
        cfg[name] = getattr(args, name)
    return cfg


# ---------------------------------------------------------------------------
# subcommand handlers (each returns the payload dict)


def _cmd_sigma(args):
    u = (args.u1, args.u2)
    g = sigma_grad(u)
    return {"sigma": sigma(u), "sigma_gt": sigma_gt(u),
            "grad_u1": g.u1, "grad_u2": g.u2}


def _cmd_bead_volume(args):
    ev = be.exact_volume(args.n, args.k, args.l)
    payload = {"n": args.n, "k": args.k, "l": args.l,
               "exact": float(ev.value), "error_bound": float(ev.error_bound)}
    if args.mc_trials:
        est, se = be.mc_volume(args.n, args.k, args.l, trials=args.mc_trials,
                               rng_seed=_resolve_seed(args))
        payload.update({"mc": est, "mc_stderr": se})
    return payload


def _cmd_partition_check(args):
    s = be.partition_series(args.n, args.lam, args.T)
    p = be.partition_product(args.n, args.lam, args.T)
    total = float(p.total)
    return {"series": s.value, "product": total,
            "rel_gap": abs(s.value - total) / abs(total),
            "truncation_k": s.truncation_k}


def _cmd_bead_correlation(args):
    pts = []
    for item in args.points.split(","):
        t, _, h = item.partition(":")
        pts.append((float(t), int(h or 0)))
    rho = be.correlation_rho(args.n, args.lam, args.T, pts)
    return {"points": [[t, h] for (t, h) in pts], "rho": rho}


def _pattern_rows(batch, draws):
    """Flatten per-row sample arrays to csv rows (draw, row, idx, value)."""
    out = []
    for r, arr in enumerate(batch, start=1):
        a = np.asarray(arr)
        for d in range(draws):
            for idx in range(a.shape[1]):
                out.append((d, r, idx, float(a[d, idx])))
    return out


def _cmd_sample_gt(args):
    seed = _resolve_seed(args)
    bottom = _spectrum(args.bottom, args.n)
    batch = ge.sample_uniform_batch(bottom, sweeps=args.sweeps,
                                    rng_seed=seed, draws=args.draws)
    return {"columns": ["draw", "row", "index", "value"],
            "rows": _pattern_rows(batch, args.draws)}


def _cmd_minor_process(args):
    seed = _resolve_seed(args)
    spectrum = _spectrum(args.spectrum, args.n)
    batch = ge.minor_eigen_process_batch(spectrum, rng_seed=seed,
                                         draws=args.draws)
    return {"columns": ["draw", "row", "index", "value"],
            "rows": _pattern_rows(batch, args.draws)}


def _cmd_estimate_t(args):
    seed = _resolve_seed(args)
    u1, u2 = (float(x) for x in args.linear.split(","))
    b = ge.BoundaryField.linear(args.n, u1, u2)
    est, se = ge.estimate_T(b, samples=args.samples, rng_seed=seed)
    return {"estimate": est, "stderr": se}


def _measure_rows(m: mc.GridMeasure):
    return {"columns": ["x", "density"],
            "rows": [(float(x), float(d))
                     for x, d in zip(m.grid, m.density)]}


def _cmd_compress(args):
    out = fc.compress_measure(_measure(args.measure), args.tau,
                              grid_size=args.grid_size)
    payload = _measure_rows(out)
    payload["mass"] = out.mass
    return payload


def _cmd_build_flow(args):
    flow = fc.build_flow(_measure(args.measure), tau_steps=args.tau_steps,
                         grid_size=args.grid_size,
                         solver_cells=args.solver_cells)
    fc.export_flow(flow, args.out_dir)
    return {"out_dir": args.out_dir, "tau_slices": len(flow.tau_grid),
            "burgers_residual": fc.burgers_residual(flow)}


def _cmd_entropy(args):
    m = _measure(args.measure)
    return {"free_entropy": mc.free_entropy(m),
            "log_energy": mc.log_energy(m)}


def _cmd_minimize(args):
    m = _measure(args.measure)
    field = va.minimize_energy(mc.quantile_of(m), args.mesh, tol=args.tol)
    payload = {"columns": ["s", "t", "f"], "rows": []}
    for i in range(field.m + 1):
        for j in range(i + 1):
            payload["rows"].append((i / field.m, j / field.m,
                                    float(field.values[i, j])))
    payload["energy"] = va.discrete_energy(field)
    payload["rate"] = va.rate_functional(field, m)
    return payload


def _field_from_csv(path: str) -> va.TriangleField:
    import csv as _csv
    with open(path, newline="") as fh:
        rows = [r for r in _csv.reader(fh) if r and not r[0].startswith("#")]
    header = rows[0]
    si, ti, fi = header.index("s"), header.index("t"), header.index("f")
    data = [(float(r[si]), float(r[ti]), float(r[fi])) for r in rows[1:]]
    m = round(1.0 / min(s for s, _, _ in data if s > 0))
    vals = np.zeros((m + 1, m + 1))
    for s, t, f in data:
        vals[round(s * m), round(t * m)] = f
    return va.TriangleField(m=m, values=vals)


def _cmd_ldp_estimate(args):
    seed = _resolve_seed(args)
    field = _field_from_csv(args.field)
    est, se = va.ldp_log_volume(field, args.N, args.delta,
                                samples=args.samples, rng_seed=seed,
                                pin_diagonal=args.pin_diagonal,
                                normalize=not args.raw)
    return {"estimate": est, "stderr": se}


def _cmd_verify(args):
    report = acceptance.run_suite(args.level)
    return report


_HANDLERS = {}


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gtlab",
        description="numerical laboratory for Gelfand-Tsetlin patterns")
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(name, handler, config_keys, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads; default 1 for reproducibility")
        _HANDLERS[name] = (handler, config_keys)
        return p

    p = cmd("sigma", _cmd_sigma, ("u1", "u2"),
            help="surface tension at a gradient pair")
    p.add_argument("--u1", type=float, required=True)
    p.add_argument("--u2", type=float, required=True)

    p = cmd("bead-volume", _cmd_bead_volume, ("n", "k", "l", "mc_trials"),
            help="exact toric bead-volume, optional MC cross-check")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--mc-trials", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)

    p = cmd("partition-check", _cmd_partition_check, ("n", "lam", "T"),
            help="bead partition function: series vs product")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--T", type=float, required=True)

    p = cmd("bead-correlation", _cmd_bead_correlation,
            ("n", "lam", "T", "points"),
            help="determinantal correlation at bead locations")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--points", required=True,
                   help="comma-separated t:h pairs, e.g. 0.2:0,0.4:0")

    p = cmd("sample-gt", _cmd_sample_gt, ("bottom", "n", "sweeps", "draws",
                                          "seed"),
            help="Gibbs-sample uniform GT patterns over a bottom row")
    p.add_argument("--bottom", required=True,
                   help="measure name or comma-separated spectrum")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sweeps", type=int, default=200)
    p.add_argument("--draws", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)

    p = cmd("minor-process", _cmd_minor_process, ("spectrum", "n", "draws",
                                                  "seed"),
            help="GUE minor-process pattern from a fixed spectrum")
    p.add_argument("--spectrum", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--draws", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)

    p = cmd("estimate-T", _cmd_estimate_t, ("n", "linear", "samples", "seed"),
            help="importance-sampled GT partition function over a boundary")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--linear", default="1.0,1.0",
                   help="u1,u2 for the linear boundary u1*i + u2*j")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=None)

    p = cmd("compress", _cmd_compress, ("measure", "tau", "grid_size"),
            help="free compression [mu]_tau of a measure")
    p.add_argument("--measure", required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--grid-size", type=int, default=2000)

    p = cmd("build-flow", _cmd_build_flow, ("measure", "tau_steps",
                                            "grid_size", "solver_cells",
                                            "out_dir"),
            help="build and export the full compression flow")
    p.add_argument("--measure", required=True)
    p.add_argument("--tau-steps", type=int, required=True)
    p.add_argument("--grid-size", type=int, default=None)
    p.add_argument("--solver-cells", type=int, default=600)
    p.add_argument("--out-dir", required=True)

    p = cmd("entropy", _cmd_entropy, ("measure",),
            help="free entropy chi of a measure")
    p.add_argument("--measure", required=True)

    p = cmd("minimize", _cmd_minimize, ("measure", "mesh", "tol"),
            help="minimize the surface-tension energy on the triangle")
    p.add_argument("--measure", required=True)
    p.add_argument("--mesh", type=int, default=32)
    p.add_argument("--tol", type=float, default=1e-6)

    p = cmd("ldp-estimate", _cmd_ldp_estimate,
            ("field", "N", "delta", "samples", "pin_diagonal", "raw", "seed"),
            help="band log-volume of lattice GT functions near a field")
    p.add_argument("--field", required=True, help="triangle-field csv")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--pin-diagonal", action="store_true")
    p.add_argument("--raw", action="store_true",
                   help="report (2/N^2) log I_N instead of the rate")
    p.add_argument("--seed", type=int, default=None)

    p = cmd("verify", _cmd_verify, ("level",),
            help="run the acceptance suite")
    p.add_argument("--level", choices=("fast", "full"), default="fast")

    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler, config_keys = _HANDLERS[args.command]
    config = _config_of(args, config_keys)
    if "seed" in config_keys:
        try:
            config["seed"] = _resolve_seed(args)
        except DomainError:
            pass  # the handler raises if the seed is actually needed
    config["threads"] = args.threads
    try:
        payload = handler(args)
    except tuple(cls for cls, _ in EXIT_CODES) as exc:
        for cls, code in EXIT_CODES:
            if isinstance(exc, cls):
                print(f"gtlab: {type(exc).__name__}: {exc}", file=sys.stderr)
                return code
        raise  # unreachable
    _emit(payload, config, args.out, args.format)
    if args.command == "verify" and not payload["passed"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
