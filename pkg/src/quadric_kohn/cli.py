"""Command-line front end: ``quadric-kohn --config job.json``.

Exit codes: 0 success, 1 unexpected failure (including an unwritable
output path), 2 configuration error, 3 numerical tolerance failure, 4 domain
error.  Failures print one JSON error record on stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .classifier import SphereSampler, classify_degree, gamma_report, sample_signatures, signature_set
from .config import JobConfig, parse_config
from .errors import ConfigError, DomainError, QuadricError, ToleranceError
from .green import EvalPoint, QuadratureSpec, eval_batch
from .heat import TransformPoint, heat_transform
from .levi import eigen_coordinates, multi_index, multi_indices, spectral
from .verify import run_suite

log = logging.getLogger("quadric_kohn")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_TOLERANCE, EXIT_DOMAIN = 0, 1, 2, 3, 4


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _joined(idx) -> str:
    return "|".join(str(k) for k in idx)


def _z_columns(n: int, m: int) -> list:
    return [f"z_{j}_{p}" for j in range(1, n + 1) for p in ("re", "im")] + \
        [f"t_{j}" for j in range(1, m + 1)]


def _point_cells(z, t) -> list:
    cells = []
    for v in z:
        cells += [v.real, v.imag]
    return cells + list(t)


@dataclasses.dataclass
class Table:
    header: list
    rows: list
    failed: bool = False


def _spec(job: JobConfig, tol: float | None) -> QuadratureSpec:
    kw = job.quadrature_overrides()
    if tol is not None:
        kw["rel_tol"] = tol
    try:
        return QuadratureSpec(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad quadrature settings: {exc}") from None


def _sampler(job: JobConfig, spec: QuadratureSpec, seed) -> SphereSampler:
    return SphereSampler(n_points=int(job.option("n_points", 2048)), seed=seed,
                         zero_tol=spec.zero_tol)


def cmd_spectrum(job, Q, spec, args) -> Table:
    dirs = job.option("directions")
    if dirs is None:
        k = int(job.option("n_directions", 16))
        dirs = SphereSampler(n_points=k, seed=args.seed).base_points(Q.m)
    header = [f"lam_{j}" for j in range(1, Q.m + 1)] + [f"mu_{j}" for j in range(1, Q.n + 1)] + \
        ["n_plus", "n_minus", "nu"]
    rows = []
    for lam in np.atleast_2d(np.asarray(dirs, dtype=float)):
        if lam.size != Q.m or not np.any(lam):
            raise ConfigError(f"direction {lam.tolist()} is not a nonzero vector in R^{Q.m}")
        S = spectral(Q, lam / np.linalg.norm(lam), spec.zero_tol)
        rows.append(list(lam) + list(S.mu) + [S.n_plus, S.n_minus, S.nu])
    return Table(header, rows)


def cmd_classify(job, Q, spec, args) -> Table:
    sampler = _sampler(job, spec, args.seed)
    sample = sample_signatures(Q, sampler)
    sigs = "|".join(f"{a}:{b}" for a, b in sorted(signature_set(Q, sampler)))
    rows = []
    degrees = [job.q] if job.option("single_degree", False) else range(Q.n + 1)
    for q in degrees:
        c = classify_degree(Q, q, sample=sample)
        w = c.witness
        rows.append([q, c.solvable, c.hypoelliptic, sigs,
                     "" if w is None else "|".join(repr(float(x)) for x in w), c.n_samples])
    return Table(["q", "solvable", "hypoelliptic", "signatures", "witness", "n_samples"], rows)


def cmd_gamma(job, Q, spec, args) -> Table:
    sample = sample_signatures(Q, _sampler(job, spec, args.seed))
    Ls = job.option("L")
    Ls = [multi_index(Ls, Q.n)] if Ls is not None else multi_indices(Q.n, job.q)
    rows = []
    for L in Ls:
        g = gamma_report(Q, L, sample=sample)
        rows.append([_joined(L), g.nonempty_positive_measure, g.sphere_fraction_estimate, g.n_samples])
    return Table(["L", "nonempty", "sphere_fraction", "n_samples"], rows)


def cmd_kernel(job, Q, spec, args) -> Table:
    pts = job.eval_points(Q.n, Q.m)
    points = [EvalPoint(z, t, job.q, job.K) for z, t in pts]
    results = eval_batch(Q, points, spec, kind=job.command, threads=args.threads)
    header = _z_columns(Q.n, Q.m) + ["Kprime", "value_re", "value_im", "abs_err", "formula_used"]
    rows = []
    failed = False
    for (z, t), res in zip(pts, results):
        failed |= not res.converged
        for Kp, v in res.coeffs.items():
            rows.append(_point_cells(z, t) + [_joined(Kp), v.real, v.imag, res.abs_error[Kp],
                                              res.formula_used.value])
    return Table(header, rows, failed)


def cmd_heat(job, Q, spec, args) -> Table:
    s_values = job.option("s", [1.0])
    lams = np.atleast_2d(np.asarray(job.option("lam", [[1.0] * Q.m]), dtype=float))
    L = multi_index(job.option("L", list(job.K)), Q.n)
    pts = job.eval_points(Q.n, Q.m)
    header = _z_columns(Q.n, 0) + [f"lam_{j}" for j in range(1, Q.m + 1)] + ["s", "L", "value"]
    rows = []
    for z, _ in pts:
        for lam in lams:
            if lam.size != Q.m:
                raise ConfigError(f"lam must have {Q.m} components")
            if not np.any(lam):
                raise DomainError("lambda must be nonzero")
            S = spectral(Q, lam / np.linalg.norm(lam), spec.zero_tol)
            za = eigen_coordinates(S, z)
            for s in s_values:
                v = heat_transform(Q, TransformPoint(za, lam, float(s), L), spec.zero_tol)
                rows.append(_point_cells(z, []) + list(lam) + [float(s), _joined(L), v])
    return Table(header, rows)


def cmd_verify(job, Q, spec, args) -> Table:
    names = job.option("suite", "all")
    try:
        checks = run_suite(names, seed=0 if args.seed is None else args.seed)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None
    rows = [[c.name, c.passed, c.metric, c.tolerance, c.seconds, c.detail] for c in checks]
    for c in checks:
        log.info("%-28s %s  metric=%.3e  tol=%.1e", c.name, "PASS" if c.passed else "FAIL",
                 c.metric, c.tolerance)
    return Table(["check", "passed", "metric", "tolerance", "seconds", "detail"], rows,
                 failed=not all(c.passed for c in checks))


COMMANDS = {
    "spectrum": cmd_spectrum,
    "classify": cmd_classify,
    "gamma": cmd_gamma,
    "szego": cmd_kernel,
    "green": cmd_kernel,
    "heat": cmd_heat,
    "verify": cmd_verify,
}


def write_csv(table: Table, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(table.header)
        for row in table.rows:
            w.writerow([_fmt(x) for x in row])


def run(job: JobConfig, args) -> int:
    """Execute ``job`` and write its CSV (and optional figure); returns the exit status."""
    Q = job.quadric()
    spec = _spec(job, args.tol)
    table = COMMANDS[job.command](job, Q, spec, args)
    out = Path(args.out or job.output_path)
    write_csv(table, out)
    log.info("wrote %d rows to %s", len(table.rows), out)
    if args.plot:
        from .plotting import plot_table
        fig_path = plot_table(job.command, table.header, table.rows, out.with_suffix(".png"))
        log.info("wrote figure %s", fig_path)
    if table.failed:
        raise ToleranceError(f"{job.command}: some results missed their tolerance (see {out})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quadric-kohn",
                                description="Kernels of the Kohn Laplacian on quadric CR manifolds.")
    p.add_argument("--config", required=True, help="JSON job description")
    p.add_argument("--tol", type=float, default=None, help="override quadrature rel_tol")
    p.add_argument("--out", default=None, help="override the output CSV path")
    p.add_argument("--threads", type=int, default=1, help="worker threads for point batches")
    p.add_argument("--seed", type=int, default=None, help="seed for the sphere sampler rotation")
    p.add_argument("--plot", action="store_true", help="also write a PNG next to the CSV")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _error_record(code: int, exc: BaseException) -> int:
    rec = {"exit_code": code, "error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(rec), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        return _error_record(EXIT_CONFIG, ConfigError(f"cannot read config: {exc}"))
    try:
        job = parse_config(text)
        return run(job, args)
    except ConfigError as exc:
        return _error_record(EXIT_CONFIG, exc)
    except ToleranceError as exc:
        return _error_record(EXIT_TOLERANCE, exc)
    except DomainError as exc:
        return _error_record(EXIT_DOMAIN, exc)
    except (QuadricError, ValueError) as exc:
        return _error_record(EXIT_CONFIG, exc)
    except OSError as exc:
        return _error_record(EXIT_FAIL, exc)


if __name__ == "__main__":
    sys.exit(main())
