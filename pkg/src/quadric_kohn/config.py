"""Job configuration: JSON parsing, validation and lossless emission.

Complex numbers are ``[re, im]`` pairs.  Floats are written with ``repr``,
which is the shortest string that round-trips binary64 exactly.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .closed_forms import preset as load_preset
from .errors import ConfigError, QuadricError
from .levi import HERMITIAN_TOL, QuadricForm, multi_index

COMMANDS = ("spectrum", "classify", "gamma", "szego", "green", "heat", "verify")
KERNEL_COMMANDS = ("szego", "green", "heat")
QUADRATURE_KEYS = ("rel_tol", "abs_tol", "max_panels", "sphere_rule", "crossing_split_tol",
                   "touch_tol", "scan_points", "max_level", "zero_tol")


@dataclass(frozen=True)
class Axis:
    """``count`` equispaced values on ``[lo, hi]``; ``count = 1`` gives ``lo``."""

    lo: float
    hi: float
    count: int

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count) if self.count > 1 else np.array([self.lo])


@dataclass(frozen=True)
class JobConfig:
    """A validated job.

    Exactly one of ``preset`` and ``matrices`` is set.  ``matrices`` holds
    ``m`` row-major ``n x n`` complex arrays as nested tuples.  ``points`` is a
    tuple of ``(z, t)`` pairs; ``grid`` maps column names such as ``z_1_re``
    or ``t_2`` to an :class:`Axis` and is expanded to points on demand.
    ``options`` carries command-specific settings (see the README).
    """

    command: str
    preset: Optional[str] = None
    matrices: Optional[tuple] = None
    q: int = 0
    K: tuple = ()
    points: Optional[tuple] = None
    grid: Optional[tuple] = None
    quadrature: tuple = ()
    output: tuple = (("path", "out.csv"), ("format", "csv"))
    options: tuple = ()

    def quadric(self) -> QuadricForm:
        if self.preset is not None:
            return load_preset(self.preset).quadric
        return QuadricForm(tuple(np.array(a, dtype=complex) for a in self.matrices), name="inline")

    @property
    def output_path(self) -> str:
        return dict(self.output)["path"]

    def quadrature_overrides(self) -> dict:
        return dict(self.quadrature)

    def option(self, key, default=None):
        return _thaw(dict(self.options).get(key, default))

    def eval_points(self, n: int, m: int) -> list:
        """The ``(z, t)`` points, expanding the grid if one was given."""
        if self.points is not None:
            return [(np.array(z, dtype=complex), np.array(t, dtype=float)) for z, t in self.points]
        axes = dict(self.grid)
        names = [f"z_{j}_{p}" for j in range(1, n + 1) for p in ("re", "im")] + \
            [f"t_{j}" for j in range(1, m + 1)]
        unknown = set(axes) - set(names)
        if unknown:
            raise ConfigError(f"grid axes {sorted(unknown)} do not exist for n={n}, m={m}")
        values = [axes[k].values() if k in axes else np.zeros(1) for k in names]
        out = []
        for combo in itertools.product(*values):
            x = np.array(combo)
            out.append((x[0:2 * n:2] + 1j * x[1:2 * n:2], x[2 * n:]))
        return out


def _freeze(obj):
    if isinstance(obj, dict):
        return tuple(sorted((k, _freeze(v)) for k, v in obj.items()))
    if isinstance(obj, list):
        return tuple(_freeze(v) for v in obj)
    return obj


def _thaw(obj):
    if isinstance(obj, tuple):
        return [_thaw(v) for v in obj]
    return obj


def _complex(v, where):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(float(v[0]), float(v[1]))
    raise ConfigError(f"{where}: expected a number or an [re, im] pair, got {v!r}")


def _real(v, where):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    raise ConfigError(f"{where}: expected a real number, got {v!r}")


def _parse_matrices(raw):
    if not isinstance(raw, list) or not raw:
        raise ConfigError("quadric.matrices must be a nonempty list of square matrices")
    mats = []
    for k, a in enumerate(raw):
        if not isinstance(a, list) or not a or not all(isinstance(r, list) and len(r) == len(a) for r in a):
            raise ConfigError(f"quadric.matrices[{k}] is not a square array")
        mats.append(tuple(tuple(_complex(v, f"quadric.matrices[{k}]") for v in row) for row in a))
    n = len(mats[0])
    if any(len(a) != n for a in mats):
        raise ConfigError("all Levi matrices must have the same size")
    for k, a in enumerate(mats):
        arr = np.array(a, dtype=complex)
        defect = float(np.max(np.abs(arr - arr.conj().T)))
        if defect > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(arr)))):
            raise ConfigError(f"quadric.matrices[{k}] is not Hermitian (max asymmetry {defect!r})")
    return tuple(mats)


def _parse_points(raw, n, m):
    if not isinstance(raw, list) or not raw:
        raise ConfigError("points must be a nonempty list")
    out = []
    for i, p in enumerate(raw):
        if not isinstance(p, dict) or set(p) != {"z", "t"}:
            raise ConfigError(f"points[{i}] must be an object with keys 'z' and 't'")
        z = tuple(_complex(v, f"points[{i}].z") for v in p["z"])
        t = tuple(_real(v, f"points[{i}].t") for v in p["t"])
        if n is not None and (len(z) != n or len(t) != m):
            raise ConfigError(f"points[{i}] has shape ({len(z)}, {len(t)}), expected ({n}, {m})")
        out.append((z, t))
    return tuple(out)


def _parse_grid(raw):
    if not isinstance(raw, dict) or not raw:
        raise ConfigError("grid must be a nonempty object of axes")
    axes = []
    for name, spec in raw.items():
        if isinstance(spec, (int, float)) and not isinstance(spec, bool):
            axes.append((name, Axis(float(spec), float(spec), 1)))
            continue
        if not (isinstance(spec, dict) and set(spec) == {"min", "max", "count"}):
            raise ConfigError(f"grid.{name} must be a number or {{min, max, count}}")
        count = spec["count"]
        if not isinstance(count, int) or count < 1:
            raise ConfigError(f"grid.{name}.count must be a positive integer")
        axes.append((name, Axis(_real(spec["min"], name), _real(spec["max"], name), count)))
    return tuple(sorted(axes))


def parse_config(text: str) -> JobConfig:
    """Parse and validate a JSON job document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    allowed = {"quadric", "command", "q", "K", "points", "grid", "quadrature", "output", "options"}
    extra = set(doc) - allowed
    if extra:
        raise ConfigError(f"unknown keys {sorted(extra)}")
    command = doc.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}, got {command!r}")

    quad = doc.get("quadric")
    if not isinstance(quad, dict) or len(set(quad) & {"preset", "matrices"}) != 1 or \
            set(quad) - {"preset", "matrices"}:
        raise ConfigError("quadric must have exactly one of 'preset' and 'matrices'")
    preset_name, matrices = quad.get("preset"), None
    if preset_name is not None:
        if not isinstance(preset_name, str):
            raise ConfigError("quadric.preset must be a string")
        Q = load_preset(preset_name).quadric
    else:
        matrices = _parse_matrices(quad["matrices"])
        try:
            Q = QuadricForm(tuple(np.array(a, dtype=complex) for a in matrices))
        except QuadricError as exc:
            raise ConfigError(str(exc)) from None
    n, m = Q.n, Q.m

    q = doc.get("q", 0)
    if not isinstance(q, int) or isinstance(q, bool) or not 0 <= q <= n:
        raise ConfigError(f"q must be an integer in 0..{n}")
    K_raw = doc.get("K", list(range(1, q + 1)))
    if not isinstance(K_raw, list) or not all(isinstance(k, int) for k in K_raw):
        raise ConfigError("K must be a list of integers")
    try:
        K = multi_index(K_raw, n)
    except ValueError as exc:
        raise ConfigError(f"bad multi-index K: {exc}") from None
    if len(K) != q:
        raise ConfigError(f"K={K_raw} does not have length q={q}")

    points = grid = None
    if "points" in doc and "grid" in doc:
        raise ConfigError("give either points or grid, not both")
    if "points" in doc:
        points = _parse_points(doc["points"], n, m)
    elif "grid" in doc:
        grid = _parse_grid(doc["grid"])
    elif command in KERNEL_COMMANDS:
        raise ConfigError(f"command {command!r} needs points or a grid")

    quadrature = doc.get("quadrature", {})
    if not isinstance(quadrature, dict) or set(quadrature) - set(QUADRATURE_KEYS):
        raise ConfigError(f"quadrature keys must be among {QUADRATURE_KEYS}")
    output = doc.get("output", {"path": "out.csv", "format": "csv"})
    if not isinstance(output, dict) or not isinstance(output.get("path", ""), str):
        raise ConfigError("output must be an object with a string 'path'")
    output = {"path": output.get("path", "out.csv"), "format": output.get("format", "csv")}
    if output["format"] != "csv":
        raise ConfigError("only the csv output format is supported")
    options = doc.get("options", {})
    if not isinstance(options, dict):
        raise ConfigError("options must be an object")

    job = JobConfig(command=command, preset=preset_name, matrices=matrices, q=q, K=K,
                    points=points, grid=grid, quadrature=_freeze(quadrature),
                    output=_freeze(output), options=_freeze(options))
    if grid is not None:
        job.eval_points(n, m)
    return job


def _pair(c: complex):
    return [c.real, c.imag]


def to_document(job: JobConfig) -> dict:
    """The JSON-ready document that :func:`parse_config` maps back to ``job``."""
    doc = {"command": job.command}
    if job.preset is not None:
        doc["quadric"] = {"preset": job.preset}
    else:
        doc["quadric"] = {"matrices": [[[_pair(v) for v in row] for row in a] for a in job.matrices]}
    doc["q"] = job.q
    doc["K"] = list(job.K)
    if job.points is not None:
        doc["points"] = [{"z": [_pair(v) for v in z], "t": list(t)} for z, t in job.points]
    if job.grid is not None:
        doc["grid"] = {k: {"min": a.lo, "max": a.hi, "count": a.count} for k, a in job.grid}
    doc["quadrature"] = {k: _thaw(v) for k, v in job.quadrature}
    doc["output"] = {k: v for k, v in job.output}
    doc["options"] = {k: _thaw(v) for k, v in job.options}
    return doc


def emit(job: JobConfig) -> str:
    """Serialise ``job`` as JSON; ``parse_config(emit(job)) == job``."""
    return json.dumps(to_document(job), indent=2)
