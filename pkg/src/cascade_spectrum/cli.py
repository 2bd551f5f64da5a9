"""Command-line front end: figure presets, sweeps, serialization, validation.

Example::

    cascade-spectrum --figure 3 --output out/fig3.csv
    cascade-spectrum --case C --gamma 0.01 --points 2001 --format json --output c.json
    cascade-spectrum --config run.json --oracle
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .blocks import validate_blocks
from .model import DetectorParams, ParameterError, SystemParams
from .spectrum import DEFAULT_POINTS, SpectrumCase, SpectrumTable, sweep

__all__ = [
    "FigurePreset",
    "FIGURE_PRESETS",
    "figure_preset",
    "RunConfig",
    "ConfigError",
    "emit",
    "load_table",
    "write_matrix_csv",
    "run",
    "run_validation",
    "build_parser",
    "config_from_args",
    "main",
]

CSV_HEADER = "delta_omega,s_value"
PARAM_FIELDS = ("g1", "g2", "gamma", "delta", "delta_bar")
DETECTOR_FIELDS = ("mu", "m_eff", "r1", "r2")


class ConfigError(ValueError):
    """Invalid run configuration."""


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FigurePreset:
    """Parameters of one reference figure: the cases it shows and its curves."""

    figure: int
    cases: tuple
    variants: tuple
    detector: DetectorParams

    def __getattr__(self, name):
        # preset(10).delta -> -1.0; a field that differs between curves gives a tuple
        if name in PARAM_FIELDS:
            values = tuple(getattr(v, name) for v in self.variants)
            return values[0] if len(set(values)) == 1 else values
        if name in DETECTOR_FIELDS:
            return getattr(self.detector, name)
        raise AttributeError(name)


def _p(**kw):
    base = dict(g1=1.0, g2=1.0, gamma=0.1, delta=0.0, delta_bar=0.0)
    base.update(kw)
    return SystemParams(**base)


_UNIT = DetectorParams(mu=1.0, m_eff=1.0, r1=1.0, r2=1.0)
_A, _C = SpectrumCase.A, SpectrumCase.C

FIGURE_PRESETS = {
    3: FigurePreset(3, (_A, _C), (_p(gamma=0.1),), _UNIT),
    4: FigurePreset(4, (_A,), tuple(_p(gamma=g) for g in (0.01, 0.1, 1.0)), _UNIT),
    5: FigurePreset(5, (_C,), tuple(_p(gamma=g) for g in (0.01, 0.1, 1.0)), _UNIT),
    6: FigurePreset(6, (_A,), tuple(_p(gamma=0.1, delta=d) for d in (0.0, -1.0, -2.0)), _UNIT),
    7: FigurePreset(7, (_C,), tuple(_p(gamma=0.1, delta=d) for d in (0.0, -1.0, -2.0)), _UNIT),
    8: FigurePreset(8, (_A,), tuple(_p(gamma=0.01, delta=d) for d in (0.0, -1.0)), _UNIT),
    9: FigurePreset(9, (_C,), tuple(_p(gamma=0.01, delta=d) for d in (0.0, -1.0)), _UNIT),
    10: FigurePreset(10, (_A,), tuple(_p(gamma=0.01, delta=-1.0, delta_bar=b) for b in (-1.0, 0.0, 1.0)), _UNIT),
    11: FigurePreset(11, (_C,), tuple(_p(gamma=0.01, delta=-1.0, delta_bar=b) for b in (-1.0, 0.0, 1.0)), _UNIT),
    13: FigurePreset(13, (_A, _C), (_p(g1=0.1, gamma=0.01),), DetectorParams(mu=1.0, m_eff=1.0, r1=0.1, r2=1.0)),
    14: FigurePreset(14, (_A, _C), (_p(g1=0.01, gamma=0.01),), DetectorParams(mu=1.0, m_eff=1.0, r1=0.01, r2=1.0)),
}


def figure_preset(figure_id: int) -> FigurePreset:
    try:
        return FIGURE_PRESETS[int(figure_id)]
    except (KeyError, ValueError, TypeError):
        raise ConfigError(
            f"unknown figure preset {figure_id!r}; choose from {sorted(FIGURE_PRESETS)}"
        ) from None


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    """Everything a run needs. A figure preset, when set, replaces params and case."""

    case: SpectrumCase = SpectrumCase.A
    params: SystemParams = field(default_factory=SystemParams)
    detector: DetectorParams = field(default_factory=DetectorParams)
    omega_min: float | None = None
    omega_max: float | None = None
    points: int = DEFAULT_POINTS
    output: str = "spectrum.csv"
    format: str = "csv"
    oracle: bool = False
    figure: int | None = None
    workers: int = 1

    def __post_init__(self):
        self.case = SpectrumCase.parse(self.case)
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if int(self.points) != self.points or self.points < 2:
            raise ConfigError(f"points must be an integer >= 2, got {self.points}")
        self.points = int(self.points)
        if self.figure is not None:
            figure_preset(self.figure)
        lo, hi = self.omega_min, self.omega_max
        if lo is not None and hi is not None and not lo < hi:
            raise ConfigError(f"omega_min ({lo}) must be below omega_max ({hi})")

    def _combos(self) -> list:
        if self.figure is not None:
            pre = figure_preset(self.figure)
            n = len(pre.variants)
            return [(c, v, pre.detector, k, n) for c in pre.cases for k, v in enumerate(pre.variants)]
        return [(self.case, self.params, self.detector, 0, 1)]

    def runs(self) -> list:
        """``(case, params, detector, grid)`` for each spectrum to compute."""
        out = []
        for case, params, det, _, _ in self._combos():
            lo = -4.0 * params.g2 if self.omega_min is None else self.omega_min
            hi = 4.0 * params.g2 if self.omega_max is None else self.omega_max
            if not lo < hi:
                raise ConfigError(f"empty frequency window [{lo}, {hi}]")
            out.append((case, params, det, np.linspace(lo, hi, self.points)))
        return out

    def output_paths(self) -> list:
        """One path per run. Several runs share ``output`` as a stem or directory."""
        combos = self._combos()
        target = Path(self.output)
        as_dir = target.is_dir() or self.output.endswith(("/", os.sep))
        if len(combos) == 1 and not as_dir:
            return [target]
        ext = "." + self.format
        paths = []
        for case, _, _, k, n in combos:
            tag = f"case{case.value}" + (f"_v{k + 1}" if n > 1 else "")
            if as_dir:
                stem = f"fig{self.figure}" if self.figure is not None else "spectrum"
                paths.append(target / f"{stem}_{tag}{ext}")
            else:
                paths.append(target.with_name(f"{target.stem}_{tag}{target.suffix or ext}"))
        return paths


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def emit(table: SpectrumTable, path, fmt: str = "csv") -> Path:
    """Write ``table`` as CSV (17 significant digits) or JSON (round-trip floats)."""
    path = Path(path)
    if fmt == "csv":
        lines = [CSV_HEADER] + [f"{x:.16e},{y:.16e}" for x, y in zip(table.grid, table.values)]
        data = "\n".join(lines) + "\n"
    elif fmt == "json":
        doc = {
            "params": table.params.to_dict(),
            "detector": table.detector.to_dict(),
            "case": table.case.value,
            "grid": [float(x) for x in table.grid],
            "values": [float(y) for y in table.values],
        }
        data = json.dumps(doc, indent=1) + "\n"
    else:
        raise ConfigError(f"unknown format {fmt!r}")
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(data)
    return path


def load_table(path) -> SpectrumTable:
    """Read a table written by :func:`emit` (JSON keeps parameters, CSV does not)."""
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        return SpectrumTable(np.array(doc["grid"]), np.array(doc["values"]),
                             SystemParams(**doc["params"]), DetectorParams(**doc["detector"]),
                             SpectrumCase(doc["case"]))
    rows = text.splitlines()
    if rows[0] != CSV_HEADER:
        raise ValueError(f"{path}: unexpected header {rows[0]!r}")
    arr = np.array([[float(c) for c in r.split(",")] for r in rows[1:]])
    return SpectrumTable(arr[:, 0], arr[:, 1], SystemParams(), DetectorParams(), SpectrumCase.A)


def write_matrix_csv(matrix, path) -> Path:
    """Debug dump of a complex matrix: one CSV row per matrix row, ``re,im`` cell pairs."""
    m = np.atleast_2d(np.asarray(matrix, complex))
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        for row in m:
            fh.write(",".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in row) + "\n")
    return path


# ---------------------------------------------------------------------------
# validation report
# ---------------------------------------------------------------------------

def _check(name, value, tol, detail=None):
    entry = {"check": name, "value": float(value), "tolerance": tol, "passed": bool(value < tol)}
    if detail:
        entry["detail"] = detail
    return entry


def run_validation(params: SystemParams, detector: DetectorParams, cases=(SpectrumCase.A, SpectrumCase.C),
                   spot_frequencies=None) -> list:
    """Oracle checks for one parameter set; returns a list of check records."""
    from . import oracle
    from .resolvent import rho_tilde, u_tilde, shifted_matrix
    from .spectrum import spectrum_point

    checks = []
    rep = validate_blocks(params, n_max=3)
    checks.append(_check("blocks_vs_liouvillian", rep["max_dev"], 1e-12,
                         {"errata": rep["errata"]}))

    t_short = 20.0 / params.g2
    bt = oracle.integrate_blocks(params, t_short, stride=1)
    ft = oracle.full_space_evolve(params, 2, t_short, stride=1)
    dev = max(float(np.max(np.abs(oracle.project(ft, s).samples - tr.samples)))
              for s, tr in (((2, 2), bt.rho22), ((1, 1), bt.rho11), ((0, 0), bt.rho00)))
    checks.append(_check("block_vs_full_trajectory", dev, 1e-9))
    rho = ft.samples.reshape(ft.samples.shape[0], 9, 9)
    checks.append(_check("trace", float(np.max(np.abs(np.trace(rho, axis1=1, axis2=2) - 1))), 1e-9))
    checks.append(_check("hermiticity", float(np.max(np.abs(rho - rho.conj().transpose(0, 2, 1)))), 1e-12))

    # horizon long enough for the slowest mode of the evolution chains to fall by e^-25
    rates = [np.min(np.real(np.linalg.eigvals(shifted_matrix(s, 0.0, params))))
             for s in ((2, 2), (1, 1), (2, 1), (1, 0))]
    horizon = 25.0 / min(rates)
    long = oracle.integrate_blocks(params, horizon)
    rt, ut = rho_tilde(params, 0.0), u_tilde(params, -1j)
    for name, traj, s, ref in (("rho22", long.rho22, 0.0, rt["rho22"]),
                               ("rho11", long.rho11, 0.0, rt["rho11"]),
                               ("u1010", long.u1010, -1j, ut["u1010"]),
                               ("u2121", long.u2121, -1j, ut["u2121"]),
                               ("u1021", long.u1021, -1j, ut["u1021"])):
        val = oracle.numeric_laplace(traj, s)
        err = float(np.max(np.abs(val - ref)) / np.max(np.abs(ref)))
        checks.append(_check(f"laplace_{name}", err, 1e-4))

    if spot_frequencies is None:
        spot_frequencies = np.array([-1.0, -0.5, 0.0, 0.74, 2.0]) * params.g2
    for case in cases:
        tt = oracle.two_time_spectrum(case, spot_frequencies, params, detector, t_max=100.0 / params.gamma)
        rs = np.array([spectrum_point(case, w, params, detector) for w in spot_frequencies])
        err = float(np.max(np.abs(tt - rs) / np.abs(rs)))
        checks.append(_check(f"two_time_case_{SpectrumCase.parse(case).value}", err, 1e-3,
                             {"frequencies": [float(w) for w in spot_frequencies]}))
    return checks


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

def run(config: RunConfig) -> int:
    """Execute the sweeps described by ``config`` and write their outputs.

    Returns 0 on success and 1 if an oracle check failed.
    """
    runs = config.runs()
    paths = config.output_paths()
    for (case, params, det, grid), path in zip(runs, paths):
        table = sweep(case, grid, params, det, workers=config.workers)
        emit(table, path, config.format)
    status = 0
    if config.oracle:
        report = []
        seen = []
        for case, params, det, _ in runs:
            if (params, det) in seen:
                continue
            seen.append((params, det))
            cases = [c for c, p, d, _ in runs if p == params and d == det]
            checks = run_validation(params, det, cases=cases)
            report.append({"params": params.to_dict(), "detector": det.to_dict(), "checks": checks})
            if not all(c["passed"] for c in checks):
                status = 1
        rpath = Path(paths[0]).with_name(Path(paths[0]).stem + ".validation.json")
        rpath.write_text(json.dumps({"passed": status == 0, "runs": report}, indent=1) + "\n")
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cascade-spectrum",
        description="Spontaneous-emission spectrum of a cascade atom in a damped cavity.",
    )
    ap.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    ap.add_argument("--case", choices=["A", "B", "C"], type=str.upper)
    for name in ("g1", "g2", "gamma", "delta"):
        ap.add_argument(f"--{name}", type=float)
    ap.add_argument("--deltabar", dest="delta_bar", type=float)
    ap.add_argument("--mu", type=float)
    ap.add_argument("--m-eff", dest="m_eff", type=float)
    ap.add_argument("--r1", type=float)
    ap.add_argument("--r2", type=float)
    ap.add_argument("--omega-min", dest="omega_min", type=float)
    ap.add_argument("--omega-max", dest="omega_max", type=float)
    ap.add_argument("--points", type=int)
    ap.add_argument("--figure", type=int, help="figure preset: 3-11, 13 or 14")
    ap.add_argument("--oracle", action="store_true", default=None,
                    help="also run oracle checks and write a validation report")
    ap.add_argument("--output")
    ap.add_argument("--format", choices=["csv", "json"])
    ap.add_argument("--workers", type=int)
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    values = {}
    if ns.config:
        with open(ns.config) as fh:
            values = json.load(fh)
        if "deltabar" in values:
            values["delta_bar"] = values.pop("deltabar")
        if "m-eff" in values:
            values["m_eff"] = values.pop("m-eff")
    for key, val in vars(ns).items():
        if key != "config" and val is not None:
            values[key] = val
    known = set(PARAM_FIELDS) | set(DETECTOR_FIELDS) | {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    params = SystemParams(**{k: values.pop(k) for k in PARAM_FIELDS if k in values})
    detector = DetectorParams(**{k: values.pop(k) for k in DETECTOR_FIELDS if k in values})
    return RunConfig(params=params, detector=detector, **values)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        config = config_from_args(ns)
        return run(config)
    except (ConfigError, ParameterError, OSError) as exc:
        print(f"cascade-spectrum: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
