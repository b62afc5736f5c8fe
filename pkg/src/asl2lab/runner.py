"""Execute an :class:`ExperimentConfig` and write CSV and JSON outputs."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .config import ExperimentConfig
from .ensembles import DecayFit, EnsembleResult, fit_decay, haar_reference, run_ensemble, worker_threads
from .modular_space import TestFunction
from .sections import from_name
from .verification import CriterionResult, run_suite
from . import weights

CSV_HEADER = (
    "param", "ensemble", "estimate_re", "estimate_im", "haar_ref", "haar_stderr", "abs_err", "terms", "runtime_ms", "seed",
)


class NumericFailure(RuntimeError):
    """A non-finite value appeared in an estimate."""


@dataclass
class RunReport:
    config: ExperimentConfig
    results: list[EnsembleResult]
    fits: dict[str, Optional[DecayFit]]
    fit_notes: dict[str, str]
    verification: list[CriterionResult] = field(default_factory=list)
    wall_clock_s: float = 0.0
    haar_wall_clock_s: float = 0.0

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.results:
            runtime = repr(round(r.runtime_ms, 3)) if self.config.record_timings else "0"
            w.writerow([
                r.parameter, r.ensemble, repr(r.estimate.real), repr(r.estimate.imag), repr(r.haar_ref),
                repr(r.haar_stderr), repr(r.abs_err), r.terms, runtime, r.seed,
            ])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "results": [
                {
                    "param": r.parameter,
                    "ensemble": r.ensemble,
                    "estimate": [r.estimate.real, r.estimate.imag],
                    "haar_ref": r.haar_ref,
                    "haar_stderr": r.haar_stderr,
                    "psi_integral": r.psi_integral,
                    "reference": r.reference,
                    "abs_err": r.abs_err,
                    "mean_subtracted": r.mean_subtracted,
                    "terms": r.terms,
                    "runtime_ms": r.runtime_ms,
                    "seed": r.seed,
                }
                for r in self.results
            ],
            "fits": {
                k: None if v is None else {
                    "points": [list(p) for p in v.points],
                    "excluded": [list(p) for p in v.excluded],
                    "delta_hat": v.delta_hat,
                    "r2": v.r2,
                }
                for k, v in self.fits.items()
            },
            "fit_notes": self.fit_notes,
            "verification": [
                {"criterion": c.number, "name": c.name, "passed": c.passed, "summary": c.summary, "runtime_s": c.runtime_s}
                for c in self.verification
            ],
            "wall_clock_s": self.wall_clock_s,
            "haar_wall_clock_s": self.haar_wall_clock_s,
        }


def _check_finite(r: EnsembleResult) -> None:
    if not (math.isfinite(r.estimate.real) and math.isfinite(r.estimate.imag)):
        raise NumericFailure(f"non-finite estimate for {r.ensemble} at {r.parameter}")


def execute(config: ExperimentConfig) -> RunReport:
    """Evaluate every grid cell, in config order, with ascending parameters."""
    start = time.perf_counter()
    section = from_name(config.section)
    f = TestFunction.parse(config.f)
    psi = weights.from_spec(config.psi)
    results: list[EnsembleResult] = []
    with worker_threads(config.workers):
        h0 = time.perf_counter()
        ref, se = haar_reference(f, config.seed, config.haar_samples)
        haar_time = time.perf_counter() - h0
        if not math.isfinite(ref):
            raise NumericFailure("non-finite Haar reference")
        for ens in config.ensembles:
            if ens == "primitive":
                cells = [(q, None) for q in config.q_grid]
            elif ens == "twisted":
                cells = [(N, c) for c in config.twist_c for N in config.n_grid]
            else:
                cells = [(N, None) for N in config.n_grid]
            for param, c in cells:
                r = run_ensemble(ens, section, f, psi, param, ref, se, config.seed, c=c)
                _check_finite(r)
                results.append(r)
    fits, notes = _fit_all(results)
    verification = [res for suite in config.verify for res in run_suite(suite)]
    return RunReport(config, results, fits, notes, verification, time.perf_counter() - start, haar_time)


def _fit_all(results: list[EnsembleResult]):
    groups: dict[str, list[EnsembleResult]] = {}
    for r in results:
        groups.setdefault(r.ensemble, []).append(r)
    fits, notes = {}, {}
    for name, rs in groups.items():
        floor = 3 * rs[0].noise
        try:
            fits[name] = fit_decay([(r.parameter, r.abs_err) for r in rs], noise_floor=floor)
            notes[name] = f"noise floor {floor:.3g}"
        except ValueError as exc:
            fits[name] = None
            notes[name] = f"no fit: {exc}"
    return fits, notes


def write_outputs(report: RunReport, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = out / "results.csv", out / "report.json"
    csv_path.write_text(report.csv_text())
    json_path.write_text(json.dumps(report.to_json(), indent=2, allow_nan=True) + "\n")
    return csv_path, json_path


def run(config: ExperimentConfig, out_dir: str | Path | None = None) -> RunReport:
    report = execute(config)
    write_outputs(report, out_dir if out_dir is not None else config.output)
    return report
