"""Batch experiment runner.

An experiment is a JSON document (see :class:`ExperimentSpec`).  Running it
writes, under ``output_dir``:

* ``scan.csv`` / ``scan.json``   witness-gap scan across truncations
* ``labels.csv``, ``walk.txt``   four-tuple labels and a covering walk
* ``trajectories/traj_<i>.csv``  one file per schedule
* ``transport.json``             chain diagnostics
* ``report.json``                the experiment config, seed, verdicts and exit status

Exit codes: 0 ok, 1 bad input, 2 construction failure (results still
written), 3 replay mismatch.
"""
from __future__ import annotations

import json
import logging
import shutil
import tempfile
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .errors import ChainDegraded, ConstructionFailed, InputError, ProjektorError
from .gallery import GalleryConfig, classify_fourtuples, save_subspaces
from .johnson import condition_d, generate_walk, labels_csv, walk_text
from .regularity import dichotomy_scan
from .schedule import Schedule, run_trajectory, trajectory_csv
from .transport import build_chain, default_epsilons

log = logging.getLogger(__name__)

EXIT_OK, EXIT_INPUT, EXIT_CONSTRUCTION, EXIT_MISMATCH = 0, 1, 2, 3
DIAGNOSTICS = ("witness", "rate", "johnson", "trajectory", "transport")


@dataclass
class ExperimentSpec:
    gallery: GalleryConfig
    truncations: list = field(default_factory=list)
    schedules: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    output_dir: str = "out"
    seed: int = 0
    steps: int = 1000
    stop_below: float | None = None
    subset: list | None = None
    transport: dict = field(default_factory=dict)
    write_subspaces: bool = False

    def validate(self):
        unknown = set(self.diagnostics) - set(DIAGNOSTICS)
        if unknown:
            raise InputError(f"unknown diagnostics {sorted(unknown)}")
        on = self.enabled()
        if not on and not self.write_subspaces:
            raise InputError("no diagnostic enabled")
        if ("witness" in on or "rate" in on) and not self.truncations:
            raise InputError("witness/rate diagnostics need truncations")
        if "johnson" in on and len(self.truncations) < 2:
            raise InputError("johnson diagnostic needs at least two truncations")
        if any(b <= a for a, b in zip(self.truncations, self.truncations[1:])):
            raise InputError("truncations must be strictly increasing")
        if "trajectory" in on and not self.schedules:
            raise InputError("trajectory diagnostic needs schedules")
        if self.seed < 0 or self.steps < 1:
            raise InputError("seed must be unsigned and steps positive")

    def enabled(self) -> list:
        return [d for d in DIAGNOSTICS if self.diagnostics.get(d)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gallery"] = asdict(self.gallery)
        d["schedules"] = [s.to_dict() for s in self.schedules]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        try:
            spec = cls(
                gallery=GalleryConfig.from_dict(d["gallery"]),
                truncations=[int(t) for t in d.get("truncations", [])],
                schedules=[Schedule.from_dict(s) for s in d.get("schedules", [])],
                diagnostics={k: bool(v) for k, v in d.get("diagnostics", {}).items()},
                output_dir=str(d.get("output_dir", "out")),
                seed=int(d.get("seed", 0)),
                steps=int(d.get("steps", 1000)),
                stop_below=d.get("stop_below"),
                subset=d.get("subset"),
                transport=dict(d.get("transport", {})),
                write_subspaces=bool(d.get("write_subspaces", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad experiment spec: {exc}") from exc
        spec.validate()
        return spec

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read spec {path}: {exc}") from exc


def report_schema() -> dict:
    return json.loads(resources.files("projektor").joinpath("report.schema.json").read_text())


def _unit_start(n: int, seed: int, i: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=[seed, i]))
    z = rng.standard_normal(n)
    return z / np.linalg.norm(z)


def _write(path: Path, text: str, written: list, root: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    written.append(str(path.relative_to(root)))


def run_experiment(spec: ExperimentSpec) -> int:
    """Run the enabled diagnostics in a fixed order and write the outputs."""
    try:
        spec.validate()
    except InputError as exc:
        log.error("invalid spec: %s", exc)
        return EXIT_INPUT
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    on = spec.enabled()
    files: list = []
    report = {"version": __version__, "spec": spec.to_dict(), "seed": spec.seed,
              "diagnostics": on, "errors": [], "files": files}
    status = EXIT_OK
    gal = spec.gallery
    try:
        # build
        subs = gal.build()
        report["build"] = {"family": gal.family, "K": len(subs), "J": gal.J,
                           "ambient_dim": subs[0].ambient_dim,
                           "dims": [s.dim for s in subs], "layout": gal.layout()}
        if spec.write_subspaces:
            save_subspaces(out / "subspaces", subs, gal)
        # classify + johnson
        if "johnson" in on:
            if len(subs) < 4:
                raise InputError("johnson diagnostic needs K >= 4")
            labels = classify_fourtuples(gal.builder(), spec.truncations)
            _write(out / "labels.csv", labels_csv(labels), files, out)
            holds, cert = condition_d(labels, len(subs))
            report["johnson"] = {"condition_d": holds,
                                 "certificate": [list(a) for a in cert] if cert else None,
                                 "label_counts": {lab.value: sum(1 for v in labels.values() if v is lab)
                                                  for lab in sorted(set(labels.values()), key=lambda x: x.value)}}
            if holds:
                walk = generate_walk(cert, 4 * len(cert), seed=spec.seed, K=len(subs))
                _write(out / "walk.txt", walk_text(walk), files, out)
        # scans
        if "witness" in on or "rate" in on:
            scan = dichotomy_scan(gal.builder(), spec.truncations, subset=spec.subset)
            _write(out / "scan.csv", scan.csv_text(), files, out)
            (out / "scan.json").write_text(json.dumps(scan.to_json()))
            report["scan"] = {"flags": list(scan.flags),
                              "witness_gap": [r.witness_gap for r in scan.reports],
                              "max_dist": [r.max_dist for r in scan.reports],
                              "rate": [r.rate for r in scan.reports]}
        # trajectories
        if "trajectory" in on:
            tsum = []
            for i, sch in enumerate(spec.schedules):
                if sch.K != len(subs):
                    raise InputError(f"schedule {i} has K={sch.K}, configuration has {len(subs)}")
                z0 = _unit_start(subs[0].ambient_dim, spec.seed, i)
                traj = run_trajectory(subs, sch, z0, spec.steps, keep_points=False,
                                      stop_below=spec.stop_below)
                _write(out / "trajectories" / f"traj_{i}.csv", trajectory_csv(traj), files, out)
                tsum.append({"schedule": sch.to_dict(), "steps_run": traj.steps,
                             "final_norm": float(traj.norms[-1])})
            report["trajectories"] = tsum
        # transport
        if "transport" in on:
            tcfg = spec.transport
            eps = tcfg.get("epsilons") or default_epsilons(int(tcfg.get("n_blocks", 6)))
            try:
                plan = build_chain(eps, tcfg.get("block_dims"), verify=True, strict=True)
                report["transport"] = {"status": "OK", **plan.to_json()}
            except ChainDegraded as exc:
                status = EXIT_CONSTRUCTION
                report["transport"] = {"status": exc.code, **exc.plan.to_json()}
                report["errors"].append({"code": exc.code, "message": str(exc), "diagnostics": exc.diagnostics})
            except ConstructionFailed as exc:
                status = EXIT_CONSTRUCTION
                plan = build_chain(eps, tcfg.get("block_dims"), verify=False, strict=False)
                report["transport"] = {"status": exc.code, **plan.to_json()}
                report["errors"].append({"code": exc.code, "message": str(exc), "diagnostics": exc.diagnostics})
            (out / "transport.json").write_text(json.dumps(report["transport"], indent=1))
    except InputError as exc:
        status = EXIT_INPUT
        report["errors"].append({"code": exc.code, "message": str(exc), "diagnostics": exc.diagnostics})
    except ProjektorError as exc:
        status = EXIT_CONSTRUCTION if isinstance(exc, (ConstructionFailed, ChainDegraded)) else EXIT_INPUT
        report["errors"].append({"code": exc.code, "message": str(exc), "diagnostics": exc.diagnostics})
    report["exit_code"] = status
    report["status"] = {0: "OK", 1: "INPUT_ERROR", 2: "CONSTRUCTION_FAILED"}[status]
    jsonschema.validate(_jsonable(report), report_schema())
    (out / "report.json").write_text(json.dumps(_jsonable(report), indent=1, sort_keys=True))
    return status


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def replay(report_path) -> int:
    """Re-run the experiment stored in a report and byte-compare its CSV outputs."""
    path = Path(report_path)
    try:
        report = json.loads(path.read_text())
        spec = ExperimentSpec.from_dict(report["spec"])
    except (OSError, json.JSONDecodeError, KeyError, InputError) as exc:
        log.error("cannot replay %s: %s", path, exc)
        return EXIT_INPUT
    root = path.parent
    tmp = Path(tempfile.mkdtemp(prefix="projektor-replay-"))
    try:
        spec.output_dir = str(tmp)
        run_experiment(spec)
        for rel in report.get("files", []):
            if not rel.endswith(".csv") and not rel.endswith(".txt"):
                continue
            a = (root / rel).read_bytes() if (root / rel).exists() else None
            b = (tmp / rel).read_bytes() if (tmp / rel).exists() else None
            if a != b:
                la = (a or b"").decode().splitlines()
                lb = (b or b"").decode().splitlines()
                row = next((i for i, (x, y) in enumerate(zip(la, lb)) if x != y), min(len(la), len(lb)))
                got = la[row] if row < len(la) else "<missing>"
                want = lb[row] if row < len(lb) else "<missing>"
                print(f"MISMATCH {rel} row {row}: {got!r} != {want!r}")
                return EXIT_MISMATCH
        return EXIT_OK
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
