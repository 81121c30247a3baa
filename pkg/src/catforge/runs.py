"""Per-run output directories and manifests."""

from __future__ import annotations

import hashlib
import json
import platform
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .errors import ParameterError


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def make_run_id(command: str, resolved: dict) -> str:
    digest = hashlib.sha256(canonical_json({"command": command, **resolved}).encode()).hexdigest()
    return f"{command}-{digest[:12]}"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    run_id: str
    command: str
    config: dict
    seeds: dict
    root: Path
    artifacts: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @classmethod
    def open(cls, out: Path, command: str, config: dict, seeds: dict, force: bool = False) -> RunManifest:
        run_id = make_run_id(command, {"config": config, "seeds": seeds})
        root = Path(out) / run_id
        if root.exists():
            if not force:
                raise ParameterError(f"run directory {root} exists; pass --force to overwrite")
            shutil.rmtree(root)
        root.mkdir(parents=True)
        return cls(run_id, command, config, seeds, root)

    def path(self, name: str) -> Path:
        return self.root / name

    def write_json(self, name: str, payload: dict) -> Path:
        path = self.path(name)
        with open(path, "w") as fh:
            fh.write(json.dumps({"run_id": self.run_id, **payload}, indent=2, default=_jsonable))
            fh.write("\n")
        return self.register(name)

    def write_text(self, name: str, text: str) -> Path:
        self.path(name).write_text(text)
        return self.register(name)

    def register(self, name: str) -> Path:
        self.artifacts[name] = None
        return self.path(name)

    def timed(self, label: str):
        return _Timer(self.timings, label)

    def finalize(self) -> Path:
        arts = {name: {"path": name, "sha256": sha256_file(self.path(name))} for name in self.artifacts}
        payload = {
            "run_id": self.run_id,
            "command": self.command,
            "config": self.config,
            "seeds": self.seeds,
            "artifacts": arts,
            "versions": {
                "catforge": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
            "timings_s": self.timings,
        }
        path = self.path("manifest.json")
        with open(path, "w") as fh:
            fh.write(json.dumps(payload, indent=2, default=_jsonable))
            fh.write("\n")
        return path


class _Timer:
    def __init__(self, sink, label):
        self.sink, self.label = sink, label

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.sink[self.label] = round(time.perf_counter() - self.t0, 6)
        return False


def load_manifest(run_dir) -> dict | None:
    path = Path(run_dir) / "manifest.json"
    if not path.exists():
        return None
    with open(path) as fh:
        return json.load(fh)
