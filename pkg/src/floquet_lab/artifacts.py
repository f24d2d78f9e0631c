"""Deterministic CSV/JSON writers stamped with the config hash and tolerances."""

import csv
import hashlib
import json
import math

import numpy as np


def config_hash(config):
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return obj


class ArtifactWriter:
    def __init__(self, out_dir, cfg_hash, tolerances):
        self.out_dir = out_dir
        self.cfg_hash = cfg_hash
        self.tolerances = dict(sorted(tolerances.items()))
        self.written = []

    def _path(self, name):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / name
        self.written.append(path)
        return path

    def json(self, name, payload):
        body = {"config_hash": self.cfg_hash, "tolerances": self.tolerances}
        body.update(payload)
        text = json.dumps(to_jsonable(body), sort_keys=True, indent=2) + "\n"
        self._path(name).write_bytes(text.encode("utf-8"))

    def csv(self, name, header, rows):
        path = self._path(name)
        with path.open("w", newline="", encoding="utf-8") as fh:
            fh.write(f"# config_hash={self.cfg_hash}\n")
            fh.write(f"# tolerances={json.dumps(self.tolerances, sort_keys=True)}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([fmt(v) for v in row])

    def csv_from(self, name, write):
        """Write via a callable taking a text handle (header comment lines first)."""
        path = self._path(name)
        with path.open("w", newline="", encoding="utf-8") as fh:
            fh.write(f"# config_hash={self.cfg_hash}\n")
            fh.write(f"# tolerances={json.dumps(self.tolerances, sort_keys=True)}\n")
            write(fh)


def fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"
