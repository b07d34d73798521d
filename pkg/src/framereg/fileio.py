"""Versioned text file formats: frame sets, ground-truth pairs, match results.

All floats are written with shortest round-trip decimal representation, so
parse(write(x)) reproduces values bit-for-bit.
"""

import json
from dataclasses import dataclass

import numpy as np

from .affine import AffineParams
from .engine import EngineConfig, MatchResult
from .frames import FrameSet
from .nonrigid import NonRigidParams
from .rigid import RigidParams

FRAMESET_MAGIC = "framereg-frameset"
TRUTH_MAGIC = "framereg-truth"
RESULT_MAGIC = "framereg-result"
FORMAT_VERSION = 1


class FormatError(Exception):
    """A file failed to parse; the message carries line/record context."""


def _fmt(v):
    return repr(float(v))


# -- frame sets ---------------------------------------------------------------

def write_frameset(fs: FrameSet, path, units="pixels"):
    """One line per frame: a11 a21 a12 a22 x y (column-major shape matrix)."""
    lines = [f"{FRAMESET_MAGIC} {FORMAT_VERSION}", f"units {units}"]
    for n in range(fs.count):
        lines.append(" ".join(_fmt(v) for v in fs.vecs[:, n]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_frameset(path):
    """Parse a frame-set file; returns (FrameSet, units)."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise FormatError(f"{path}: empty file")
    magic = lines[0].split()
    if len(magic) != 2 or magic[0] != FRAMESET_MAGIC:
        raise FormatError(f"{path}:1: not a frame-set file")
    if int(magic[1]) != FORMAT_VERSION:
        raise FormatError(f"{path}:1: unsupported version {magic[1]}")
    if len(lines) < 2 or not lines[1].startswith("units "):
        raise FormatError(f"{path}:2: missing units field")
    units = lines[1].split(None, 1)[1]
    records = []
    for i, ln in enumerate(lines[2:], start=3):
        parts = ln.split()
        if len(parts) != 6:
            raise FormatError(f"{path}:{i}: expected 6 values, got {len(parts)}")
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise FormatError(f"{path}:{i}: {exc}") from None
        if not all(np.isfinite(vals)):
            raise FormatError(f"{path}:{i}: non-finite value")
        det = vals[0] * vals[3] - vals[1] * vals[2]
        if det == 0.0:
            raise FormatError(f"{path}:{i}: singular shape matrix")
        records.append(vals)
    if not records:
        raise FormatError(f"{path}: no frame records")
    return FrameSet(np.array(records).T), units


# -- ground-truth pairs -------------------------------------------------------

def write_truth(pairs, path):
    lines = [f"{TRUTH_MAGIC} {FORMAT_VERSION}"]
    for m, n in sorted(pairs):
        lines.append(f"{m} {n}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_truth(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith(f"{TRUTH_MAGIC} "):
        raise FormatError(f"{path}: not a ground-truth file")
    pairs = set()
    for i, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 2:
            raise FormatError(f"{path}:{i}: expected two indices")
        try:
            pairs.add((int(parts[0]), int(parts[1])))
        except ValueError as exc:
            raise FormatError(f"{path}:{i}: {exc}") from None
    return frozenset(pairs)


# -- results ------------------------------------------------------------------

def transform_to_dict(params):
    if isinstance(params, RigidParams):
        return {"kind": "rigid", "s": params.s, "r": params.r.tolist(),
                "t": params.t.tolist()}
    if isinstance(params, AffineParams):
        return {"kind": "affine", "b": params.b.tolist(), "t": params.t.tolist()}
    if isinstance(params, NonRigidParams):
        return {"kind": "nonrigid", "beta": params.beta, "lambda": params.lam,
                "w_dot": params.w_dot.tolist(),
                "w_ddot": params.w_ddot.tolist(),
                "w_tdot": params.w_tdot.tolist()}
    raise TypeError(f"unknown transform parameters: {type(params).__name__}")


def config_to_dict(cfg: EngineConfig):
    return {"model": cfg.model_kind, "omega": cfg.omega_init, "lambda": cfg.lam,
            "beta": cfg.beta, "threshold": cfg.match_threshold, "tol": cfg.tol,
            "max_iters": cfg.max_iters, "location_only": cfg.location_only,
            "one_to_one": cfg.one_to_one, "kernel_mode": cfg.kernel_mode}


@dataclass(frozen=True)
class ResultRecord:
    """Everything a result file stores, in plain-data form."""

    config: dict
    transform: dict
    correspondences: tuple
    q_trace: tuple
    iterations: int
    converged: bool

    @classmethod
    def from_match(cls, result: MatchResult, cfg: EngineConfig):
        return cls(config=config_to_dict(cfg),
                   transform=transform_to_dict(result.transform),
                   correspondences=tuple((m, n, p)
                                         for m, n, p in result.correspondences),
                   q_trace=tuple(result.q_trace),
                   iterations=result.iterations,
                   converged=result.converged)


def write_result(record: ResultRecord, path):
    doc = {"format": RESULT_MAGIC, "version": FORMAT_VERSION,
           "config": record.config, "transform": record.transform,
           "correspondences": [list(c) for c in record.correspondences],
           "q_trace": list(record.q_trace), "iterations": record.iterations,
           "converged": record.converged}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_result(path) -> ResultRecord:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None
    if doc.get("format") != RESULT_MAGIC:
        raise FormatError(f"{path}: not a result file")
    if doc.get("version") != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {doc.get('version')}")
    try:
        return ResultRecord(
            config=doc["config"], transform=doc["transform"],
            correspondences=tuple((int(m), int(n), float(p))
                                  for m, n, p in doc["correspondences"]),
            q_trace=tuple(float(q) for q in doc["q_trace"]),
            iterations=int(doc["iterations"]), converged=bool(doc["converged"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed result document: {exc}") from None
