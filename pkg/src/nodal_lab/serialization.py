"""Versioned JSON documents. Floats are written as 17-significant-digit strings so they round-trip exactly."""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

FORMAT = "nodal-lab"
VERSION = 1


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def parse(s) -> float:
    return float(s)


def encode(obj):
    """Plain JSON types; floats become decimal strings, complex numbers ``[re, im]`` string pairs."""
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [fmt(obj.real), fmt(obj.imag)]
    if isinstance(obj, np.ndarray):
        return [encode(x) for x in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: encode(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(x) for x in obj]
    raise TypeError(f"cannot encode {type(obj).__name__}")


def document(kind: str, data) -> dict:
    return {"format": FORMAT, "version": VERSION, "kind": kind, "data": encode(data)}


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_document(path, doc: dict) -> None:
    Path(path).write_text(dumps(doc))


def read_document(path, kind: str | None = None) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != FORMAT:
        raise ValueError(f"{path}: not a {FORMAT} document")
    if doc.get("version") != VERSION:
        raise ValueError(f"{path}: unsupported version {doc.get('version')!r}")
    if kind is not None and doc.get("kind") != kind:
        raise ValueError(f"{path}: expected a {kind!r} document, found {doc.get('kind')!r}")
    return doc


def _floats(xs) -> np.ndarray:
    return np.array([parse(x) for x in xs])


def _complexes(xs) -> np.ndarray:
    return np.array([complex(parse(a), parse(b)) for a, b in xs])


# -- domain objects ----------------------------------------------------------------


def extremal_document(P) -> dict:
    return document("extremal-polynomial", {
        "degree": P.N,
        "R": P.R,
        "kappa": P.kappa,
        "r_N": P.r_N,
        "coefficients": np.asarray(P.coefficients, dtype=complex),
        "log_abs_a": P.log_abs_a,
        "phase_a": P.phase_a,
        "truncation_bound": P.truncation_bound,
        "conditioning_bound": P.conditioning_bound,
        "retries": P.retries,
        "r_initial": P.r_initial,
        "provenance": P.provenance,
    })


def extremal_from_document(doc: dict):
    from .extremal import ExtremalPolynomial

    d = doc["data"]
    prov = {k: (parse(v) if k in ("c4_measured", "c5_eff", "c6_eff", "a0_defect", "r_decay") else v)
            for k, v in d["provenance"].items()}
    return ExtremalPolynomial(int(d["degree"]), parse(d["R"]), parse(d["kappa"]), parse(d["r_N"]),
                              _complexes(d["coefficients"]), _floats(d["log_abs_a"]), _floats(d["phase_a"]),
                              parse(d["truncation_bound"]), parse(d["conditioning_bound"]), int(d["retries"]),
                              parse(d["r_initial"]), prov)


def transplant_document(T) -> dict:
    return document("spherical-transplant", {
        "degree": T.N,
        "alpha": np.asarray(T.alpha, dtype=complex),
        "log_A": T.log_A,
        "log_delta": T.log_delta,
        "M_N": T.M_N,
        "kappa": T.kappa,
        "B_max": T.B_max,
    })


def expansion_document(e) -> dict:
    return document("spherical-harmonic-expansion", {"degree": e.N, "log_abs": e.log_abs, "phase": e.phase})


def expansion_from_document(doc: dict):
    from .sphere import SphericalHarmonicExpansion

    d = doc["data"]
    return SphericalHarmonicExpansion(int(d["degree"]), _floats(d["log_abs"]), _floats(d["phase"]))


def estimate_document(rec) -> dict:
    return document("nadirashvili-estimate", {
        "d": rec.d,
        "area": rec.area,
        "p": rec.candidate.p,
        "q": rec.candidate.q,
        "sign_changes": rec.sign_changes,
        "construction_bound": rec.construction_bound,
        "evaluations": rec.evaluations,
        "restarts": rec.restarts,
        "seed": rec.seed,
        "start": rec.start,
        "caveat": rec.caveat,
    })


def candidate_from_document(doc: dict):
    from .nadirashvili import Candidate

    d = doc["data"]
    return Candidate(_floats(d["p"]), _floats(d["q"]))
