"""JSON problem/result files.

A problem file holds exactly one of three input forms::

    {"version": "1.0", "dim": 2, "parameter_names": ["theta"],
     "rho": {"re": [...], "im": [...]},
     "derivatives": [{"re": [...], "im": [...]}]}

    {"version": "1.0", "dim": 4, "parameter_names": ["theta"],
     "generators": [{"re": [...], "im": [...]}],
     "initial_state": {"re": [...], "im": [...]}}

    {"version": "1.0", "family": {"id": "phase-noise-qubit",
                                  "parameters": {"theta": 0.3, "nu": 0.5}}}

Complex matrices are flattened row-major into separate real and imaginary
arrays of length ``dim**2``. Floats are written with Python's shortest
round-trip repr, so parse -> serialize -> parse is bit-exact.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import QfimError
from .families import BUILTIN, load_builtin
from .states import DerivativeSet, UnitaryEncoding, validate_density

FORMAT_VERSION = "1.0"
SUPPORTED_VERSIONS = ("1.0",)


class FormatError(QfimError, ValueError):
    """Malformed problem file; ``where`` names the offending field or line."""

    def __init__(self, message, where=None):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


@dataclass
class Problem:
    kind: str  # "explicit", "unitary" or "family"
    dim: Optional[int] = None
    parameter_names: list = field(default_factory=list)
    rho: Optional[np.ndarray] = None
    derivatives: Optional[list] = None
    generators: Optional[list] = None
    initial_state: Optional[np.ndarray] = None
    family: Optional[str] = None
    family_parameters: Optional[dict] = None
    version: str = FORMAT_VERSION


def encode_matrix(m):
    m = np.asarray(m, dtype=np.complex128)
    flat = m.reshape(-1)
    return {"re": [float(x) for x in flat.real], "im": [float(x) for x in flat.imag]}


def decode_matrix(obj, dim, where):
    if not isinstance(obj, dict) or "re" not in obj:
        raise FormatError("expected an object with 're' (and optionally 'im') arrays", where)
    re = obj["re"]
    im = obj.get("im", [0.0] * len(re) if isinstance(re, list) else None)
    for part, arr in (("re", re), ("im", im)):
        if not isinstance(arr, list):
            raise FormatError(f"'{part}' must be an array", where)
        if len(arr) != dim * dim:
            raise FormatError(f"'{part}' has {len(arr)} entries, expected dim^2 = {dim * dim}", where)
        for k, x in enumerate(arr):
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                raise FormatError(f"'{part}[{k}]' is not a finite number: {x!r}", where)
    return (np.array(re, dtype=float) + 1j * np.array(im, dtype=float)).reshape(dim, dim)


def _get_dim(doc):
    dim = doc.get("dim")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise FormatError(f"must be a positive integer, got {dim!r}", "dim")
    return dim


def problem_from_dict(doc) -> Problem:
    if not isinstance(doc, dict):
        raise FormatError("top level must be a JSON object")
    version = doc.get("version")
    if version is None:
        raise FormatError("missing mandatory format version", "version")
    if version not in SUPPORTED_VERSIONS:
        raise FormatError(f"unsupported version {version!r}; supported: {SUPPORTED_VERSIONS}", "version")
    forms = [k for k in ("rho", "generators", "family") if k in doc]
    if len(forms) != 1:
        raise FormatError(f"exactly one of 'rho', 'generators', 'family' must be present, found {forms or 'none'}")
    names = doc.get("parameter_names", [])
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        raise FormatError("must be a list of strings", "parameter_names")

    if forms[0] == "family":
        fam = doc["family"]
        if not isinstance(fam, dict) or not isinstance(fam.get("id"), str):
            raise FormatError("must be an object with a string 'id'", "family")
        if fam["id"] not in BUILTIN:
            raise FormatError(f"unknown builtin {fam['id']!r}; choose from {sorted(BUILTIN)}", "family.id")
        params = fam.get("parameters", {})
        expected = BUILTIN[fam["id"]]["parameters"]
        if not isinstance(params, dict):
            raise FormatError("must be an object mapping parameter names to numbers", "family.parameters")
        for key, val in params.items():
            if key not in expected:
                raise FormatError(f"unknown parameter {key!r}; expected {expected}", "family.parameters")
            if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
                raise FormatError(f"{key} must be a finite number", f"family.parameters.{key}")
        if BUILTIN[fam["id"]]["kind"] == "family":
            missing = [p for p in expected if p not in params]
            if missing:
                raise FormatError(f"missing parameters {missing}", "family.parameters")
        if "dim" in doc:
            _get_dim(doc)
        return Problem(
            "family",
            dim=doc.get("dim"),
            parameter_names=names or list(expected),
            family=fam["id"],
            family_parameters={k: float(v) for k, v in params.items()},
            version=version,
        )

    dim = _get_dim(doc)
    if forms[0] == "rho":
        rho = decode_matrix(doc["rho"], dim, "rho")
        derivs = doc.get("derivatives")
        if not isinstance(derivs, list) or not derivs:
            raise FormatError("must be a non-empty list of matrices", "derivatives")
        mats = [decode_matrix(m, dim, f"derivatives[{i}]") for i, m in enumerate(derivs)]
        if names and len(names) != len(mats):
            raise FormatError(f"{len(names)} names for {len(mats)} derivatives", "parameter_names")
        return Problem(
            "explicit",
            dim=dim,
            parameter_names=names or [f"p{i}" for i in range(len(mats))],
            rho=rho,
            derivatives=mats,
            version=version,
        )

    gens = doc["generators"]
    if not isinstance(gens, list) or not gens:
        raise FormatError("must be a non-empty list of matrices", "generators")
    if "initial_state" not in doc:
        raise FormatError("required together with 'generators'", "initial_state")
    mats = [decode_matrix(m, dim, f"generators[{i}]") for i, m in enumerate(gens)]
    if names and len(names) != len(mats):
        raise FormatError(f"{len(names)} names for {len(mats)} generators", "parameter_names")
    return Problem(
        "unitary",
        dim=dim,
        parameter_names=names or [f"p{i}" for i in range(len(mats))],
        generators=mats,
        initial_state=decode_matrix(doc["initial_state"], dim, "initial_state"),
        version=version,
    )


def parse_problem(text) -> Problem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    return problem_from_dict(doc)


def load_problem(path) -> Problem:
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read())


def problem_to_dict(p: Problem) -> dict:
    doc = {"version": p.version}
    if p.dim is not None:
        doc["dim"] = p.dim
    doc["parameter_names"] = list(p.parameter_names)
    if p.kind == "explicit":
        doc["rho"] = encode_matrix(p.rho)
        doc["derivatives"] = [encode_matrix(m) for m in p.derivatives]
    elif p.kind == "unitary":
        doc["generators"] = [encode_matrix(m) for m in p.generators]
        doc["initial_state"] = encode_matrix(p.initial_state)
    else:
        doc["family"] = {"id": p.family, "parameters": dict(p.family_parameters)}
    return doc


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False)


def dump_problem(p: Problem) -> str:
    return dumps(problem_to_dict(p))


def resolve(p: Problem):
    """Turn a problem into ``("state", rho, derivatives)`` or ``("unitary", encoding)``.

    Validation failures of the contained matrices are reported as
    :class:`FormatError`.
    """
    try:
        if p.kind == "explicit":
            return "state", validate_density(p.rho), DerivativeSet(p.derivatives)
        if p.kind == "unitary":
            return "unitary", UnitaryEncoding(p.generators, p.initial_state)
        kind, obj = load_builtin(p.family)
        if kind == "unitary":
            return "unitary", obj
        eps = [p.family_parameters[n] for n in obj.parameter_names]
        rho, d = obj.at(eps)
        return "state", rho, d
    except (ValueError, QfimError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(str(exc), p.kind) from exc


def result_to_dict(res, parameter_names, include_slds=False, crb=None) -> dict:
    doc = {
        "version": FORMAT_VERSION,
        "method": res.method,
        "parameter_names": list(parameter_names),
        "qfim": res.h.tolist(),
        "diagnostics": _jsonable(res.diagnostics.to_dict()),
    }
    if include_slds and res.slds is not None:
        doc["slds"] = [encode_matrix(s) for s in res.slds]
    if crb is not None:
        doc["crb"] = crb.to_dict()
    return doc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj
