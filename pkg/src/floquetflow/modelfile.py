"""JSON model files: parsing, validation, canonical serialization."""

from __future__ import annotations

import json
import os
import random
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .algebra import LieAlgebra, builtin, close_from_representation
from .symbolic.expr import PARAM
from .symbolic.printing import ExpressionSyntaxError, format_expr, parse_expr
from .symbolic.series import FourierOperator

__all__ = [
    "ModelError",
    "Model",
    "load_model",
    "parse_model",
    "serialize_model",
    "bundled_models",
    "resolve_model_path",
    "atomic_write",
]


class ModelError(ValueError):
    """Invalid model file; ``where`` names the offending field."""

    def __init__(self, message: str, where: str = "", line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f"line {line}, column {column}: "
        super().__init__(f"{loc}{where + ': ' if where else ''}{message}")
        self.where = where
        self.line = line
        self.column = column


@dataclass
class Model:
    name: str
    algebra: LieAlgebra
    algebra_spec: dict
    parameters: dict
    envelopes: dict
    fourier: FourierOperator | None
    fourier_text: dict
    fast: object = None
    fast_spec: dict | None = None
    task: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def envelope_names(self):
        return sorted(self.envelopes)

    def numeric_params(self, seed: int | None = None) -> dict:
        """Parameter values; unbound ones are drawn from ``U(-1, 1)`` when ``seed`` is given."""
        rng = random.Random(seed)
        out = {}
        for k in sorted(self.parameters):
            v = self.parameters[k]
            if v is None:
                if seed is None:
                    raise ModelError("parameter has no numeric value; bind it or pass --seed", f"parameters.{k}")
                v = rng.uniform(-1, 1)
            out[k] = float(v)
        return out

    def numeric_envelopes(self) -> dict:
        from .numeric.envelopes import envelope_from_spec

        out = {}
        for k, spec in self.envelopes.items():
            if spec is None:
                raise ModelError("envelope has no numeric form", f"envelopes.{k}")
            out[k] = envelope_from_spec(spec)
        return out


def _parse_algebra(spec) -> LieAlgebra:
    if not isinstance(spec, dict):
        raise ModelError("expected an object", "algebra")
    if "builtin" in spec:
        try:
            return builtin(spec["builtin"])
        except ValueError as exc:
            raise ModelError(str(exc), "algebra.builtin") from None
    if "matrices" in spec:
        mats = spec["matrices"]
        if not isinstance(mats, dict) or not mats:
            raise ModelError("expected {label: matrix}", "algebra.matrices")
        labels = list(mats)
        arrs = []
        for lab in labels:
            a = np.asarray(mats[lab], dtype=float)
            if a.ndim == 3 and a.shape[-1] == 2:
                a = a[..., 0] + 1j * a[..., 1]
            elif a.ndim != 2:
                raise ModelError("entries must be numbers or [re, im] pairs", f"algebra.matrices.{lab}")
            arrs.append(a.astype(complex))
        try:
            alg, report = close_from_representation(arrs, include_identity=bool(spec.get("include_identity", False)),
                                                     labels=labels)
        except Exception as exc:  # linear dependence, non-closure
            raise ModelError(str(exc), "algebra.matrices") from None
        if not report.exact:
            raise ModelError(f"algebra does not close (residual {report.residual_norm:.3e})", "algebra.matrices")
        return alg
    raise ModelError("need 'builtin' or 'matrices'", "algebra")


def _parse_fourier(block, alg: LieAlgebra, envelopes) -> FourierOperator:
    if not isinstance(block, dict):
        raise ModelError("expected {harmonic: {label: expression}}", "fourier")
    data = {}
    for key, entries in block.items():
        try:
            n = int(key)
        except ValueError:
            raise ModelError(f"harmonic index {key!r} is not an integer", "fourier") from None
        if not isinstance(entries, dict):
            raise ModelError("expected {label: expression}", f"fourier.{key}")
        row = {}
        for lab, text in entries.items():
            where = f"fourier.{key}.{lab}"
            if lab not in alg.labels:
                raise ModelError(f"unknown generator label {lab!r}; algebra has {list(alg.labels)}", where)
            try:
                row[lab] = parse_expr(str(text), envelopes=envelopes)
            except ExpressionSyntaxError as exc:
                raise ModelError(str(exc), where, column=exc.pos + 1, line=None) from None
        data[n] = row
    op = FourierOperator.from_labels(alg, data)
    if any(n < 0 for n in data):
        if not op.is_hermitian():
            raise ModelError("harmonics n and -n given but not Hermitian conjugates", "fourier")
    else:
        op = op.hermitian_completed()
    return op


def _parse_fast(block, alg: LieAlgebra):
    from .fastmod import DoubleFourierHamiltonian

    ratio = block.get("omega_ratio")
    if not isinstance(ratio, (str, int)):
        raise ModelError("omega_ratio must be an exact rational string such as '1/10'", "fast.omega_ratio")
    entries = {}
    for i, ent in enumerate(block.get("entries", [])):
        where = f"fast.entries[{i}]"
        vec = [parse_expr("0")] * alg.dim
        for lab, text in ent.get("coeffs", {}).items():
            if lab not in alg.labels:
                raise ModelError(f"unknown generator label {lab!r}", where)
            try:
                vec[alg.index(lab)] = parse_expr(str(text))
            except ExpressionSyntaxError as exc:
                raise ModelError(str(exc), f"{where}.{lab}") from None
        entries[(int(ent["n"]), int(ent["j"]))] = vec
    try:
        return DoubleFourierHamiltonian(alg, entries, ratio)
    except (TypeError, ValueError) as exc:
        raise ModelError(str(exc), "fast") from None


def parse_model(data: dict, name: str = "model") -> Model:
    if not isinstance(data, dict):
        raise ModelError("top level must be an object")
    alg_spec = data.get("algebra")
    alg = _parse_algebra(alg_spec)
    params = data.get("parameters", {}) or {}
    envs = data.get("envelopes", {}) or {}
    for k, v in params.items():
        if v is not None and not isinstance(v, (int, float)):
            raise ModelError("parameter value must be a number or null", f"parameters.{k}")
    fourier = None
    ftext = data.get("fourier")
    if ftext is not None:
        fourier = _parse_fourier(ftext, alg, list(envs))
        declared = set(params) | set(envs)
        for nm, k in fourier.atoms():
            if nm not in declared:
                kind = "parameters" if k == PARAM else "envelopes"
                raise ModelError(f"symbol {nm!r} is not declared", kind)
    fast = None
    if data.get("fast") is not None:
        fast = _parse_fast(data["fast"], alg)
    if fourier is None and fast is None:
        raise ModelError("need a 'fourier' or a 'fast' block")
    return Model(data.get("name", name), alg, alg_spec, dict(params), dict(envs), fourier, ftext or {},
                 fast, data.get("fast"), dict(data.get("task", {}) or {}), dict(data.get("output", {}) or {}))


def serialize_model(model: Model) -> dict:
    """Canonical JSON-ready dict; expressions reprinted in normal form."""
    out = {"name": model.name, "algebra": model.algebra_spec, "parameters": model.parameters,
           "envelopes": model.envelopes}
    if model.fourier is not None:
        four = {}
        given = sorted(int(k) for k in model.fourier_text)
        for n in given:
            row = {lab: format_expr(c) for lab, c in model.fourier.by_label(n).items()}
            four[str(n)] = row
        out["fourier"] = four
    if model.fast_spec is not None:
        ents = []
        for (n, j), vec in sorted(model.fast.entries.items()):
            if n < 0 or (n == 0 and j < 0):
                continue
            ents.append({"n": n, "j": j, "coeffs": {lab: format_expr(c) for lab, c in zip(model.algebra.labels, vec) if c}})
        out["fast"] = {"omega_ratio": str(model.fast.rho), "entries": ents}
    if model.task:
        out["task"] = model.task
    if model.output:
        out["output"] = model.output
    return out


def bundled_models() -> list:
    root = resources.files("floquetflow") / "models"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_model_path(spec: str) -> Path:
    p = Path(spec)
    if p.exists():
        return p
    name = spec[:-5] if spec.endswith(".json") else spec
    cand = resources.files("floquetflow") / "models" / f"{name}.json"
    if cand.is_file():
        return Path(str(cand))
    raise ModelError(f"no such model file or bundled model {spec!r}; bundled: {bundled_models()}")


def load_model(spec: str) -> Model:
    path = resolve_model_path(spec)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(exc.msg, str(path), exc.lineno, exc.colno) from None
    return parse_model(data, name=path.stem)


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
