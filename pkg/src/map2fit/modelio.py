"""File formats: model specs, sample CSVs, config files, JSON reports.

Model spec files are flat ``key = value`` text with a ``representation``
discriminator (``canonical``, ``redundant`` or ``matrices``); matrices are
given row-major.  Sample files are CSV with one positive decimal per line
and ``#`` comment lines.  Config files are ``key = value`` overrides of the
estimation defaults.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import InvalidModel
from .estimate import EstimationConfig
from .matrix2 import Matrix2
from .models import (
    CanonicalForm,
    CanonicalMap2,
    RateMatrixPair,
    RedundantMap2,
    canonical_to_matrices,
    matrices_to_redundant,
    redundant_to_matrices,
)

SCHEMA_FIT_REPORT = "map2fit.fit-report/1"
SCHEMA_KL = "map2fit.kl/1"


@dataclasses.dataclass(frozen=True)
class ModelSpec:
    """A parsed model file: its representation, matrices, and label."""

    representation: str
    pair: RateMatrixPair
    label: str
    canonical: Optional[CanonicalMap2] = None
    redundant: Optional[RedundantMap2] = None


def _parse_kv(path: Path) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().lower()] = value.strip()
    return values


def _require(values: dict[str, str], keys: tuple[str, ...], path: Path) -> list[str]:
    missing = [k for k in keys if k not in values]
    if missing:
        raise ValueError(f"{path}: missing keys {missing}")
    return [values[k] for k in keys]


def load_model(path: Union[str, Path]) -> ModelSpec:
    """Parse a model spec file into a validated model."""
    path = Path(path)
    values = _parse_kv(path)
    rep = values.get("representation", "").lower()
    label = values.get("label", path.stem)

    if rep == "canonical":
        form_raw, = _require(values, ("form",), path)
        form = {"one": CanonicalForm.ONE, "1": CanonicalForm.ONE,
                "two": CanonicalForm.TWO, "2": CanonicalForm.TWO}.get(form_raw.lower())
        if form is None:
            raise ValueError(f"{path}: form must be one|two, got {form_raw!r}")
        x, y, u, v = map(float, _require(values, ("x", "y", "u", "v"), path))
        model = CanonicalMap2(form, x, y, u, v)
        return ModelSpec(rep, canonical_to_matrices(model), label, canonical=model)

    if rep == "redundant":
        keys = ("lambda1", "lambda2", "p120", "p111", "p210", "p211")
        params = map(float, _require(values, keys, path))
        model = RedundantMap2(*params)
        return ModelSpec(rep, redundant_to_matrices(model), label, redundant=model)

    if rep == "matrices":
        d0_raw, d1_raw = _require(values, ("d0", "d1"), path)
        d0 = [float(tok) for tok in d0_raw.replace(",", " ").split()]
        d1 = [float(tok) for tok in d1_raw.replace(",", " ").split()]
        if len(d0) != 4 or len(d1) != 4:
            raise ValueError(f"{path}: d0 and d1 need 4 row-major entries each")
        pair = RateMatrixPair(Matrix2(*d0), Matrix2(*d1))
        return ModelSpec(rep, pair, label)

    raise ValueError(
        f"{path}: representation must be canonical|redundant|matrices, got {rep!r}"
    )


def read_sample(path: Union[str, Path]) -> np.ndarray:
    """One positive decimal per line; '#' lines and blanks are skipped."""
    path = Path(path)
    times = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            times.append(float(line))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: not a number: {raw!r}") from exc
    if not times:
        raise ValueError(f"{path}: no observations found")
    return np.asarray(times, dtype=float)


def write_sample(path: Union[str, Path], times: np.ndarray, header: str = "") -> None:
    path = Path(path)
    with path.open("w") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for t in np.asarray(times, dtype=float):
            fh.write(f"{float(t)!r}\n")


_CONFIG_KEYS = {
    "tau": ("tau", float),
    "multistarts": ("multistart_count", int),
    "multistart_count": ("multistart_count", int),
    "seed": ("seed", int),
    "max_iterations": ("max_iterations", int),
    "step_tol": ("step_tol", float),
    "objective_tol": ("objective_tol", float),
    "rate_min": ("rate_min", float),
    "rate_max": ("rate_max", float),
    "jump_min": ("jump_min", float),
    "jump_max": ("jump_max", float),
}


def load_config(path: Union[str, Path], base: EstimationConfig) -> EstimationConfig:
    """Overlay 'key = value' config-file entries on top of a base config."""
    values = _parse_kv(Path(path))
    updates: dict[str, object] = {}
    rate = list(base.rate_bounds)
    jump = list(base.jump_bounds)
    for key, raw in values.items():
        if key not in _CONFIG_KEYS:
            raise ValueError(f"{path}: unknown config key {key!r}")
        name, cast = _CONFIG_KEYS[key]
        value = cast(raw)
        if name == "rate_min":
            rate[0] = value
        elif name == "rate_max":
            rate[1] = value
        elif name == "jump_min":
            jump[0] = value
        elif name == "jump_max":
            jump[1] = value
        else:
            updates[name] = value
    updates["rate_bounds"] = tuple(rate)
    updates["jump_bounds"] = tuple(jump)
    return dataclasses.replace(base, **updates)


def model_as_dict(pair: RateMatrixPair, canonical: Optional[CanonicalMap2] = None) -> dict:
    """All three representations of a model, for reports."""
    out: dict[str, object] = {
        "matrices": {
            "d0": [[pair.d0.a11, pair.d0.a12], [pair.d0.a21, pair.d0.a22]],
            "d1": [[pair.d1.a11, pair.d1.a12], [pair.d1.a21, pair.d1.a22]],
        }
    }
    if canonical is not None:
        out["canonical"] = {
            "form": canonical.form.value,
            "x": canonical.x,
            "y": canonical.y,
            "u": canonical.u,
            "v": canonical.v,
        }
    try:
        red = matrices_to_redundant(pair)
        out["redundant"] = {
            "lambda1": red.lambda1,
            "lambda2": red.lambda2,
            "p120": red.p120,
            "p111": red.p111,
            "p210": red.p210,
            "p211": red.p211,
        }
    except InvalidModel:
        out["redundant"] = None
    return out


def write_json(path: Optional[Union[str, Path]], payload: dict) -> str:
    """Serialize a report; writes to path when given, always returns the text."""
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
