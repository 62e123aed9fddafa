"""Bundled schemes and the on-disk scheme format.

A scheme file is one UTF-8 JSON object::

    {
      "version": 1,
      "name": "paper-n4-q6",
      "order": 4,
      "cycles": 6,
      "representation": "ramp",            # or "stage"
      "parameters": [["0.0740...", "0.1242..."], ...],
      "provenance": "paper-table",         # or "derived", "external-file"
      "metadata": {"err_n": ..., "eff_n": ..., "xbar": ..., "basis_id": ...}
    }

Ramp records hold q pairs [c_i, d_i]; stage records hold q+1 pairs
[a_i, b_i] whose last b is null.  Numbers are decimal strings so that every
printed digit survives a round trip; complex values use Python's literal
syntax ("0.25+0.144j").
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DomainError, SchemeValidationError
from .scheme_core import TrotterScheme, compute_error_coefficients

FORMAT_VERSION = 1
FORMAT_KEYS = ("version", "name", "order", "cycles", "representation", "parameters",
               "provenance", "metadata")
PROVENANCES = ("paper-table", "derived", "external-file")
REPRESENTATIONS = ("ramp", "stage")
RAMP_SUM_TOL = 1e-12
ORDER_TOL = 1e-10
VERIFIABLE_ORDERS = (2, 4, 6, 8)

BUILTIN_NAMES = (
    "leapfrog",
    "omelyan-n2-q2",
    "forest-ruth-n4-q3",
    "suzuki-n4-q5",
    "blanes-moan-n4-q6",
    "paper-n4-q6",
    "yoshida-n6-q7",
    "blanes-moan-n6-q10",
    "paper-n6-q14",
)


@dataclass(frozen=True)
class SchemeRecord:
    """A scheme exactly as stored on disk (numbers kept as strings)."""

    name: str
    order: int
    cycles: int
    representation: str
    parameters: tuple
    provenance: str
    metadata: dict = field(default_factory=dict, compare=False)

    def to_json(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "name": self.name,
            "order": self.order,
            "cycles": self.cycles,
            "representation": self.representation,
            "parameters": [list(p) for p in self.parameters],
            "provenance": self.provenance,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_json(cls, obj) -> "SchemeRecord":
        if not isinstance(obj, dict):
            raise SchemeValidationError("format", "scheme file must hold one JSON object")
        missing = [k for k in FORMAT_KEYS if k not in obj and k != "metadata"]
        if missing:
            raise SchemeValidationError("format", f"missing keys: {', '.join(missing)}")
        if obj["version"] != FORMAT_VERSION:
            raise SchemeValidationError("version", f"unsupported version {obj['version']!r}")
        rep = obj["representation"]
        if rep not in REPRESENTATIONS:
            raise SchemeValidationError("representation", f"unknown representation {rep!r}")
        prov = obj["provenance"]
        if prov not in PROVENANCES:
            raise SchemeValidationError("provenance", f"unknown provenance {prov!r}")
        try:
            order = int(obj["order"])
            cycles = int(obj["cycles"])
            params = tuple(tuple(None if v is None else str(v) for v in pair)
                           for pair in obj["parameters"])
        except (TypeError, ValueError) as exc:
            raise SchemeValidationError("format", f"malformed field: {exc}") from exc
        if any(len(p) != 2 for p in params):
            raise SchemeValidationError("format", "parameters must be pairs")
        expected = cycles if rep == "ramp" else cycles + 1
        if len(params) != expected:
            raise SchemeValidationError(
                "cycles", f"{rep} record with cycles={cycles} needs {expected} pairs, got {len(params)}")
        return cls(str(obj["name"]), order, cycles, rep, params, prov, dict(obj.get("metadata", {})))


def _parse(value: str):
    if value is None:
        return None
    try:
        return complex(value) if "j" in value else float(value)
    except ValueError as exc:
        raise SchemeValidationError("format", f"not a number: {value!r}") from exc


def _format(value) -> str:
    value = complex(value)
    if value.imag == 0:
        return repr(value.real)
    return repr(value).strip("()")


def _array(values):
    arr = np.array(values)
    if np.iscomplexobj(arr) and not np.any(arr.imag):
        arr = arr.real
    return arr


def scheme_from_record(record: SchemeRecord, verify: bool = True) -> TrotterScheme:
    """Build the scheme and, unless ``verify`` is false, check the ramp sums
    and the declared order."""
    first = [_parse(p[0]) for p in record.parameters]
    second = [_parse(p[1]) for p in record.parameters]
    meta = dict(order=record.order, name=record.name, source=record.provenance)
    if record.representation == "ramp":
        scheme = TrotterScheme.from_ramp(_array(first), _array(second), **meta)
    else:
        if second[-1] is not None:
            raise SchemeValidationError("format", "last stage pair must have a null b entry")
        scheme = TrotterScheme.from_stage(_array(first), _array(second[:-1]), **meta)
    if verify:
        verify_scheme(scheme, record.order)
    return scheme


def verify_scheme(scheme: TrotterScheme, order: int) -> None:
    """Raise SchemeValidationError unless the ramp sums are 1/2 and all
    coefficients below degree order+1 vanish."""
    c, d = scheme.ramp
    for label, s in (("c", c.sum()), ("d", d.sum())):
        if abs(s - 0.5) > RAMP_SUM_TOL:
            raise SchemeValidationError(
                "ramp-sum", f"sum of {label}_i is {complex(s).real:.17g}, expected 0.5")
    if order not in VERIFIABLE_ORDERS:
        raise SchemeValidationError(
            "order", f"order {order} cannot be verified with the degree-7 engine; "
                     "load with verification skipped")
    coeffs = compute_error_coefficients(scheme)
    for deg in range(3, order + 1, 2):
        worst = float(np.max(np.abs(coeffs.degree(deg))))
        if worst > ORDER_TOL:
            raise SchemeValidationError(
                "order", f"degree-{deg} coefficients reach {worst:.3e} for declared order {order}")


def record_from_scheme(scheme: TrotterScheme, representation: str = "ramp",
                       provenance: str | None = None, name: str | None = None,
                       order: int | None = None, metadata: dict | None = None) -> SchemeRecord:
    if representation not in REPRESENTATIONS:
        raise DomainError(f"representation must be one of {REPRESENTATIONS}")
    provenance = provenance or scheme.source or "derived"
    if provenance not in PROVENANCES:
        provenance = "derived"
    order = order or scheme.order
    if not order:
        raise DomainError("scheme order unknown; pass order=")
    if representation == "ramp":
        pairs = tuple((_format(c), _format(d)) for c, d in zip(*scheme.ramp))
    else:
        b = list(scheme.stage_b) + [None]
        pairs = tuple((_format(a), None if bb is None else _format(bb))
                      for a, bb in zip(scheme.stage_a, b))
    if metadata is None:
        metadata = scheme_metadata(scheme, order)
    return SchemeRecord(name or scheme.name or "unnamed", int(order), scheme.q,
                        representation, pairs, provenance, metadata)


def scheme_metadata(scheme: TrotterScheme, order: int) -> dict:
    from .error_functions import eff_n, origin_distance

    meta = {"xbar": origin_distance(scheme)}
    if order in (2, 4, 6):
        coeffs = compute_error_coefficients(scheme)
        err = float(np.linalg.norm(coeffs.leading(order)))
        meta.update(err_n=err, eff_n=eff_n(err, scheme.q, order), basis_id=coeffs.basis_id)
    return meta


def load_record(path) -> SchemeRecord:
    try:
        text = Path(path).read_text(encoding="utf-8")
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemeValidationError("format", f"{path}: invalid JSON ({exc})") from exc
    return SchemeRecord.from_json(obj)


def save_record(record: SchemeRecord, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(record.to_json(), indent=2) + "\n", encoding="utf-8")
    return path


def load_scheme(path, verify: bool = True) -> TrotterScheme:
    """Read a scheme file.  ``verify=False`` is intended for external
    records (e.g. orders beyond the engine's degree)."""
    return scheme_from_record(load_record(path), verify=verify)


def save_scheme(scheme, path, representation: str = "ramp") -> Path:
    """Write a TrotterScheme or SchemeRecord to ``path``."""
    record = scheme if isinstance(scheme, SchemeRecord) else record_from_scheme(scheme, representation)
    return save_record(record, path)


def _data_dir():
    return resources.files("trotterkit") / "data"


def builtin_record(name: str) -> SchemeRecord:
    if name not in BUILTIN_NAMES:
        raise KeyError(f"unknown scheme {name!r}; available: {', '.join(BUILTIN_NAMES)}")
    text = (_data_dir() / f"{name}.json").read_text(encoding="utf-8")
    return SchemeRecord.from_json(json.loads(text))


_CACHE: dict[str, TrotterScheme] = {}


def get_builtin(name: str) -> TrotterScheme:
    """A bundled scheme by name (see BUILTIN_NAMES)."""
    if name not in _CACHE:
        _CACHE[name] = scheme_from_record(builtin_record(name))
    return _CACHE[name]


def list_schemes(external_dir=None) -> list[TrotterScheme]:
    """Built-in schemes followed by every *.json file in ``external_dir``
    (loaded with verification when the order allows it)."""
    out = [get_builtin(n) for n in BUILTIN_NAMES]
    if external_dir:
        for path in sorted(Path(external_dir).glob("*.json")):
            rec = load_record(path)
            out.append(scheme_from_record(rec, verify=rec.order in VERIFIABLE_ORDERS))
    return out


def resolve(ref: str, verify: bool = True) -> TrotterScheme:
    """Built-in name or path to a scheme file."""
    if ref in BUILTIN_NAMES:
        return get_builtin(ref)
    if os.path.exists(ref):
        return load_scheme(ref, verify=verify)
    raise KeyError(f"{ref!r} is neither a built-in scheme ({', '.join(BUILTIN_NAMES)}) nor a file")


# Regeneration of the derived records

TABLE_N4_Q6 = (
    "0.074082572180463262", "0.232923088374338803", "0.296820560634668408",
    "0.122086989386933251", "-0.350153632343424469", "0.124240421767020743",
)
TABLE_N6_Q14 = (
    "0.037251326545569924", "0.120600278793781562", "0.266062994460763541",
    "0.163668553338143183", "0.071316838327437583", "0.058117508592333414",
    "0.188707697234255120", "-0.200016005078878524", "0.074145714537530386",
    "0.087345801243357893", "0.044234977360777830", "-0.230821838291030424",
    "-0.237197828922049295", "0.056583981858007803",
)


def _table_record(name: str, order: int, digits) -> SchemeRecord:
    # symmetric: d_i = c_{q+1-i}
    pairs = tuple((c, d) for c, d in zip(digits, reversed(digits)))
    rec = SchemeRecord(name, order, len(digits), "ramp", pairs, "paper-table")
    scheme = scheme_from_record(rec, verify=False)
    return SchemeRecord(name, order, len(digits), "ramp", pairs, "paper-table",
                        scheme_metadata(scheme, order))


def leapfrog_composition(weights) -> TrotterScheme:
    """Symmetric composition of leapfrog steps with the given weights."""
    w = np.asarray(weights, dtype=float)
    a = np.zeros(w.size + 1)
    a[:-1] += w / 2
    a[1:] += w / 2
    return TrotterScheme(a, w)


def interleaved_ramp(values) -> TrotterScheme:
    """Scheme from the half-sequence (c_1, d_1, c_2, d_2, ...) of a
    symmetric composition of a first-order map and its adjoint."""
    v = np.asarray(values, dtype=float)
    s = np.concatenate([v, v[::-1]])
    return TrotterScheme.from_ramp(s[0::2], s[1::2])


def _historical_seeds() -> dict[str, tuple[TrotterScheme, int]]:
    theta = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
    p = 1.0 / (4.0 - 4.0 ** (1.0 / 3.0))
    # triple-jump solution for order 6, outermost weight first
    w = [0.784513610477560, 0.235573213359357, -1.17767998417887]
    w_mid = 1.0 - 2.0 * sum(w)
    return {
        "forest-ruth-n4-q3": (leapfrog_composition([theta, 1 - 2 * theta, theta]), 4),
        "suzuki-n4-q5": (leapfrog_composition([p, p, 1 - 4 * p, p, p]), 4),
        "yoshida-n6-q7": (leapfrog_composition(w + [w_mid] + w[::-1]), 6),
        "blanes-moan-n4-q6": (interleaved_ramp(
            [0.0792036964311957, 0.1303114101821663, 0.2228614958676077,
             -0.3667132690474257, 0.3246481886897062, 0.1096884778767498]), 4),
        "blanes-moan-n6-q10": (interleaved_ramp(
            [0.050262764400392, 0.098553683500650, 0.314960616927694, -0.447346482695478,
             0.492426372489876, -0.425118767797691, 0.237063913978122, 0.195602488600053,
             0.346358189850727, -0.362762779254345]), 6),
    }


def derive_records(n_starts: int = 20) -> dict[str, SchemeRecord]:
    """Recompute every bundled record.  Historical schemes are seeded from
    their standard coefficients and re-solved to double precision by the
    constraint solver; the q = 2 second-order scheme is the optimizer's
    unique minimum."""
    from .optimizer import LMConfig, impose_constraints, multistart
    from .scheme_core import LEAPFROG

    recs = {"leapfrog": record_from_scheme(LEAPFROG, provenance="derived", name="leapfrog")}
    best = multistart(2, 2, LMConfig(n_starts=n_starts)).best.scheme
    recs["omelyan-n2-q2"] = record_from_scheme(best, provenance="derived", name="omelyan-n2-q2", order=2)
    for name, (seed, order) in _historical_seeds().items():
        s = impose_constraints(seed, order)
        recs[name] = record_from_scheme(s, provenance="derived", name=name, order=order)
    recs["paper-n4-q6"] = _table_record("paper-n4-q6", 4, TABLE_N4_Q6)
    recs["paper-n6-q14"] = _table_record("paper-n6-q14", 6, TABLE_N6_Q14)
    return {n: recs[n] for n in BUILTIN_NAMES}


def regenerate_data(directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return [save_record(r, directory / f"{n}.json") for n, r in derive_records().items()]


if __name__ == "__main__":  # pragma: no cover
    import sys

    for p in regenerate_data(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent / "data"):
        print(p)
