"""TOML experiment configuration: parsing, validation and canonical serialization.

A configuration has four sections::

    [run]          n, replicas, master_seed and numerical options
    [law]          kind, sigma_sq_diag, p (two_point only)
    [[family]]     one table per index set: kind + its parameters
    [[functions]]  one table per set: builtin (+ params) or coeffs

Errors raise :class:`ConfigError` carrying the offending field path and, when
it can be located, the line number in the source text.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field, fields

import toml

from .chebfn import BUILTIN_FUNCTIONS, TestFunction, builtin_function
from .ensemble import LAW_KINDS, IndexSetSpec, make_entry_law
from .montecarlo import ExperimentConfig, RunOptions

__all__ = ["ConfigError", "FunctionSpec", "ConfigBundle", "parse_config", "load_config", "dump_config",
           "config_hash"]


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is a dotted path, ``line`` is 1-based or ``None``."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class FunctionSpec:
    """Declarative test function: a built-in name with parameters, or monomial coefficients."""

    builtin: str | None = None
    params: tuple = ()
    coeffs: tuple | None = None
    label: str | None = None

    def build(self) -> TestFunction:
        if self.coeffs is not None:
            return TestFunction.polynomial(self.coeffs, self.label)
        fn = builtin_function(self.builtin, **dict(self.params))
        return fn if self.label is None else TestFunction(self.label, fn.coeffs, fn.func, fn.deriv)

    def to_dict(self) -> dict:
        out = {}
        if self.builtin is not None:
            out["builtin"] = self.builtin
            out.update(dict(self.params))
        else:
            out["coeffs"] = list(self.coeffs)
        if self.label is not None:
            out["label"] = self.label
        return out


@dataclass(frozen=True)
class ConfigBundle:
    experiment: ExperimentConfig
    functions: tuple = field(default=())

    @property
    def hash(self) -> str:
        return config_hash(self)


# section -> allowed keys
_RUN_KEYS = {"n", "replicas", "master_seed"} | {f.name for f in fields(RunOptions)}
_LAW_KEYS = {"kind", "sigma_sq_diag", "p"}
_FAMILY_KEYS = {"prefix": {"gamma"}, "window": {"a", "b"}, "stride": {"modulus", "residues"},
                "explicit": {"indices"}}
_FUNC_PARAMS = {"cos_t": {"t"}, "gauss_bump": {"w"}}


def _locate(text: str | None, section: str, index: int | None, key: str | None) -> int | None:
    """Best-effort line number of ``key`` inside ``[section]`` (or its ``index``-th ``[[section]]``)."""
    if text is None:
        return None
    header = re.compile(r"^\s*\[\[?\s*([A-Za-z_]+)\s*\]\]?")
    current, count, start = None, -1, None
    for i, line in enumerate(text.splitlines(), 1):
        m = header.match(line)
        if m:
            current = m.group(1)
            if current == section:
                count += 1
                if index is None or count == index:
                    start = i
            continue
        if current == section and (index is None or count == index):
            if key is not None and re.match(rf"^\s*{re.escape(key)}\s*=", line):
                return i
    return start


def _err(text, section, index, key, message):
    path = section if index is None else f"{section}[{index}]"
    if key is not None:
        path += f".{key}"
    return ConfigError(message, path, _locate(text, section, index, key))


def _get(table, key, kind, text, section, index=None, default=None, required=False):
    if key not in table:
        if required:
            raise _err(text, section, index, None, f"missing required key {key!r}")
        return default
    value = table[key]
    ok = {
        "int": isinstance(value, int) and not isinstance(value, bool),
        "float": isinstance(value, (int, float)) and not isinstance(value, bool),
        "str": isinstance(value, str),
        "list": isinstance(value, list),
        "bool": isinstance(value, bool),
    }[kind]
    if not ok:
        raise _err(text, section, index, key, f"expected {kind}, got {type(value).__name__}")
    return float(value) if kind == "float" else value


def _check_keys(table, allowed, text, section, index=None):
    for key in table:
        if key not in allowed:
            raise _err(text, section, index, key, f"unknown key {key!r}")


def parse_config(data: dict | str, text: str | None = None) -> ConfigBundle:
    """Build a :class:`ConfigBundle` from TOML text or an already-decoded mapping."""
    if isinstance(data, str):
        text = data
        try:
            data = toml.loads(text)
        except toml.TomlDecodeError as exc:
            raise ConfigError(f"TOML syntax error: {exc.msg}", None, exc.lineno) from None
    for key in data:
        if key not in ("run", "law", "family", "functions"):
            raise ConfigError(f"unknown section {key!r}", key, _locate(text, key, None, None))

    run = data.get("run", {})
    _check_keys(run, _RUN_KEYS, text, "run")
    opts = {}
    for f in fields(RunOptions):
        if f.name not in run:
            continue
        kind = {"quad_nodes": "int", "truncation_K": "int", "threads": "int", "alpha": "list",
                "eig_method": "str", "z_gate": "float", "noise_floor": "float", "standardize": "str",
                "bootstrap": "int"}[f.name]
        value = _get(run, f.name, kind, text, "run")
        if f.name == "alpha":
            value = tuple(float(v) for v in value)
        opts[f.name] = value
    if opts.get("eig_method", "lapack") not in ("lapack", "householder"):
        raise _err(text, "run", None, "eig_method", "must be 'lapack' or 'householder'")
    if opts.get("standardize", "theory") not in ("theory", "sample"):
        raise _err(text, "run", None, "standardize", "must be 'theory' or 'sample'")
    n = _get(run, "n", "int", text, "run", default=512)
    replicas = _get(run, "replicas", "int", text, "run", default=1000)
    seed = _get(run, "master_seed", "int", text, "run", default=0)
    if n < 8:
        raise _err(text, "run", None, "n", "matrix order must be >= 8")
    if replicas < 2:
        raise _err(text, "run", None, "replicas", "need at least 2 replicas")

    if "law" not in data:
        raise ConfigError("missing [law] section", "law")
    law_t = data["law"]
    _check_keys(law_t, _LAW_KEYS, text, "law")
    kind = _get(law_t, "kind", "str", text, "law", required=True)
    if kind not in LAW_KINDS:
        raise _err(text, "law", None, "kind", f"unknown law {kind!r}; expected one of {LAW_KINDS}")
    try:
        law = make_entry_law(kind, _get(law_t, "sigma_sq_diag", "float", text, "law", default=2.0),
                             _get(law_t, "p", "float", text, "law"))
    except ValueError as exc:
        raise _err(text, "law", None, None, str(exc)) from None

    fam_t = data.get("family", [])
    fun_t = data.get("functions", [])
    if not isinstance(fam_t, list) or not fam_t:
        raise ConfigError("need at least one [[family]] table", "family", _locate(text, "family", None, None))
    if not isinstance(fun_t, list) or len(fun_t) != len(fam_t):
        raise ConfigError(f"need exactly one [[functions]] table per [[family]] table ({len(fam_t)})",
                          "functions", _locate(text, "functions", None, None))
    family = tuple(_parse_set(t, i, text) for i, t in enumerate(fam_t))
    specs = tuple(_parse_function(t, i, text) for i, t in enumerate(fun_t))
    try:
        exp = ExperimentConfig(n, replicas, law, family, tuple(s.build() for s in specs), seed, RunOptions(**opts))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ConfigBundle(exp, specs)


def _parse_set(t, i, text) -> IndexSetSpec:
    kind = _get(t, "kind", "str", text, "family", i, required=True)
    if kind not in _FAMILY_KEYS:
        raise _err(text, "family", i, "kind", f"unknown index-set kind {kind!r}")
    _check_keys(t, _FAMILY_KEYS[kind] | {"kind"}, text, "family", i)
    try:
        if kind == "prefix":
            return IndexSetSpec.prefix(_get(t, "gamma", "float", text, "family", i, required=True))
        if kind == "window":
            return IndexSetSpec.window(_get(t, "a", "float", text, "family", i, required=True),
                                       _get(t, "b", "float", text, "family", i, required=True))
        if kind == "stride":
            return IndexSetSpec.stride(_get(t, "modulus", "int", text, "family", i, required=True),
                                       _get(t, "residues", "list", text, "family", i, required=True))
        return IndexSetSpec.explicit(_get(t, "indices", "list", text, "family", i, required=True))
    except (ValueError, TypeError) as exc:
        raise _err(text, "family", i, None, str(exc)) from None


def _parse_function(t, i, text) -> FunctionSpec:
    label = _get(t, "label", "str", text, "functions", i)
    if ("builtin" in t) == ("coeffs" in t):
        raise _err(text, "functions", i, None, "give exactly one of 'builtin' or 'coeffs'")
    if "coeffs" in t:
        _check_keys(t, {"coeffs", "label"}, text, "functions", i)
        coeffs = _get(t, "coeffs", "list", text, "functions", i)
        if not coeffs or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in coeffs):
            raise _err(text, "functions", i, "coeffs", "coefficients must be a nonempty list of numbers")
        return FunctionSpec(coeffs=tuple(float(c) for c in coeffs), label=label)
    name = _get(t, "builtin", "str", text, "functions", i)
    if name not in BUILTIN_FUNCTIONS:
        raise _err(text, "functions", i, "builtin", f"unsupported test function {name!r}; "
                                                    f"expected one of {BUILTIN_FUNCTIONS}")
    allowed = _FUNC_PARAMS.get(name, set())
    _check_keys(t, allowed | {"builtin", "label"}, text, "functions", i)
    params = tuple(sorted((k, _get(t, k, "float", text, "functions", i)) for k in allowed if k in t))
    return FunctionSpec(builtin=name, params=params, label=label)


def load_config(path) -> ConfigBundle:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _set_to_dict(spec: IndexSetSpec) -> dict:
    p = spec.params
    if spec.kind == "prefix":
        return {"kind": "prefix", "gamma": p[0]}
    if spec.kind == "window":
        return {"kind": "window", "a": p[0], "b": p[1]}
    if spec.kind == "stride":
        return {"kind": "stride", "modulus": p[0], "residues": list(p[1])}
    return {"kind": "explicit", "indices": [int(v) for v in p]}


def config_to_dict(bundle: ConfigBundle) -> dict:
    exp = bundle.experiment
    run = {"n": exp.n, "replicas": exp.replicas, "master_seed": exp.master_seed}
    defaults = RunOptions()
    for f in fields(RunOptions):
        value = getattr(exp.options, f.name)
        if value is not None and value != getattr(defaults, f.name):
            run[f.name] = list(value) if isinstance(value, tuple) else value
    law = {"kind": exp.law.kind, "sigma_sq_diag": exp.law.sigma_sq_diag}
    if exp.law.p is not None:
        law["p"] = exp.law.p
    return {
        "run": run,
        "law": law,
        "family": [_set_to_dict(s) for s in exp.family],
        "functions": [s.to_dict() for s in bundle.functions],
    }


def dump_config(bundle: ConfigBundle) -> str:
    """Canonical TOML text; ``dump_config(parse_config(dump_config(b))) == dump_config(b)``."""
    return toml.dumps(config_to_dict(bundle))


def config_hash(bundle: ConfigBundle) -> str:
    """First 16 hex digits of the SHA-256 of the canonical serialization."""
    return hashlib.sha256(dump_config(bundle).encode("utf-8")).hexdigest()[:16]
