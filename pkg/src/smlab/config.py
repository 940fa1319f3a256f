"""Analysis configuration: validation and construction of metric objects.

The configuration format is a single JSON object; expression values use the
grammar of the expr module.  Keys:

    kind        "map" or "metric"
    map         {x, y, z, nu?} expression strings (nu = [nx, ny, nz])
    metric      {E, F, G, lambda?} expression strings
    domain      [u0, u1, v0, v1]
    periodic    [bool, bool]
    oriented    bool (default true)
    co_orientation_sign  +1 or -1 (default +1)
    topology    {chi?, chi_plus?, chi_minus?}
    tolerances  {abs_tol?, ...}
    jet_order   int <= 6 (default 4)
    options     {grid?, depth?, gauss_order?, base_tiles?, workers?, seeds?,
                 curve_step?, include_west?}
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import expr as X
from .errors import ConfigError, ParseError, RejectedConstruct
from .integrate import QuadOptions
from .metric import MetricField, SurfaceMap, induced_metric, metric_from_exprs


@dataclass
class AnalysisConfig:
    name: str
    kind: str
    data: dict
    domain: tuple
    periodic: tuple
    oriented: bool
    co_orientation_sign: int
    topology: dict
    tolerances: dict
    jet_order: int
    options: dict
    default_command: str = ""

    def quad_options(self, overrides=None):
        opts = QuadOptions()
        opts.abs_tol = float(self.tolerances.get("abs_tol", opts.abs_tol))
        for key in ("depth", "gauss_order", "base_tiles", "workers"):
            if key in self.options:
                setattr(opts, key, int(self.options[key]))
        if self.options.get("curve_step") is not None:
            opts.curve_step = float(self.options["curve_step"])
        for key, val in (overrides or {}).items():
            if val is not None:
                setattr(opts, key, val)
        return opts

    def seeds(self):
        return [tuple(s) for s in self.options.get("seeds", [])]


def _parse_expr(txt, where):
    try:
        return X.parse(txt)
    except (ParseError, RejectedConstruct) as exc:
        raise ConfigError(f"bad expression {txt!r}: {exc}", field=where) from exc


def from_dict(raw: dict) -> AnalysisConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    kind = raw.get("kind")
    if kind not in ("map", "metric"):
        raise ConfigError("must be 'map' or 'metric'", field="kind")
    key = kind
    if key not in raw or not isinstance(raw[key], dict):
        raise ConfigError(f"missing section {key!r}", field=key)
    domain = raw.get("domain")
    if (not isinstance(domain, (list, tuple)) or len(domain) != 4
            or not all(isinstance(x, (int, float)) for x in domain)
            or not (domain[0] < domain[1] and domain[2] < domain[3])):
        raise ConfigError("domain must be [u0, u1, v0, v1] with u0 < u1, v0 < v1",
                          field="domain")
    periodic = raw.get("periodic", [False, False])
    if len(periodic) != 2:
        raise ConfigError("periodic must be [bool, bool]", field="periodic")
    tolerances = dict(raw.get("tolerances", {}))
    for name, val in tolerances.items():
        if not (isinstance(val, (int, float)) and val > 0):
            raise ConfigError(f"tolerance {name} must be positive", field="tolerances")
    jet_order = int(raw.get("jet_order", 4))
    if not 1 <= jet_order <= 6:
        raise ConfigError("jet_order must be between 1 and 6", field="jet_order")
    co_sign = int(raw.get("co_orientation_sign", 1))
    if co_sign not in (1, -1):
        raise ConfigError("co_orientation_sign must be +1 or -1",
                          field="co_orientation_sign")
    return AnalysisConfig(
        name=str(raw.get("name", "analysis")),
        kind=kind,
        data=dict(raw[key]),
        domain=tuple(float(x) for x in domain),
        periodic=(bool(periodic[0]), bool(periodic[1])),
        oriented=bool(raw.get("oriented", True)),
        co_orientation_sign=co_sign,
        topology=dict(raw.get("topology", {})),
        tolerances=tolerances,
        jet_order=jet_order,
        options=dict(raw.get("options", {})),
        default_command=str(raw.get("default_command", "")),
    )


def load_file(path) -> AnalysisConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    return from_dict(raw)


def build_metric(cfg: AnalysisConfig) -> MetricField:
    """Construct and validate the MetricField described by the config."""
    common = dict(domain=cfg.domain, periodic_u=cfg.periodic[0],
                  periodic_v=cfg.periodic[1], oriented=cfg.oriented,
                  jet_order=cfg.jet_order, name=cfg.name)
    if cfg.kind == "map":
        for comp in ("x", "y", "z"):
            if comp not in cfg.data:
                raise ConfigError(f"map is missing component {comp!r}", field="map")
        nu = None
        if cfg.data.get("nu") is not None:
            nu_raw = cfg.data["nu"]
            if len(nu_raw) != 3:
                raise ConfigError("nu must have three components", field="map.nu")
            nu = tuple(_parse_expr(t, f"map.nu[{i}]") for i, t in enumerate(nu_raw))
        smap = SurfaceMap(
            x=_parse_expr(cfg.data["x"], "map.x"),
            y=_parse_expr(cfg.data["y"], "map.y"),
            z=_parse_expr(cfg.data["z"], "map.z"),
            nu=nu, domain=cfg.domain,
            periodic_u=cfg.periodic[0], periodic_v=cfg.periodic[1])
        try:
            return induced_metric(smap, validate=True,
                                  co_orientation_sign=cfg.co_orientation_sign,
                                  oriented=cfg.oriented, jet_order=cfg.jet_order,
                                  name=cfg.name)
        except ValueError as exc:
            raise ConfigError(str(exc), field="map") from exc
    for comp in ("E", "F", "G"):
        if comp not in cfg.data:
            raise ConfigError(f"metric is missing coefficient {comp!r}", field="metric")
    try:
        m = metric_from_exprs(
            _parse_expr(cfg.data["E"], "metric.E"),
            _parse_expr(cfg.data["F"], "metric.F"),
            _parse_expr(cfg.data["G"], "metric.G"),
            lam=(None if cfg.data.get("lambda") is None
                 else _parse_expr(cfg.data["lambda"], "metric.lambda")),
            co_orientation_sign=cfg.co_orientation_sign, **common)
        return m.validate()
    except ValueError as exc:
        raise ConfigError(str(exc), field="metric") from exc
