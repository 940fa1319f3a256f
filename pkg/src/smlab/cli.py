"""Command-line front end.

    smlab classify <config.json>
    smlab curve <config.json> [--format csv]
    smlab invariants <config.json>
    smlab crosscap <config.json> [--include-west]
    smlab gauss-bonnet <gb1|euler|whitney> <config.json>
    smlab gallery <name> [--command CMD]
    smlab selftest

Common flags: --tol --depth --gauss-order --base-tiles --grid --jet-order
--workers --out PATH --format json|csv --param key=value (repeatable).
Exit codes: 0 all verdicts pass, 1 analysis failure, 2 configuration error.

JSON output is canonical: keys sorted, floats printed with 17 significant
digits, so identical analyses produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import config as CFG
from . import gallery as GAL
from . import integrate as I
from . import kossowski as KS
from . import whitney as WT
from .errors import ConfigError, SmlabError


# ---------------------------------------------------------------------------
# canonical JSON
# ---------------------------------------------------------------------------

def _json_scalar(x):
    if isinstance(x, bool) or x is None:
        return "true" if x is True else ("false" if x is False else "null")
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x != x or x in (float("inf"), float("-inf")):
            raise ValueError("non-finite value in JSON output")
        return format(x, ".17g")
    raise TypeError(f"unsupported scalar {type(x)}")


def dump_json(obj, indent=0):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        rows = [f'{pad}  "{k}": {dump_json(obj[k], indent + 1)}'
                for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(rows) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        rows = [f"{pad}  {dump_json(x, indent + 1)}" for x in obj]
        return "[\n" + ",\n".join(rows) + f"\n{pad}]"
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return _json_scalar(obj)


# ---------------------------------------------------------------------------
# analyses
# ---------------------------------------------------------------------------

def _curves_and_profiles(m, cfg, opts, with_invariants=False):
    if m.lam is None:
        return [], []
    curves = I.find_singular_curves(m, cfg.seeds() or None, opts)
    profiles = [KS.profile_curve(c, with_invariants=with_invariants) for c in curves]
    return curves, profiles


def _curve_summary(curve, profile):
    hist = {}
    for s in curve.samples:
        hist[s.cls] = hist.get(s.cls, 0) + 1
    return {
        "closed": bool(curve.closed),
        "n_samples": len(curve.samples),
        "classes": hist,
        "a3_points": [{"t": a.t, "point": list(a.point),
                       "phi_derivative": a.phi_derivative}
                      for a in profile.a3_points],
        "length_dsigma": curve.samples[-1].tau,
    }


def cmd_classify(cfg, opts, flags):
    m = CFG.build_metric(cfg)
    curves, profiles = _curves_and_profiles(m, cfg, opts)
    caps = WT.detect_cross_caps(m, grid=tuple(cfg.options.get("grid", (64, 64))))
    out = {
        "name": cfg.name,
        "curves": [_curve_summary(c, p) for c, p in zip(curves, profiles)],
        "cross_caps": [{"location": list(p), "hess": h} for p, h in caps],
    }
    return 0, dump_json(out)


def cmd_curve(cfg, opts, flags):
    m = CFG.build_metric(cfg)
    if m.lam is None:
        raise ConfigError("curve tracing requires a lambda field (map with nu, "
                          "or metric with lambda)")
    curves, profiles = _curves_and_profiles(m, cfg, opts, with_invariants=True)
    if flags.get("format") == "csv":
        return 0, "\n".join(KS.curve_to_csv(p) for p in profiles)
    out = {"name": cfg.name,
           "curves": [{"summary": _curve_summary(c, p),
                       "csv": KS.curve_to_csv(p)}
                      for c, p in zip(curves, profiles)]}
    return 0, dump_json(out)


def cmd_invariants(cfg, opts, flags):
    m = CFG.build_metric(cfg)
    curves, profiles = _curves_and_profiles(m, cfg, opts, with_invariants=True)
    out = {"name": cfg.name, "curves": []}
    for c, p in zip(curves, profiles):
        entry = _curve_summary(c, p)
        entry["samples"] = [
            {"t": s.t, "point": list(s.point), "class": s.cls,
             "kappa_s": s.kappa_s, "kappa_pi": s.kappa_pi,
             "tau": s.tau, "unreliable": bool(s.unreliable)}
            for s in c.samples]
        out["curves"].append(entry)
    ok, residuals = KS.verify_normalized_chart(m)
    out["normalized_chart"] = {"verdict": bool(ok), "residuals": residuals}
    if ok:
        ks_fn, kpi_fn = KS.normal_form_invariants(m)
        u0, u1 = cfg.domain[0], cfg.domain[1]
        us = np.linspace(u0 + 0.1 * (u1 - u0), u1 - 0.1 * (u1 - u0), 9)
        out["normal_form_route"] = [
            {"u": float(u), "kappa_s": ks_fn(float(u)), "kappa_pi": kpi_fn(float(u))}
            for u in us]
    return 0, dump_json(out)


def cmd_crosscap(cfg, opts, flags):
    m = CFG.build_metric(cfg)
    caps = WT.detect_cross_caps(m, grid=tuple(cfg.options.get("grid", (64, 64))))
    reports = []
    for p, _ in caps:
        rep = WT.cross_cap_invariants(m, p, include_west=flags.get("include_west", False))
        entry = rep.to_dict()
        # ray-limit consistency at four angles
        _, m_second, _, _ = WT.cross_cap_pipeline(m, p)
        rays = []
        for k in range(4):
            theta = k * np.pi / 4
            want = WT.ray_limit_closed_form(rep.alpha20, rep.alpha11, rep.alpha02, theta)
            got = WT.curvature_ray_limit(m_second, (0.0, 0.0), theta)
            rays.append({"theta": theta, "num": got, "closed_form": want,
                         "residual": abs(got - want)})
        entry["ray_limits"] = rays
        reports.append(entry)
    return 0, dump_json({"name": cfg.name, "cross_caps": reports})


def cmd_gauss_bonnet(cfg, opts, flags, kind):
    m = CFG.build_metric(cfg)
    if kind in ("gb1", "euler") and m.lam is None:
        raise ConfigError(f"gauss-bonnet {kind} needs a lambda field (map with nu, "
                          "or metric with lambda); the whitney kind does not")
    meta = dict(cfg.topology)
    if cfg.seeds():
        meta["seeds"] = cfg.seeds()
    rep = I.gb_report(m, kind, meta, opts)
    return (0 if rep.passed else 1), dump_json({"name": cfg.name, **rep.to_dict()})


_GALLERY_DISPATCH = {
    "classify": lambda cfg, opts, flags: cmd_classify(cfg, opts, flags),
    "curve": lambda cfg, opts, flags: cmd_curve(cfg, opts, flags),
    "invariants": lambda cfg, opts, flags: cmd_invariants(cfg, opts, flags),
    "crosscap": lambda cfg, opts, flags: cmd_crosscap(cfg, opts, flags),
    "gauss-bonnet-gb1": lambda cfg, opts, flags: cmd_gauss_bonnet(cfg, opts, flags, "gb1"),
    "gauss-bonnet-euler": lambda cfg, opts, flags: cmd_gauss_bonnet(cfg, opts, flags, "euler"),
    "gauss-bonnet-whitney": lambda cfg, opts, flags: cmd_gauss_bonnet(cfg, opts, flags, "whitney"),
}


def run_gallery(name, command=None, quad_overrides=None, flags=None, params=None):
    """Run a gallery case end-to-end; returns (exit_code, text)."""
    cfg = CFG.from_dict(GAL.config(name, params))
    command = command or cfg.default_command
    if command not in _GALLERY_DISPATCH:
        raise ConfigError(f"unknown gallery command {command!r}")
    opts = cfg.quad_options(quad_overrides)
    return _GALLERY_DISPATCH[command](cfg, opts, flags or {})


def cmd_selftest(flags):
    from . import acceptance
    results = acceptance.run_all(fast=flags.get("fast", False))
    lines = [r.line() for r in results]
    code = 0 if all(r.passed for r in results) else 1
    return code, "\n".join(lines)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _build_parser():
    p = argparse.ArgumentParser(prog="smlab",
                                description="semi-definite metric laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("config", help="path to a JSON analysis configuration")
        sp.add_argument("--tol", type=float, default=None, help="quadrature abs tolerance")
        sp.add_argument("--depth", type=int, default=None, help="tile refinement depth")
        sp.add_argument("--gauss-order", type=int, default=None)
        sp.add_argument("--base-tiles", type=int, default=None)
        sp.add_argument("--jet-order", type=int, default=None)
        sp.add_argument("--grid", type=int, default=None, help="detection grid per axis")
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--out", default=None, help="write output to this path")
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    for name in ("classify", "curve", "invariants", "crosscap"):
        sp = sub.add_parser(name)
        common(sp)
        if name == "crosscap":
            sp.add_argument("--include-west", action="store_true")

    sp = sub.add_parser("gauss-bonnet")
    sp.add_argument("kind", choices=("gb1", "euler", "whitney"))
    common(sp)

    sp = sub.add_parser("gallery")
    sp.add_argument("name", help="gallery case name: " + ", ".join(GAL.names()))
    sp.add_argument("--command", dest="case_command", default=None,
                    help="override the case's default command")
    sp.add_argument("--param", action="append", default=[],
                    help="gallery parameter override key=value")
    common(sp, config=False)

    sp = sub.add_parser("selftest")
    sp.add_argument("--fast", action="store_true",
                    help="reduced quadrature settings for the slow criteria")
    sp.add_argument("--out", default=None)
    return p


def _overrides(args):
    ov = {}
    if getattr(args, "tol", None) is not None:
        ov["abs_tol"] = args.tol
    for key, attr in (("depth", "depth"), ("gauss_order", "gauss_order"),
                      ("base_tiles", "base_tiles"), ("workers", "workers")):
        val = getattr(args, attr, None)
        if val is not None:
            ov[key] = val
    return ov


def _apply_cfg_flags(cfg, args):
    if getattr(args, "jet_order", None) is not None:
        cfg.jet_order = args.jet_order
    if getattr(args, "grid", None) is not None:
        cfg.options["grid"] = (args.grid, args.grid)
    return cfg


def main(argv=None):
    args = _build_parser().parse_args(argv)
    flags = {"format": getattr(args, "format", "json"),
             "include_west": getattr(args, "include_west", False),
             "fast": getattr(args, "fast", False)}
    try:
        if args.command == "selftest":
            code, text = cmd_selftest(flags)
        elif args.command == "gallery":
            params = {}
            for kv in args.param:
                if "=" not in kv:
                    raise ConfigError(f"--param expects key=value, got {kv!r}")
                k, v = kv.split("=", 1)
                params[k] = v
            code, text = run_gallery(args.name, command=args.case_command,
                                     quad_overrides=_overrides(args), flags=flags,
                                     params=params or None)
        else:
            cfg = _apply_cfg_flags(CFG.load_file(args.config), args)
            opts = cfg.quad_options(_overrides(args))
            if args.command == "classify":
                code, text = cmd_classify(cfg, opts, flags)
            elif args.command == "curve":
                code, text = cmd_curve(cfg, opts, flags)
            elif args.command == "invariants":
                code, text = cmd_invariants(cfg, opts, flags)
            elif args.command == "crosscap":
                code, text = cmd_crosscap(cfg, opts, flags)
            else:
                code, text = cmd_gauss_bonnet(cfg, opts, flags, args.kind)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except KeyError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SmlabError as exc:
        print(f"analysis error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 1
    out_path = getattr(args, "out", None)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
