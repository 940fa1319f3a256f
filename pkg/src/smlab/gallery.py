"""Built-in example configurations.

Each entry is a plain config dictionary in the same schema the CLI accepts
from JSON files, plus a default command.  The cases:

  cuspidal-edge         (u^2, u^3, v) with its unit normal
  swallowtail           (3u^4 + u^2 v, 4u^3 + 2uv, v)
  cuspidal-cross-cap    (u, v^2, u v^3), a frontal that is not a front
  cross-cap-standard    first fundamental form of (u, uv, v^2)
  normal-form           (1 + v^2 alpha) du^2 + v^2 (1 + v beta) dv^2
  west-synthetic        exact West-form quadratic coefficients
  bump-torus            cross-cap metric blended into the flat square torus
  parallel-torus-front  parallel surface of an oval-profile revolution torus

The parallel front: revolving a convex oval whose curvature radius is
rho(u) = 1 + 0.3 cos 2u + 0.4 sin 3u (tangent-angle parametrization) and
offsetting by d = 0.5 along the normal yields a front whose pullback metric
is a Kossowski metric on the torus with exactly two A2 singular circles
(rho crosses d twice), no A3 points, and a degree-zero Gauss map.  A
circular profile would put the offset's focal points on the rotation axis
and produce cone points instead of A2 circles, which is why the profile is
an oval.
"""

from __future__ import annotations

import copy

# profile data for the parallel front
_RHO = "1 + 0.3*cos(2*u) + 0.4*sin(3*u)"
_XPROF = "3 + sin(u) + 0.3*(sin(3*u)/6 + sin(u)/2) - 0.4*(cos(4*u)/8 + cos(2*u)/4)"
_ZPROF = "-(cos(u)) + 0.3*(cos(u)/2 - cos(3*u)/6) + 0.4*(sin(2*u)/4 - sin(4*u)/8)"
_OFFSET = 0.5

_TWO_PI = 6.283185307179586

GALLERY = {
    "cuspidal-edge": {
        "name": "cuspidal-edge",
        "kind": "map",
        "map": {
            "x": "u^2", "y": "u^3", "z": "v",
            "nu": ["3*u / sqrt(9*u^2 + 4)", "-2 / sqrt(9*u^2 + 4)", "0"],
        },
        "domain": [-1.0, 1.0, -1.0, 1.0],
        "periodic": [False, False],
        "oriented": True,
        "topology": {},
        "options": {"seeds": [[0.1, 0.0]]},
        "default_command": "classify",
    },
    "swallowtail": {
        "name": "swallowtail",
        "kind": "map",
        "map": {
            "x": "3*u^4 + u^2*v", "y": "4*u^3 + 2*u*v", "z": "v",
            "nu": ["1 / sqrt(1 + u^2 + u^4)",
                   "-(u) / sqrt(1 + u^2 + u^4)",
                   "u^2 / sqrt(1 + u^2 + u^4)"],
        },
        "domain": [-0.25, 0.25, -0.5, 0.3],
        "periodic": [False, False],
        "oriented": True,
        "topology": {},
        "options": {"seeds": [[0.15, -0.1]]},
        "default_command": "classify",
    },
    "cuspidal-cross-cap": {
        "name": "cuspidal-cross-cap",
        "kind": "map",
        "map": {
            "x": "u", "y": "v^2", "z": "u*v^3",
            "nu": ["-(2*v^3) / sqrt(4 + 9*u^2*v^2 + 4*v^6)",
                   "-(3*u*v) / sqrt(4 + 9*u^2*v^2 + 4*v^6)",
                   "2 / sqrt(4 + 9*u^2*v^2 + 4*v^6)"],
        },
        "domain": [-0.6, 0.6, -0.6, 0.6],
        "periodic": [False, False],
        "oriented": True,
        "topology": {},
        "options": {"seeds": [[0.0, 0.1]]},
        "default_command": "classify",
    },
    "cross-cap-standard": {
        "name": "cross-cap-standard",
        "kind": "metric",
        "metric": {"E": "1 + v^2", "F": "u*v", "G": "u^2 + 4*v^2"},
        "domain": [-0.8, 0.8, -0.8, 0.8],
        "periodic": [False, False],
        "oriented": True,
        "topology": {},
        "options": {},
        "default_command": "crosscap",
    },
    "normal-form": {
        "name": "normal-form",
        "kind": "metric",
        "params": {"alpha": "-1 + v", "beta": "2"},
        "metric": {
            "E": "1 + v^2*({alpha})",
            "F": "0",
            "G": "v^2*(1 + v*({beta}))",
            "lambda": "v*sqrt((1 + v^2*({alpha}))*(1 + v*({beta})))",
        },
        "domain": [-0.5, 0.5, -0.35, 0.35],
        "periodic": [False, False],
        "oriented": True,
        "topology": {},
        "options": {"seeds": [[0.0, 0.1]]},
        "default_command": "invariants",
    },
    "west-synthetic": {
        "name": "west-synthetic",
        "kind": "metric",
        "params": {"a20": 1.0, "a11": 0.5, "a02": 2.0},
        "metric": {
            "E": "1 + {a20sq}*u^2 + {two_a11_a20}*u*v + {one_a11sq}*v^2",
            "F": "{a11_a20}*u^2 + {f_uv}*u*v + {a02_a11}*v^2",
            "G": "{one_a11sq}*u^2 + {two_a02_a11}*u*v + {a02sq}*v^2",
        },
        "domain": [-0.25, 0.25, -0.25, 0.25],
        "periodic": [False, False],
        "oriented": True,
        "topology": {},
        "options": {},
        "default_command": "crosscap",
    },
    "bump-torus": {
        "name": "bump-torus",
        "kind": "metric",
        "metric": {
            "E": "bump(2*sqrt(u^2 + v^2))*(1 + v^2) + (1 - bump(2*sqrt(u^2 + v^2)))",
            "F": "bump(2*sqrt(u^2 + v^2))*u*v",
            "G": "bump(2*sqrt(u^2 + v^2))*(u^2 + 4*v^2) + (1 - bump(2*sqrt(u^2 + v^2)))",
        },
        "domain": [-1.0, 1.0, -1.0, 1.0],
        "periodic": [True, True],
        "oriented": True,
        "topology": {"chi": 0},
        "options": {},
        "default_command": "gauss-bonnet-whitney",
    },
    "parallel-torus-front": {
        "name": "parallel-torus-front",
        "kind": "map",
        "map": {
            "x": f"(({_XPROF}) - {_OFFSET}*sin(u))*cos(v)",
            "y": f"(({_XPROF}) - {_OFFSET}*sin(u))*sin(v)",
            "z": f"({_ZPROF}) + {_OFFSET}*cos(u)",
            "nu": ["-(sin(u))*cos(v)", "-(sin(u))*sin(v)", "cos(u)"],
        },
        "domain": [0.0, _TWO_PI, 0.0, _TWO_PI],
        "periodic": [True, True],
        "oriented": True,
        "topology": {"chi": 0, "chi_plus": 0, "chi_minus": 0},
        "options": {},
        "default_command": "gauss-bonnet-gb1",
    },
}


def names():
    return sorted(GALLERY)


def config(name, params=None):
    """A deep copy of a gallery configuration, with parameters substituted."""
    if name not in GALLERY:
        raise KeyError(f"unknown gallery case {name!r}; choices: {', '.join(names())}")
    cfg = copy.deepcopy(GALLERY[name])
    p = dict(cfg.pop("params", {}))
    if params:
        p.update(params)
    if name == "normal-form":
        subs = {"alpha": str(p["alpha"]), "beta": str(p["beta"])}
    elif name == "west-synthetic":
        a20, a11, a02 = float(p["a20"]), float(p["a11"]), float(p["a02"])
        subs = {
            "a20sq": repr(a20 ** 2), "two_a11_a20": repr(2 * a11 * a20),
            "one_a11sq": repr(1 + a11 ** 2), "a11_a20": repr(a11 * a20),
            "f_uv": repr(1 + a11 ** 2 + a02 * a20), "a02_a11": repr(a02 * a11),
            "two_a02_a11": repr(2 * a02 * a11), "a02sq": repr(a02 ** 2),
        }
    else:
        subs = None
    if subs:
        for key, txt in cfg["metric"].items():
            cfg["metric"][key] = txt.format(**subs)
    return cfg


# frozen expectations used by the gallery self-checks
EXPECT = {
    "cross-cap-standard": {"alpha02": 2.0, "alpha11": 0.0, "alpha20": 0.0,
                           "hess": 16.0, "delta": 4.0},
    "west-synthetic": {"alpha02": 2.0, "alpha11": 0.5, "alpha20": 1.0},
    "parallel-torus-front": {"singular_circles": 2, "offset": _OFFSET},
}
