"""Command-line front end.

Commands: check, classify, lee, torse, transform, soliton, example.
JSON report goes to stdout; a human-readable table goes to stderr when
attached to a terminal.  Exit codes: 0 all verdicts pass, 1 verdict
failure, 2 usage/config error, 3 numeric/domain error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import expr as ex
from .accr import (TOL_CLASS, TOL_DERIVED, TOL_STRUCT, check_axioms,
                   class_residuals, f_prop_residual, lee_identities_residual,
                   structure_eval, torse_forming_analyze)
from .examples import (DEFAULT_BOX, REGISTRY, get_example, sample_points,
                       soliton_uvw, holomorphic_pair_uvw)
from .jets import JetDomainError, SingularMetricError
from .transform import (TransformTriple, TransformedStructure,
                        alpha_beta_residuals, differentials,
                        lee_transformation_residuals,
                        metric_roundtrip_residual, yamabe_check)


class ConfigError(ValueError):
    """Bad configuration file or flag combination."""


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual < self.tolerance

    def as_dict(self):
        return {"name": self.name, "residual": float(self.residual),
                "tolerance": float(self.tolerance),
                "passed": bool(self.passed)}


@dataclass
class Report:
    command: str
    config: dict
    checks: list = field(default_factory=list)
    values: dict = field(default_factory=dict)

    def add(self, name: str, residual: float, tolerance: float):
        self.checks.append(Check(name, float(residual), tolerance))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self):
        return {
            "version": __version__,
            "command": self.command,
            "config": self.config,
            "checks": [c.as_dict() for c in self.checks],
            "values": self.values,
            "passed": bool(self.passed),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2)

    def render_table(self) -> str:
        lines = [f"{self.command}  (accrgeo {__version__})"]
        width = max((len(c.name) for c in self.checks), default=10)
        for c in self.checks:
            mark = "pass" if c.passed else "FAIL"
            lines.append(f"  {c.name:<{width}}  {c.residual: .3e}"
                         f"  < {c.tolerance:.1e}  {mark}")
        lines.append(f"  => {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _jsonable(x):
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    return x


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

PRESETS = {
    "identity": lambda n: TransformTriple.identity(),
    "soliton": lambda n: soliton_uvw(n),
    "negative-du": lambda n: soliton_uvw(n, ell="t"),
    "negative-dv": lambda n: _add_v(soliton_uvw(n), ex.Var("t")),
    "negative-dw": lambda n: _add_w(soliton_uvw(n), ex.Var("x1")),
    "holomorphic": lambda n: holomorphic_pair_uvw(n),
}


def _add_v(tr: TransformTriple, e) -> TransformTriple:
    return TransformTriple(tr.u, tr.v + e, tr.w)


def _add_w(tr: TransformTriple, e) -> TransformTriple:
    return TransformTriple(tr.u, tr.v, tr.w + e)


def build_config(args) -> dict:
    cfg = {
        "example": "hypersurface-f5", "n": 2, "order": 2, "samples": 16,
        "seed": 0, "box": list(DEFAULT_BOX), "tol": {}, "sigma": None,
        "u": None, "v": None, "w": None, "preset": None, "field": None,
    }
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except OSError as err:
            raise ConfigError(f"cannot read config file: {err}")
        except json.JSONDecodeError as err:
            raise ConfigError(
                f"malformed config file at line {err.lineno}, "
                f"column {err.colno}: {err.msg}")
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(data) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(data)
    for key in ("example", "n", "order", "samples", "seed", "sigma",
                "preset", "u", "v", "w", "field"):
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "box", None):
        try:
            parts = [float(s) for s in args.box.split(",")]
        except ValueError:
            raise ConfigError("--box expects lo,hi")
        if len(parts) != 2:
            raise ConfigError("--box expects lo,hi")
        cfg["box"] = parts
    for item in getattr(args, "tol", None) or []:
        if "=" not in item:
            raise ConfigError("--tol expects name=value")
        name, _, val = item.partition("=")
        try:
            cfg["tol"][name] = float(val)
        except ValueError:
            raise ConfigError(f"bad tolerance value {val!r}")
    if cfg["n"] < 1:
        raise ConfigError("n must be >= 1")
    if cfg["order"] not in (1, 2, 3):
        raise ConfigError("order must be 1, 2 or 3")
    if cfg["samples"] < 1:
        raise ConfigError("samples must be >= 1")
    lo, hi = cfg["box"]
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ConfigError("box bounds must be finite with lo < hi")
    return cfg


def tol(cfg, name, default) -> float:
    return float(cfg["tol"].get(name, default))


def make_provider(cfg):
    try:
        return get_example(cfg["example"], n=int(cfg["n"]),
                           seed=int(cfg["seed"]))
    except KeyError as err:
        raise ConfigError(str(err))


def make_triple(cfg) -> TransformTriple:
    if cfg["preset"]:
        if cfg["preset"] not in PRESETS:
            raise ConfigError(f"unknown preset {cfg['preset']!r}; "
                              f"choose from {sorted(PRESETS)}")
        return PRESETS[cfg["preset"]](int(cfg["n"]))
    if cfg["u"] is None and cfg["v"] is None and cfg["w"] is None:
        raise ConfigError("need --preset or a (u, v, w) triple")
    try:
        return TransformTriple.make(cfg["u"] or "0", cfg["v"] or "0",
                                    cfg["w"] or "0")
    except ex.ParseError as err:
        raise ConfigError(f"bad transformation expression: {err}")


def config_points(provider, cfg) -> np.ndarray:
    return sample_points(provider.dim, int(cfg["samples"]),
                         seed=int(cfg["seed"]), box=cfg["box"])


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_check(cfg) -> Report:
    provider = make_provider(cfg)
    rep = Report("check", cfg)
    worst_ax = {}
    worst_fp = 0.0
    worst_lee = {}
    norm_f = 0.0
    verdicts = None
    for p in config_points(provider, cfg):
        ev = structure_eval(provider, p, order=max(1, int(cfg["order"])))
        for k, v in check_axioms(ev).items():
            worst_ax[k] = max(worst_ax.get(k, 0.0), v)
        worst_fp = max(worst_fp, f_prop_residual(ev))
        for k, v in lee_identities_residual(ev).items():
            worst_lee[k] = max(worst_lee.get(k, 0.0), v)
        cr = class_residuals(ev, tol=tol(cfg, "class", TOL_CLASS))
        norm_f = max(norm_f, cr.norm_F_e)
        verdicts = (cr.verdicts() if verdicts is None else
                    {k: verdicts[k] and v
                     for k, v in cr.verdicts().items()})
    ts = tol(cfg, "struct", TOL_STRUCT)
    td = tol(cfg, "derived", TOL_DERIVED)
    for k, v in worst_ax.items():
        rep.add(f"axiom:{k}", v, ts)
    rep.add("f_symmetry", worst_fp, td)
    for k, v in worst_lee.items():
        rep.add(f"lee:{k}", v, td)
    rep.values["norm_F"] = float(norm_f)
    rep.values["class_verdicts"] = verdicts
    return rep


def cmd_classify(cfg) -> Report:
    provider = make_provider(cfg)
    rep = Report("classify", cfg)
    ts = tol(cfg, "struct", TOL_STRUCT)
    agg = None
    for p in config_points(provider, cfg):
        ev = structure_eval(provider, p, order=max(1, int(cfg["order"])))
        rep.add("axioms", max(check_axioms(ev).values()), ts)
        cr = class_residuals(ev, tol=tol(cfg, "class", TOL_CLASS))
        rec = {"res_F0": cr.res_F0 / cr.denom, "res_F1": cr.res_F1 / cr.denom,
               "res_F5": cr.res_F5 / cr.denom,
               "res_F1_plus_F5": cr.res_F1_plus_F5 / cr.denom,
               "norm_F": cr.norm_F_e}
        if agg is None:
            agg = rec
            verdicts = cr.verdicts()
        else:
            agg = {k: max(agg[k], v) for k, v in rec.items()}
            verdicts = {k: verdicts[k] and v
                        for k, v in cr.verdicts().items()}
    rep.values["relative_residuals"] = _jsonable(agg)
    rep.values["verdicts"] = verdicts
    return rep


def cmd_lee(cfg) -> Report:
    provider = make_provider(cfg)
    rep = Report("lee", cfg)
    td = tol(cfg, "derived", TOL_DERIVED)
    samples = []
    worst = {}
    for p in config_points(provider, cfg):
        ev = structure_eval(provider, p, order=max(1, int(cfg["order"])))
        for k, v in lee_identities_residual(ev).items():
            worst[k] = max(worst.get(k, 0.0), v)
        samples.append({
            "point": _jsonable(p), "theta": _jsonable(ev.theta),
            "theta_star": _jsonable(ev.theta_star),
            "omega": _jsonable(ev.omega),
            "theta_star_xi": float(ev.theta_star @ ev.xi0),
        })
    for k, v in worst.items():
        rep.add(f"lee:{k}", v, td)
    rep.values["samples"] = samples
    return rep


def cmd_torse(cfg) -> Report:
    provider = make_provider(cfg)
    rep = Report("torse", cfg)
    d = provider.dim
    if cfg["field"]:
        comps = [s.strip() for s in cfg["field"].split(";")]
        if len(comps) != d:
            raise ConfigError(f"--field needs {d} components separated "
                              "by ';'")
    else:
        comps = ["0"] * (d - 1) + ["1"]       # the Reeb field
    td = tol(cfg, "derived", TOL_DERIVED)
    fit = vert = dk = nxi = 0.0
    all_vertical = True
    samples = []
    for p in config_points(provider, cfg):
        tr = torse_forming_analyze(provider, comps, p,
                                   order=max(1, int(cfg["order"])))
        fit = max(fit, tr.fit_residual)
        vert = max(vert, tr.verticality)
        dk = max(dk, tr.dk_residual)
        all_vertical = all_vertical and tr.is_vertical
        if np.isfinite(tr.nabla_xi_residual):
            nxi = max(nxi, tr.nabla_xi_residual)
        samples.append({"point": _jsonable(p), "f": float(tr.f),
                        "k": float(tr.k),
                        "gamma": _jsonable(tr.gamma_form),
                        "length_sq": float(tr.length_sq)})
    rep.add("torse_fit", fit, td)
    rep.add("dk_identity", dk, td)
    if all_vertical:
        # the vertical-case identities only apply to vertical fields;
        # for a general field verticality is reported as a value
        rep.add("verticality", vert, td)
        rep.add("nabla_xi", nxi, td)
    rep.values["is_vertical"] = all_vertical
    rep.values["verticality"] = float(vert)
    rep.values["samples"] = samples
    return rep


def cmd_transform(cfg) -> Report:
    provider = make_provider(cfg)
    triple = make_triple(cfg)
    tstruct = TransformedStructure(provider, triple)
    rep = Report("transform", cfg)
    ts = tol(cfg, "struct", TOL_STRUCT)
    td = tol(cfg, "derived", TOL_DERIVED)
    worst = {}
    verdicts = None
    order = max(1, int(cfg["order"]))
    for p in config_points(provider, cfg):
        ev = structure_eval(provider, p, order=order)
        ev_bar = structure_eval(tstruct, p, order=order)
        worst["axioms"] = max(worst.get("axioms", 0.0),
                              max(check_axioms(ev_bar).values()))
        d = differentials(triple, ev, provider)
        for k, v in lee_transformation_residuals(ev, ev_bar, d).items():
            worst[k] = max(worst.get(k, 0.0), v)
        for k, v in alpha_beta_residuals(d, ev, ev_bar).items():
            worst[k] = max(worst.get(k, 0.0), v)
        worst["metric_roundtrip"] = max(worst.get("metric_roundtrip", 0.0),
                                        metric_roundtrip_residual(ev, ev_bar,
                                                                  d))
        cr = class_residuals(ev_bar, tol=tol(cfg, "class", TOL_CLASS))
        verdicts = (cr.verdicts() if verdicts is None else
                    {k: verdicts[k] and v
                     for k, v in cr.verdicts().items()})
    rep.add("axioms", worst.pop("axioms"), ts)
    for k, v in worst.items():
        rep.add(k, v, td)
    rep.values["triple"] = {"u": str(triple.u), "v": str(triple.v),
                            "w": str(triple.w)}
    rep.values["class_verdicts"] = verdicts
    return rep


def cmd_soliton(cfg) -> Report:
    provider = make_provider(cfg)
    triple = make_triple(cfg)
    tstruct = TransformedStructure(provider, triple)
    rep = Report("soliton", cfg)
    pts = list(config_points(provider, cfg))
    sigma = cfg["sigma"]
    fk = getattr(provider, "fk", None)
    tsol = tol(cfg, "soliton", 1e-6)
    order = max(2, int(cfg["order"]))
    r = yamabe_check(tstruct, pts, sigma=sigma, fk=fk, order=order,
                     tol=tsol)
    rep.add("soliton", r.soliton_residual, tsol)
    rep.add("tau_constancy", r.tau_rel_std, tsol)
    rep.add("killing", r.killing_residual, tsol)
    rep.add("is_F1", 0.0 if r.is_F1 else 1.0, 0.5)
    rep.add("lee_theta", r.lee_theta_residual, tsol)
    rep.add("lee_theta_star", r.lee_theta_star_residual, tsol)
    rep.add("omega_bar", r.lee_omega_residual, tsol)
    td = tol(cfg, "derived", TOL_DERIVED)
    if r.condition_residuals is not None:
        c = r.condition_residuals
        rep.add("cond:du_xi", c.du_xi_plus_fk, td)
        rep.add("cond:dv_xi", c.dv_xi, td)
        rep.add("cond:dw_vertical", c.dw_vertical, td)
    rep.values.update({
        "sigma": float(r.sigma), "sigma_given": r.sigma_given,
        "tau_mean": float(r.tau_mean), "tau_std": float(r.tau_std),
        "tau_values": _jsonable(r.tau_values),
        "tsdw_residual": float(r.tsdw_residual),
        "lxi00_residual": float(r.lxi00_residual),
        "lie_formula_mismatch": float(r.lie_formula_mismatch),
        "triple": {"u": str(triple.u), "v": str(triple.v),
                   "w": str(triple.w)},
    })
    return rep


def cmd_example(cfg, args) -> Report:
    rep = Report("example", cfg)
    if args.action != "list":
        raise ConfigError("usage: example list")
    rep.values["examples"] = sorted(REGISTRY)
    return rep


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--example", help="registry name of the structure")
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--n", type=int, help="structure parameter n")
    common.add_argument("--order", type=int, help="jet order (1-3)")
    common.add_argument("--samples", type=int, help="sample point count")
    common.add_argument("--seed", type=int, help="sampling seed")
    common.add_argument("--box", help="sample box lo,hi")
    common.add_argument("--tol", action="append", metavar="NAME=VALUE",
                        help="tolerance override (repeatable)")
    common.add_argument("--json", action="store_true",
                        help="suppress the stderr table")
    triple = argparse.ArgumentParser(add_help=False)
    triple.add_argument("--preset", help="named transformation triple: "
                        + ", ".join(sorted(PRESETS)))
    triple.add_argument("--u", help="expression for u")
    triple.add_argument("--v", help="expression for v")
    triple.add_argument("--w", help="expression for w")

    parser = argparse.ArgumentParser(
        prog="accrgeo",
        description="Numerical structure checks, classification and "
                    "soliton verification for B-metric contact charts.")
    sub = parser.add_subparsers(dest="cmd", required=True)
    sub.add_parser("check", parents=[common])
    sub.add_parser("classify", parents=[common])
    sub.add_parser("lee", parents=[common])
    pt = sub.add_parser("torse", parents=[common])
    pt.add_argument("--field", help="candidate field components joined "
                    "by ';' (default: the Reeb field)")
    sub.add_parser("transform", parents=[common, triple])
    ps = sub.add_parser("soliton", parents=[common, triple])
    ps.add_argument("--sigma", type=float, help="pin the soliton constant")
    pe = sub.add_parser("example", parents=[common])
    pe.add_argument("action", choices=["list"])
    return parser


COMMANDS = {
    "check": cmd_check, "classify": cmd_classify, "lee": cmd_lee,
    "torse": cmd_torse, "transform": cmd_transform, "soliton": cmd_soliton,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        if args.cmd == "example":
            rep = cmd_example(cfg, args)
        else:
            rep = COMMANDS[args.cmd](cfg)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ex.EvalError, JetDomainError, SingularMetricError,
            np.linalg.LinAlgError, FloatingPointError, ValueError) as err:
        print(f"numeric error: {err}", file=sys.stderr)
        return 3
    print(rep.to_json())
    if sys.stderr.isatty() and not args.json:
        print(rep.render_table(), file=sys.stderr)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
