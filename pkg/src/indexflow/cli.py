"""Command line front end: configuration files, index computations, verification reports.

Usage::

    indexflow indices --config problem.json [--json out.json]
    indexflow verify {thm1,thm2,thm3,cor1} --config problem.json
    indexflow selftest [--seed N]

Exit status is 0 when every verdict passes, 1 on a failure or an error and
2 when a mesh-dependent integer did not stabilize.
"""
import argparse
import json
import sys
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .errors import ArgumentError, IndexFlowError, ParseError, PreconditionError, ValidationError
from .galerkin import (Discretization, LevelSequence, discrete_morse_index,
                       form_spectral_flow, kernel_dimension)
from .hamiltonian import (CoefficientFamily, ODEOptions, base_path, frame_change,
                          integrate_fundamental)
from .maslov import (CROSSING_TOL, check_triangular, frame_change_shift,
                     maslov_type_index, triangular_index)
from .polynomials import MatPoly
from .spectralflow import ZERO_TOL
from .structures import (RANK_TOL, SYMP_TOL, BoundaryData, SubspaceFrame, annihilator_R2mb,
                         compatible_K, intersection_dim, graph_frame, orth,
                         stable_subspace)
from . import suites

CONJUGATION_TOL = 1e-8

# ---------------------------------------------------------------------------
# schema

_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_MATRIX = {"type": "array", "minItems": 1,
           "items": {"type": "array", "minItems": 1, "items": _COMPLEX}}
_POLY = {"type": "array", "minItems": 1, "items": _MATRIX}
_POS_INT = {"type": "integer", "minimum": 1}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["m", "n", "T", "coefficients", "boundary"],
    "properties": {
        "m": _POS_INT,
        "n": _POS_INT,
        "T": {"type": "number", "exclusiveMinimum": 0},
        "homotopy": {"enum": ["base", "linear", "scale-lower-order"]},
        "coefficients": {
            "oneOf": [
                {"type": "object", "additionalProperties": False,
                 "required": ["form", "entries"],
                 "properties": {
                     "form": {"const": "blocks"},
                     "entries": {"type": "array", "items": {
                         "type": "object", "additionalProperties": False,
                         "required": ["k", "l", "s1"],
                         "properties": {"k": {"type": "integer", "minimum": 0},
                                        "l": {"type": "integer", "minimum": 0},
                                        "s0": _POLY, "s1": _POLY}}}}},
                {"type": "object", "additionalProperties": False,
                 "required": ["form", "p"],
                 "properties": {"form": {"const": "pqr"}, "p": _POLY, "q": _POLY, "r": _POLY,
                                "p0": _POLY, "q0": _POLY, "r0": _POLY}},
                {"type": "object", "additionalProperties": False,
                 "required": ["form", "kappa"],
                 "properties": {"form": {"const": "sphere-geodesic"},
                                "kappa": {"type": "number"}}},
            ]
        },
        "boundary": {
            "type": "object", "additionalProperties": False, "required": ["preset"],
            "properties": {"preset": {"enum": ["dirichlet", "periodic", "custom"]},
                           "basis": {"type": "array", "items": {"type": "array",
                                                                "items": _COMPLEX}}}},
        "discretization": {
            "type": "object", "additionalProperties": False,
            "properties": {"elements": {"type": "integer", "minimum": 2},
                           "degree": {"type": ["integer", "null"], "minimum": 1},
                           "refinements": {"type": "integer", "minimum": 0},
                           "s_samples": {"type": "integer", "minimum": 2}}},
        "ode": {
            "type": "object", "additionalProperties": False,
            "properties": {"rtol": {"type": "number", "exclusiveMinimum": 0},
                           "atol": {"type": "number", "exclusiveMinimum": 0}}},
        "tolerances": {
            "type": "object", "additionalProperties": False,
            "properties": {"rank_tol": {"type": "number", "exclusiveMinimum": 0},
                           "zero_tol": {"type": "number", "exclusiveMinimum": 0},
                           "symp_tol": {"type": "number", "exclusiveMinimum": 0}}},
        "frame": {
            "type": "object", "additionalProperties": False, "required": ["a"],
            "properties": {"a": _POLY}},
    },
}


# ---------------------------------------------------------------------------
# configuration

@dataclass
class ProblemConfig:
    """Validated problem with all presets expanded."""

    fam: CoefficientFamily
    bd: BoundaryData
    disc: Discretization
    ode: ODEOptions
    rank_tol: float = RANK_TOL
    zero_tol: float = ZERO_TOL
    symp_tol: float = SYMP_TOL
    frame: MatPoly = None
    boundary_preset: str = "dirichlet"
    homotopy: str = "base"
    extra: dict = field(default_factory=dict)

    @property
    def m(self):
        return self.fam.m

    @property
    def n(self):
        return self.fam.n

    @property
    def T(self):
        return self.fam.T

    def echo(self):
        """Explicit description of the problem (presets expanded)."""
        out = {"m": self.m, "n": self.n, "T": self.T, "homotopy": self.homotopy,
               "coefficients": self.fam.to_dict()["entries"],
               "boundary": {"preset": self.boundary_preset, "basis": self.bd.R.to_list()},
               "discretization": self.disc.to_dict(),
               "ode": {"rtol": self.ode.rtol, "atol": self.ode.atol},
               "tolerances": {"rank_tol": self.rank_tol, "zero_tol": self.zero_tol,
                              "symp_tol": self.symp_tol}}
        if self.frame is not None:
            out["frame"] = {"a": self.frame.to_list()}
        return out


def _path_str(path):
    s = "$"
    for p in path:
        s += f"[{p}]" if isinstance(p, int) else f".{p}"
    return s


def _poly(data, n, where):
    try:
        P = MatPoly.from_list(data)
    except (ArgumentError, ValueError) as exc:
        raise ValidationError(f"{where}: {exc}") from exc
    if P.shape != (n, n):
        raise ValidationError(f"{where}: expected {n}x{n} coefficients, got {P.shape}")
    return P


def _family(doc):
    m, n, T = doc["m"], doc["n"], float(doc["T"])
    coef = doc["coefficients"]
    homotopy = doc.get("homotopy", "base")
    form = coef["form"]
    if form in ("pqr", "sphere-geodesic"):
        if m != 1:
            raise ValidationError(f"the {form} coefficients need m = 1")
        if form == "pqr":
            p = _poly(coef["p"], n, "coefficients.p")
            q = _poly(coef["q"], n, "coefficients.q") if "q" in coef else MatPoly.zeros(n)
            r = _poly(coef["r"], n, "coefficients.r") if "r" in coef else MatPoly.zeros(n)
        else:
            p, q = MatPoly.identity(n), MatPoly.zeros(n)
            r = MatPoly.constant(-float(coef["kappa"]) * np.eye(n))
        e1 = {(1, 1): p, (1, 0): q, (0, 1): q.adjoint(), (0, 0): r}
        e0 = None
        if homotopy == "linear":
            if not any(k in coef for k in ("p0", "q0", "r0")):
                raise ValidationError("linear homotopy needs p0, q0 or r0")
            z = MatPoly.zeros(n)
            p0 = _poly(coef["p0"], n, "coefficients.p0") if "p0" in coef else p
            q0 = _poly(coef["q0"], n, "coefficients.q0") if "q0" in coef else z
            r0 = _poly(coef["r0"], n, "coefficients.r0") if "r0" in coef else z
            e0 = {(1, 1): p0, (1, 0): q0, (0, 1): q0.adjoint(), (0, 0): r0}
    else:
        e1, e0 = {}, {}
        for i, ent in enumerate(coef["entries"]):
            k, l = ent["k"], ent["l"]
            if k > m or l > m:
                raise ValidationError(f"coefficients.entries[{i}]: index ({k},{l}) exceeds m={m}")
            if (k, l) in e1:
                raise ValidationError(f"coefficients.entries[{i}]: duplicate block ({k},{l})")
            e1[(k, l)] = _poly(ent["s1"], n, f"coefficients.entries[{i}].s1")
            if "s0" in ent:
                e0[(k, l)] = _poly(ent["s0"], n, f"coefficients.entries[{i}].s0")
        for e in (e1, e0):
            for (k, l) in list(e):
                if (l, k) not in e:
                    e[(l, k)] = e[(k, l)].adjoint()
        if homotopy == "linear" and not e0:
            raise ValidationError("linear homotopy needs s0 data in the entries")
        if homotopy != "linear":
            e0 = None
    if homotopy == "base":
        z = MatPoly.zeros(n)
        e0 = {kl: z for kl in e1}
        e0[(m, m)] = e1[(m, m)]
        hom = "linear"
    elif homotopy == "scale-lower-order":
        hom = "scale-lower-order"
    else:
        hom = "linear"
    return CoefficientFamily(m, n, T, e0 if e0 is not None else e1, e1, homotopy=hom), homotopy


def _boundary(doc, rank_tol):
    m, n = doc["m"], doc["n"]
    b = doc["boundary"]
    preset = b["preset"]
    if preset == "dirichlet":
        return BoundaryData.dirichlet(m, n)
    if preset == "periodic":
        return BoundaryData.periodic(m, n)
    basis = b.get("basis", [])
    d = 2 * m * n
    if not basis:
        return BoundaryData(m, n, SubspaceFrame.zero(d), rank_tol)
    V = np.array([[complex(z[0], z[1]) for z in v] for v in basis]).T
    if V.shape[0] != d:
        raise ValidationError(f"boundary.basis vectors must have length {d}")
    if np.linalg.matrix_rank(V, tol=rank_tol * max(1.0, np.linalg.norm(V, 2))) < V.shape[1]:
        raise ValidationError("boundary.basis vectors are linearly dependent")
    return BoundaryData(m, n, SubspaceFrame(orth(V, rank_tol)), rank_tol)


def config_from_dict(doc):
    """Validate a configuration document and expand it into a :class:`ProblemConfig`."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ParseError(f"{_path_str(e.absolute_path)}: {e.message}")
    tol = doc.get("tolerances", {})
    rank_tol = tol.get("rank_tol", RANK_TOL)
    fam, homotopy = _family(doc)
    bd = _boundary(doc, rank_tol)
    dd = doc.get("discretization", {})
    disc = Discretization(dd.get("elements", 16), dd.get("degree"), dd.get("refinements", 2),
                          dd.get("s_samples", 5))
    if disc.degree is not None and disc.degree < fam.m:
        raise ValidationError(f"discretization.degree must be at least m = {fam.m}")
    od = doc.get("ode", {})
    symp_tol = tol.get("symp_tol", SYMP_TOL)
    ode = ODEOptions(rtol=od.get("rtol", 1e-10), atol=od.get("atol", 1e-10), symp_tol=symp_tol)
    frame = None
    if "frame" in doc:
        frame = _poly(doc["frame"]["a"], fam.n, "frame.a")
    return ProblemConfig(fam, bd, disc, ode, rank_tol, tol.get("zero_tol", ZERO_TOL), symp_tol,
                         frame, doc["boundary"]["preset"], homotopy)


def parse_config(path):
    """Read and validate a JSON configuration file."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(doc)


# ---------------------------------------------------------------------------
# computations

def _round(x):
    """Three significant digits, so reports do not depend on the last bits."""
    return float(f"{x:.3e}")


def _flag(stabilized=True, boundary_sensitive=False):
    return {"stabilized": bool(stabilized), "boundary_sensitive": bool(boundary_sensitive)}


def _verdict(lhs, rhs, stabilized=True, extra_ok=True, expression=None):
    if not stabilized:
        v = "INCONCLUSIVE"
    elif lhs == rhs and extra_ok:
        v = "PASS"
    else:
        v = "FAIL"
    out = {"lhs": lhs, "rhs": rhs, "verdict": v}
    if expression is not None:
        out["expression"] = expression
    return out


def _status(verdicts):
    vs = [v["verdict"] for v in verdicts.values()]
    if any(v in ("FAIL", "ERROR") for v in vs):
        return "FAIL"
    if any(v == "INCONCLUSIVE" for v in vs):
        return "INCONCLUSIVE"
    return "PASS"


class _Problem:
    """Lazily computed quantities shared by the commands."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.seq = LevelSequence(cfg.fam, cfg.bd, cfg.disc, cfg.rank_tol)
        self._cache = {}

    def _get(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def gamma(self, s):
        return self._get(("gamma", s), lambda: integrate_fundamental(self.cfg.fam, s, self.cfg.ode))

    def maslov(self, s):
        return self._get(("mas", s),
                         lambda: maslov_type_index(self.gamma(s), self.cfg.bd.W, CROSSING_TOL))

    def sf(self):
        return self._get("sf", lambda: form_spectral_flow(self.seq, self.cfg.zero_tol))

    def morse(self):
        return self._get("morse", lambda: discrete_morse_index(self.seq, 1.0, self.cfg.zero_tol))

    def kernel(self):
        return self._get("kernel", lambda: kernel_dimension(self.seq, 1.0, self.cfg.zero_tol))

    def dim_S(self):
        cfg = self.cfg
        S = stable_subspace(np.eye(cfg.m * cfg.n), annihilator_R2mb(cfg.bd), cfg.rank_tol)
        return S.dim

    def leading_definite(self):
        return self.cfg.fam.leading_positive_definite(1.0)


def cmd_indices(cfg):
    """All index quantities of the problem plus the identities they satisfy."""
    pb = _Problem(cfg)
    i1, nu1 = pb.maslov(1.0)
    i0, nu0 = pb.maslov(0.0)
    sf, ker = pb.sf(), pb.kernel()
    results = {"i_W_p1": i1, "nu_p1": nu1, "i_W_p0": i0, "nu_p0": nu0,
               "minus_sf": -sf.value, "kernel_dim": ker.value, "dim_S": pb.dim_S()}
    flags = {"i_W_p1": _flag(True, nu1 > 0), "nu_p1": _flag(), "i_W_p0": _flag(True, nu0 > 0),
             "nu_p0": _flag(), "minus_sf": _flag(sf.stabilized, sf.boundary_sensitive),
             "kernel_dim": _flag(ker.stabilized), "dim_S": _flag()}
    history = {"minus_sf": [[E, -v] for E, v in sf.history],
               "kernel_dim": [list(h) for h in ker.history]}
    verdicts = {"thm1": _verdict(-sf.value, i1 - i0, sf.stabilized,
                                 expression=f"{-sf.value} = {i1} - {i0}"),
                "kernel": _verdict(ker.value, nu1, ker.stabilized)}
    if pb.leading_definite():
        mo = pb.morse()
        results["morse_index"] = mo.value
        flags["morse_index"] = _flag(mo.stabilized)
        history["morse_index"] = [list(h) for h in mo.history]
        verdicts["cor1"] = _verdict(mo.value, i1 - results["dim_S"], mo.stabilized,
                                    expression=f"{mo.value} = {i1} - {results['dim_S']}")
    else:
        results["morse_index"] = None
        flags["morse_index"] = {"defined": False}
    diagnostics = {"symplectic_defect_p1": _round(pb.gamma(1.0).defect),
                   "symplectic_defect_p0": _round(pb.gamma(0.0).defect),
                   "hermiticity": _round(pb.seq.hermiticity)}
    return {"command": "indices", "inputs": cfg.echo(), "results": results, "flags": flags,
            "history": history, "diagnostics": diagnostics, "verdicts": verdicts,
            "status": _status(verdicts)}


def _verify_thm1(pb):
    i1, _ = pb.maslov(1.0)
    i0, _ = pb.maslov(0.0)
    sf = pb.sf()
    v = _verdict(-sf.value, i1 - i0, sf.stabilized, expression=f"{-sf.value} = {i1} - {i0}")
    v.update({"minus_sf": -sf.value, "i_W_p1": i1, "i_W_p0": i0,
              "flags": _flag(sf.stabilized, sf.boundary_sensitive),
              "history": [[E, -x] for E, x in sf.history]})
    return v


def _verify_cor1(pb):
    mo = pb.morse()
    i1, _ = pb.maslov(1.0)
    dS = pb.dim_S()
    v = _verdict(mo.value, i1 - dS, mo.stabilized, expression=f"{mo.value} = {i1} - {dS}")
    v.update({"morse_index": mo.value, "i_W_p1": i1, "dim_S": dS,
              "flags": _flag(mo.stabilized), "history": [list(h) for h in mo.history]})
    return v


def _verify_thm2(pb):
    cfg = pb.cfg
    gamma = base_path(cfg.fam)
    K = compatible_K(cfg.m, cfg.n)
    check_triangular(gamma, K)
    ts = list(np.linspace(0.0, cfg.T, max(2, cfg.disc.s_samples)))
    dims, index = triangular_index(gamma, K, cfg.bd.R, ts, cfg.rank_tol, cfg.zero_tol,
                                   check=False)
    printed, _ = triangular_index(gamma, K, cfg.bd.R, ts, cfg.rank_tol, cfg.zero_tol,
                                  check=False, reading="end-left")
    iw, _ = maslov_type_index(gamma, cfg.bd.W, CROSSING_TOL)
    direct = [intersection_dim(graph_frame(gamma(t)), cfg.bd.W, CROSSING_TOL) for t in ts]
    v = _verdict(index, iw, True, dims == direct)
    v.update({"formula_index": index, "i_W_p0": iw, "t": [float(t) for t in ts],
              "dims_formula": dims, "dims_direct": direct, "dims_end_left_reading": printed,
              "end_left_reading_agrees": printed == direct,
              "symplectic_defect": _round(gamma.defect)})
    return v


def _verify_thm3(pb):
    cfg = pb.cfg
    fam2, bd2, build = frame_change(cfg.frame, cfg.fam, cfg.bd)
    gamma = pb.gamma(1.0)
    lhs, rhs = frame_change_shift(cfg.frame, cfg.bd, gamma, build, bd2)
    g2 = integrate_fundamental(fam2, 1.0, cfg.ode)
    conj = build(gamma)
    res = max(np.linalg.norm(g2(t) - conj(t)) / max(1.0, np.linalg.norm(conj(t)))
              for t in np.linspace(0.0, cfg.T, 17))
    v = _verdict(lhs, rhs, True, res <= CONJUGATION_TOL)
    v.update({"conjugation_residual": _round(res), "conjugation_tol": CONJUGATION_TOL})
    return v


_VERIFY = {"thm1": _verify_thm1, "thm2": _verify_thm2, "thm3": _verify_thm3,
           "cor1": _verify_cor1}


def cmd_verify(cfg, which):
    """Both sides of one identity, computed along independent routes."""
    if which not in _VERIFY:
        raise ValueError(f"unknown identity {which!r}")
    pb = _Problem(cfg)
    if which == "cor1" and not pb.leading_definite():
        raise PreconditionError("the leading coefficient at s = 1 is not positive definite")
    if which == "thm3" and cfg.m != 1:
        raise PreconditionError("the frame change identity needs m = 1")
    if which == "thm3" and cfg.frame is None:
        raise PreconditionError("the configuration has no frame path 'frame.a'")
    verdict = _VERIFY[which](pb)
    verdicts = {which: verdict}
    return {"command": "verify", "identity": which, "inputs": cfg.echo(),
            "verdicts": verdicts, "status": _status(verdicts)}


def cmd_selftest(seed=0, zero_tol=ZERO_TOL, scale=1.0):
    """Randomized oracle suites with a fixed seed."""
    res = suites.run_all(seed, zero_tol, scale)
    verdicts = {name: r.to_dict() for name, r in res.items()}
    status = "PASS" if all(r.ok for r in res.values()) else "FAIL"
    return {"command": "selftest", "seed": seed, "zero_tol": zero_tol, "scale": scale,
            "suites": verdicts, "status": status}


# ---------------------------------------------------------------------------
# output

def _text(report):
    lines = [f"{report['command']}: {report['status']}"]
    if "results" in report:
        for k, v in report["results"].items():
            lines.append(f"  {k} = {v}")
    if "suites" in report:
        for k, v in report["suites"].items():
            lines.append(f"{k}: {v['verdict']} ({v['passed']}/{v['total']})")
    for k, v in report.get("verdicts", {}).items():
        detail = v.get("expression", f"{v['lhs']} vs {v['rhs']}")
        lines.append(f"{k}: {v['verdict']} ({detail})")
    if "error" in report:
        lines.append(f"error: {report['error']}")
    return "\n".join(lines) + "\n"


def render(report, fmt="json"):
    if fmt == "json":
        return json.dumps(report, indent=2, ensure_ascii=False, allow_nan=False) + "\n"
    if fmt == "text":
        return _text(report)
    raise ValueError(f"unknown format {fmt!r}")


def emit_report(report, fmt="json", path=None):
    """Write the report to ``path`` (or stdout when ``path`` is None or '-')."""
    out = render(report, fmt)
    if path is None or path == "-":
        sys.stdout.write(out)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(out)
    return out


def exit_code(report):
    return {"PASS": 0, "FAIL": 1, "INCONCLUSIVE": 2}.get(report.get("status"), 1)


def _parser():
    ap = argparse.ArgumentParser(prog="indexflow", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="JSON problem file")
            p.add_argument("--refine", type=int, default=None,
                           help="number of mesh doublings (overrides the config)")
        p.add_argument("--json", metavar="OUT", default=None, help="also write the JSON report")
        p.add_argument("--format", choices=("json", "text"), default="json",
                       help="format printed on stdout")

    common(sub.add_parser("indices", help="compute all indices of a problem"))
    pv = sub.add_parser("verify", help="check one identity")
    pv.add_argument("which", choices=sorted(_VERIFY))
    common(pv)
    ps = sub.add_parser("selftest", help="run the randomized oracle suites")
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--zero-tol", type=float, default=ZERO_TOL)
    ps.add_argument("--scale", type=float, default=1.0, help="multiplier for instance counts")
    common(ps, config=False)
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "selftest":
            report = cmd_selftest(args.seed, args.zero_tol, args.scale)
        else:
            cfg = parse_config(args.config)
            if args.refine is not None:
                cfg.disc.refinements = args.refine
            if args.command == "indices":
                report = cmd_indices(cfg)
            else:
                report = cmd_verify(cfg, args.which)
    except (IndexFlowError, OSError) as exc:
        report = {"command": args.command, "status": "FAIL",
                  "error": f"{type(exc).__name__}: {exc}"}
        if isinstance(exc, PreconditionError):
            report["precondition"] = False
    if args.json:
        emit_report(report, "json", args.json)
    emit_report(report, args.format)
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
