"""Command-line driver: certificates, initial set, section crossing, Stokes
estimates, the exponent constant, merged reports and the end-to-end check.

Exit codes: 0 success / verified, 1 a verdict failed or a run raised,
2 bad parameters.
"""

import argparse
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .certificate import (
    CertificateParams,
    DomainSpec,
    GateFailed,
    OutOfRange,
    certify,
    scan_rho2,
)
from .complex_interval import (
    ComplexBox,
    RealInterval,
    cbox_cuberoot_upper,
    cbox_inv,
    cbox_sqrt_principal,
    iv_cbrt,
    iv_sqrt,
)
from .extended_field import lift, stable_from_unstable
from .inner_system import asymptotic_seed, eval_J
from .quadrature import constant_A
from .taylor_integrator import (
    FAST,
    RIGOROUS,
    FlowEnclosure,
    IntegratorConfig,
    integrate_to_section,
)

THREADS_ENV = "STOKESCERT_THREADS"
KAPPA_STAR = 6.24
GAMMA = 0.5
ETA_STAR = 1000.0

# published reference values attached to report numbers
ANCHORS = {
    "L": "<= 0.93",
    "g1": ">= 0.0371",
    "g2": ">= 0.0047",
    "b1_tilde": "<= 0.7",
    "b2_tilde": "<= 0.71",
    "reY": "[-0.00075, -0.0005]",
    "imU": "[-7.186, -7.18]",
    "theta": "~1.63",
    "A": "~0.177744",
}


class NotCertified(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# serialization


def iv_json(x, anchor=None):
    return {"lo": float(x.lo), "hi": float(x.hi), "anchor": anchor}


def box_json(z, anchor=None):
    return {"re": iv_json(z.re), "im": iv_json(z.im), "anchor": anchor}


def box_from_json(d):
    return ComplexBox(RealInterval(d["re"]["lo"], d["re"]["hi"]),
                      RealInterval(d["im"]["lo"], d["im"]["hi"]))


def dumps(doc):
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def content_hash(obj):
    """git-style blob hash of the canonical JSON form of obj."""
    data = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


@dataclass
class RunManifest:
    command: str
    params: dict
    config: dict
    outputs: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    @property
    def config_hash(self):
        return content_hash({"command": self.command, "params": self.params, "config": self.config})

    def to_json(self):
        d = asdict(self)
        d["config_hash"] = self.config_hash
        return d


@dataclass
class StokesEstimate:
    rho: float
    deltaY: complex
    theta_rho: float
    extrapolated_theta: float = None

    def to_json(self):
        return {"rho": self.rho, "deltaY": [self.deltaY.real, self.deltaY.imag],
                "theta_rho": self.theta_rho, "extrapolated_theta": self.extrapolated_theta}


def _write(path, doc):
    text = dumps(doc)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# library entry points used by the commands


def report_json(rep, anchored=None):
    """JSON form of a CertificateReport; anchored names carry their reference values."""
    if anchored is None:
        anchored = ("b1_tilde", "b2_tilde") if rep.params.eta is not None else ("L", "g1", "g2")
    d = {"params": asdict(rep.params), "verdict": rep.verdict, "reasons": list(rep.reasons),
         "failed_gate": rep.failed_gate, "certified": rep.certified, "values": {}}
    for name, v in rep.named_values():
        d["values"][name] = iv_json(v, ANCHORS[name] if name in anchored else None)
    return d


def cmd_certify(params, scan=False):
    """Returns (report, best-scan report or None)."""
    if scan:
        eta = params.eta if params.eta is not None else ETA_STAR
        best, _ = scan_rho2(eta=eta, gamma=params.gamma, kappa=params.kappa)
        if best is None:
            return certify(CertificateParams(params.kappa, params.gamma, 20.0, 1.01, eta)), None
        return best, best
    return certify(params), None


def tail_certificate(eta=ETA_STAR, gamma=GAMMA):
    best, _ = scan_rho2(eta=eta, gamma=gamma)
    if best is None:
        raise NotCertified("no certified (rho1, rho2) for eta = %g" % eta)
    return best


def cmd_initial_set(eta_star=ETA_STAR, rho0=7.12, re_u0=-2000.0, gamma=GAMMA, kappa=KAPPA_STAR):
    """Initial boxes U0 x Z0 x A0 x B0 and the certificate they rest on."""
    if not re_u0 <= -eta_star:
        raise NotCertified("Re U0 = %g is outside the tail domain Re U <= -%g" % (re_u0, eta_star))
    rho_star = DomainSpec(kappa, gamma).rho_reach
    if not rho0 >= rho_star.hi:
        raise NotCertified("rho0 = %g is below rho* = %.6f" % (rho0, rho_star.hi))
    rep = tail_certificate(eta_star, gamma)
    U0 = complex(re_u0, -rho0)
    mod = iv_sqrt(RealInterval(re_u0).sqr() + RealInterval(rho0).sqr())
    q = iv_cbrt(mod)
    r1 = (rep.b1_tilde / q ** 8).hi
    r2 = (rep.b2_tilde / q ** 4).hi
    sq = lambda r: ComplexBox(RealInterval(-r, r), RealInterval(-r, r))
    Ub = ComplexBox.point(U0)
    Z = (sq(r1), sq(r2), sq(r2))
    A = cbox_inv(cbox_sqrt_principal(1 + eval_J(Ub, Z)))
    B = cbox_cuberoot_upper(Ub)
    boxes = [Ub, Z[0], Z[1], Z[2], A, B]
    info = {"U0": [U0.real, U0.imag], "W_radius": r1, "XY_radius": r2,
            "b1_tilde": iv_json(rep.b1_tilde, ANCHORS["b1_tilde"]),
            "b2_tilde": iv_json(rep.b2_tilde, ANCHORS["b2_tilde"]),
            "rho1": rep.params.rho1, "rho2": rep.params.rho2, "eta": eta_star,
            "rho_star": iv_json(rho_star)}
    return boxes, info


def initial_state(boxes, seed="midpoint"):
    """Point start for fast mode: the box midpoint or the two-term asymptotic graph."""
    U0 = complex(boxes[0].mid())
    if seed == "midpoint":
        return list(lift(U0, (0j, 0j, 0j)))
    if seed == "asymptotic":
        return list(lift(U0, asymptotic_seed(U0, order=2)))
    raise ValueError("seed must be 'midpoint' or 'asymptotic'")


def crossing_json(cr, rho_guard=None):
    d_lo, mig = stable_from_unstable(cr.Z_at_section.Y)
    return {
        "mode": cr.mode,
        "steps": cr.steps,
        "t_cross": iv_json(cr.t_cross),
        "U": box_json(cr.U_at_section),
        "imU": iv_json(cr.U_at_section.im, ANCHORS["imU"]),
        "W": box_json(cr.Z_at_section.W),
        "X": box_json(cr.Z_at_section.X),
        "Y": box_json(cr.Z_at_section.Y),
        "reY": iv_json(cr.reY_interval, ANCHORS["reY"]),
        "deltaY_lower_bound": float(mig.lo),
        "bolzano": {"before": box_json(cr.witness_before), "after": box_json(cr.witness_after),
                    "ok": cr.bolzano_ok()},
        "section": cr.section,
        "domain_guard": {"rho": rho_guard, "ok": cr.guard_ok, "max_im_U": cr.max_im_U},
        "last_widths": [float(w) for w in cr.widths],
    }


def run_crossing(mode=FAST, order=20, tol=1e-15, rho0=7.12, re_u0=-2000.0, seed="midpoint",
                 section=None, guard=True, h=None, init_boxes=None, dump=None):
    """Fast or rigorous run to {Re U = section}; rigorous defaults to the 100-unit leg."""
    boxes = init_boxes if init_boxes is not None else cmd_initial_set(rho0=rho0, re_u0=re_u0)[0]
    if section is None:
        section = 0.0 if mode == FAST else float(boxes[0].re.lo) + 100.0
    if h is None:
        h = 1.0
    cfg = IntegratorConfig(order=order, tol=tol, mode=mode, h_init=h, h_max=max(h, 1.0)).validate()
    guard_rho = float(DomainSpec(KAPPA_STAR, GAMMA).rho_reach.hi) if guard else None
    init = initial_state(boxes, seed) if mode == FAST else FlowEnclosure.from_boxes(boxes)
    t0 = time.perf_counter()
    cr = integrate_to_section(init, cfg, section=section, guard_rho=guard_rho,
                              guard_action="record", record=dump is not None)
    elapsed = time.perf_counter() - t0
    if dump is not None and cr.trajectory is not None:
        cr.trajectory.write_csv(dump)
    return cr, cfg, elapsed, guard_rho


def stokes_run(rho_s, re_u0=-2000.0, cfg=None):
    """Theta_rho from one fast crossing started at re_u0 - i rho_s."""
    cfg = cfg or IntegratorConfig()
    U0 = complex(re_u0, -rho_s)
    s = lift(U0, asymptotic_seed(U0, order=2))
    cr = integrate_to_section(s, cfg, record=False)
    rho = -float(cr.U_at_section.im.mid())
    dY, _ = stable_from_unstable(complex(cr.Z_at_section.Y.mid()))
    theta = abs(dY.real) * math.exp(rho)
    return StokesEstimate(rho, dY, theta)


def richardson(ests):
    """Theta + a/rho + b/rho^2 through three estimates; returns Theta."""
    if len(ests) < 3:
        return None
    pts = sorted(ests, key=lambda e: e.rho)[-3:]
    V = np.array([[1.0, 1 / e.rho, 1 / e.rho ** 2] for e in pts])
    y = np.array([e.theta_rho for e in pts])
    return float(np.linalg.solve(V, y)[0])


def cmd_stokes(rhos, re_u0=-2000.0, cfg=None, threads=None):
    threads = threads or _threads()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        ests = list(pool.map(lambda r: stokes_run(r, re_u0, cfg), rhos))
    ex = richardson(ests)
    for e in ests:
        e.extrapolated_theta = ex
    return ests


def cmd_report(paths):
    """Merge JSON outputs of earlier runs, grouped by command."""
    doc = {"sections": {}, "manifests": []}
    for p in paths:
        try:
            with open(p, encoding="utf-8") as fh:
                run = json.load(fh)
        except FileNotFoundError:
            raise FileNotFoundError("missing run: %s" % p)
        man = run.get("manifest", {})
        cmd = man.get("command", "unknown")
        doc["sections"].setdefault(cmd, []).append(run.get("result"))
        doc["manifests"].append({k: v for k, v in man.items() if k != "timing"})
    return doc


# ---------------------------------------------------------------------------
# argparse glue


def _params(a):
    return CertificateParams(kappa=a.kappa, gamma=a.gamma, rho1=a.rho1, rho2=a.rho2, eta=a.eta)


def _emit(a, command, params, config, result, verdicts, elapsed, outputs=()):
    man = RunManifest(command, params, config, list(outputs), verdicts, {"seconds": round(elapsed, 3)})
    _write(a.out, {"manifest": man.to_json(), "result": result})


def _do_certify(a):
    t0 = time.perf_counter()
    params = _params(a)
    params.validate()
    rep, best = cmd_certify(params, scan=a.scan_rho2)
    result = report_json(rep)
    _emit(a, "certify", asdict(params), {"scan_rho2": a.scan_rho2}, result,
          {"certificate": rep.verdict}, time.perf_counter() - t0)
    if not rep.certified:
        msg = "gate failed: %s" % rep.failed_gate if rep.failed_gate else rep.verdict
        print(msg, file=sys.stderr)
    return 0 if rep.certified else 1


def _do_initial_set(a):
    t0 = time.perf_counter()
    boxes, info = cmd_initial_set(a.eta or ETA_STAR, a.rho0, a.re_u0, a.gamma)
    names = ("U", "W", "X", "Y", "A", "B")
    result = {"boxes": {n: box_json(b) for n, b in zip(names, boxes)}, "info": info}
    _emit(a, "initial-set", {"eta": a.eta or ETA_STAR, "rho0": a.rho0, "re_u0": a.re_u0}, {},
          result, {"tail_certificate": "Certified"}, time.perf_counter() - t0)
    return 0


def _load_boxes(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    b = doc["result"]["boxes"]
    return [box_from_json(b[n]) for n in ("U", "W", "X", "Y", "A", "B")]


def _do_crossing(a):
    boxes = _load_boxes(a.init) if a.init else None
    cr, cfg, elapsed, guard_rho = run_crossing(a.mode, a.order, a.tol, a.rho0, a.re_u0, a.seed,
                                               a.section, not a.no_guard, a.h, boxes, a.dump)
    result = crossing_json(cr, guard_rho)
    verdicts = {"bolzano": cr.bolzano_ok(), "domain_guard": cr.guard_ok}
    if cr.mode == RIGOROUS:
        verdicts["note"] = "leg-limited run, no verdict" if cr.section != 0 else "full run"
    outputs = [a.dump] if a.dump else []
    _emit(a, "crossing", {"rho0": a.rho0, "re_u0": a.re_u0, "seed": a.seed, "section": cr.section},
          cfg.to_dict(), result, verdicts, elapsed, outputs)
    return 0


def _do_stokes(a):
    t0 = time.perf_counter()
    cfg = IntegratorConfig(order=a.order, tol=a.tol).validate()
    ests = cmd_stokes(a.rho, a.re_u0, cfg)
    result = {"estimates": [e.to_json() for e in ests],
              "extrapolated_theta": {"value": ests[0].extrapolated_theta, "anchor": ANCHORS["theta"]}}
    _emit(a, "stokes", {"rho": list(a.rho), "re_u0": a.re_u0}, cfg.to_dict(), result, {},
          time.perf_counter() - t0)
    return 0


def _do_constant_a(a):
    t0 = time.perf_counter()
    A, n, widths = constant_A()
    result = {"A": iv_json(A, ANCHORS["A"]), "panels": n, "widths": widths}
    _emit(a, "constant-a", {}, {"target_width": 1e-5}, result, {}, time.perf_counter() - t0)
    return 0


def _do_report(a):
    _write(a.out, cmd_report(a.runs))
    return 0


def cmd_verify(mode=FAST, full=False, rho0=7.12):
    """Certificate at kappa*, tail certificate, and the sign of Re Y at the section."""
    main = certify(CertificateParams(KAPPA_STAR, GAMMA, 38.0, 1.9))
    tail = tail_certificate()
    doc = {"certificate": report_json(main), "tail_certificate": report_json(tail)}
    cr_fast, _, _, guard_rho = run_crossing(FAST, rho0=rho0)
    doc["fast_crossing"] = crossing_json(cr_fast, guard_rho)
    rigorous_ok = False
    if mode == RIGOROUS:
        cr = run_crossing(RIGOROUS, rho0=rho0, section=0.0 if full else None)[0]
        doc["rigorous_crossing"] = crossing_json(cr, guard_rho)
        rigorous_ok = cr.section == 0.0 and cr.reY_interval.hi < 0 and cr.bolzano_ok()
    chain = main.certified and tail.certified and rigorous_ok
    doc["verdict"] = "verified" if chain else "rigorous-leg-only"
    if not chain:
        doc["caveat"] = ("rigorous-leg-only: certificates and the fast-mode crossing are reported; "
                         "the rigorous enclosure was not carried to Re U = 0")
    return chain, doc


def _do_verify(a):
    t0 = time.perf_counter()
    chain, doc = cmd_verify(a.mode, a.full, a.rho0)
    _emit(a, "verify", {"mode": a.mode, "full": a.full, "rho0": a.rho0}, {}, doc,
          {"theorem_chain": chain}, time.perf_counter() - t0)
    return 0 if chain else 1


def build_parser():
    p = argparse.ArgumentParser(prog="stokescert", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", default=None, help="write JSON here instead of stdout")
        sp.add_argument("--gamma", type=float, default=GAMMA)
        sp.add_argument("--eta", type=float, default=None)

    def integ(sp):
        sp.add_argument("--mode", choices=(FAST, RIGOROUS), default=FAST)
        sp.add_argument("--order", type=int, default=20)
        sp.add_argument("--tol", type=float, default=1e-15)
        sp.add_argument("--rho0", type=float, default=7.12)
        sp.add_argument("--re-u0", type=float, default=-2000.0)

    sp = sub.add_parser("certify", help="contraction certificate")
    common(sp)
    sp.add_argument("--kappa", type=float, default=KAPPA_STAR)
    sp.add_argument("--rho1", type=float, default=38.0)
    sp.add_argument("--rho2", type=float, default=1.9)
    sp.add_argument("--scan-rho2", action="store_true", help="search rho2 (rho1 = 20 rho2)")
    sp.set_defaults(func=_do_certify)

    sp = sub.add_parser("initial-set", help="initial boxes from the tail certificate")
    common(sp)
    sp.add_argument("--rho0", type=float, default=7.12)
    sp.add_argument("--re-u0", type=float, default=-2000.0)
    sp.set_defaults(func=_do_initial_set)

    sp = sub.add_parser("crossing", help="integrate to the section Re U = 0")
    common(sp)
    integ(sp)
    sp.add_argument("--init", default=None, help="JSON written by initial-set")
    sp.add_argument("--seed", choices=("midpoint", "asymptotic"), default="midpoint")
    sp.add_argument("--section", type=float, default=None,
                    help="Re U of the section (rigorous default: Re U0 + 100)")
    sp.add_argument("--h", type=float, default=None)
    sp.add_argument("--no-guard", action="store_true")
    sp.add_argument("--dump", default=None, help="CSV trajectory file")
    sp.set_defaults(func=_do_crossing)

    sp = sub.add_parser("stokes", help="Theta_rho estimates and extrapolation")
    common(sp)
    integ(sp)
    sp.add_argument("--rho", type=float, nargs="+", default=[7.2, 8.0, 9.0])
    sp.set_defaults(func=_do_stokes)

    sp = sub.add_parser("constant-a", help="verified quadrature of A")
    common(sp)
    sp.set_defaults(func=_do_constant_a)

    sp = sub.add_parser("report", help="merge JSON outputs")
    common(sp)
    sp.add_argument("runs", nargs="*")
    sp.set_defaults(func=_do_report)

    sp = sub.add_parser("verify", help="end-to-end chain")
    common(sp)
    sp.add_argument("--mode", choices=(FAST, RIGOROUS), default=FAST)
    sp.add_argument("--full", action="store_true", help="rigorous run all the way to Re U = 0")
    sp.add_argument("--rho0", type=float, default=7.12)
    sp.set_defaults(func=_do_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OutOfRange, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except GateFailed as exc:
        print("gate failed: %s" % exc.name, file=sys.stderr)
        return 1
    except (NotCertified, ArithmeticError, RuntimeError, FileNotFoundError) as exc:
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
