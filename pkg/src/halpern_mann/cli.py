"""Command line entry point: ``run``, ``rates`` and ``verify``.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import fixtures, geometry as geo, rates as R, verify as V
from .errors import NumericError, RateOverflow, UsageError
from .exact import bit_budget, format_nat, to_real
from .output import dumps, write_csv, write_json, write_jsonl
from .schemes import (
    Schedule,
    harmonic_schedule,
    run_halpern,
    run_hm,
    run_hm_errors,
    run_km,
    run_tkm,
)
from .splitting import GDR, GFB, gdr_step_identity_gap, run_gdr, run_gfb

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

SCHEMES = ("hm", "hm_errors", "halpern", "km", "tkm", "gfb", "gdr")
CONFIG_KEYS = {"fixture", "scheme", "schedule", "steps", "eps_grid", "counter", "errors",
               "seed", "keep_every"}


# --------------------------------------------------------------------------
# run


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    return normalize_config(cfg)


def normalize_config(cfg):
    """Validate a run config and fill in defaults."""
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    name = cfg.get("fixture")
    if name not in fixtures.NAMES:
        raise UsageError(f"unknown fixture {name!r}; known: {', '.join(fixtures.NAMES)}")
    scheme = cfg.get("scheme", "gfb" if name == "S1" else "gdr" if name == "S2" else "hm")
    if scheme not in SCHEMES:
        raise UsageError(f"unknown scheme {scheme!r}; known: {', '.join(SCHEMES)}")
    split = name in ("S1", "S2")
    if split != (scheme in (GFB, GDR)) or (name == "S1" and scheme == GDR) or (name == "S2" and scheme == GFB):
        raise UsageError(f"scheme {scheme} does not apply to fixture {name}")
    steps = cfg.get("steps", 1000)
    if not isinstance(steps, int) or isinstance(steps, bool) or steps < 1:
        raise UsageError("steps must be a positive integer")
    keep = cfg.get("keep_every", 1)
    if not isinstance(keep, int) or keep < 1:
        raise UsageError("keep_every must be a positive integer")
    sched = dict(cfg.get("schedule", {}))
    alpha = sched.get("alpha", "harmonic")
    if alpha != "harmonic":
        alpha = str(to_real(alpha))
    beta = str(to_real(sched.get("beta", "0" if split else "1/2")))
    grid = [str(to_real(e)) for e in cfg.get("eps_grid", [])]
    if any(Fraction(e) <= 0 for e in grid):
        raise UsageError("eps_grid entries must be positive")
    if grid and keep != 1:
        raise UsageError("threshold reports need keep_every = 1")
    counter = cfg.get("counter", {"a": 2, "b": 0})
    a, b = counter.get("a", 2), counter.get("b", 0)
    if not all(isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in (a, b)):
        raise UsageError("counter coefficients must be natural numbers")
    errors = cfg.get("errors", {"kind": "geometric", "ratio": "1/2", "scale": 1})
    if errors.get("kind", "geometric") != "geometric":
        raise UsageError("only geometric error terms are supported")
    ratio, scale = to_real(errors.get("ratio", "1/2")), to_real(errors.get("scale", 1))
    if not 0 < ratio < 1 or scale < 0:
        raise UsageError("geometric errors need 0 < ratio < 1 and scale >= 0")
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int):
        raise UsageError("seed must be an integer")
    return {"fixture": name, "scheme": scheme, "schedule": {"alpha": alpha, "beta": beta},
            "steps": steps, "keep_every": keep, "eps_grid": grid, "counter": {"a": a, "b": b},
            "errors": {"kind": "geometric", "ratio": str(ratio), "scale": str(scale)},
            "seed": seed}


def build_schedule(cfg):
    alpha, beta = cfg["schedule"]["alpha"], Fraction(cfg["schedule"]["beta"])
    if alpha == "harmonic" and 0 < beta < 1:
        return harmonic_schedule(beta)
    b = float(beta)
    if alpha == "harmonic":
        return Schedule(lambda n: 1.0 / (n + 1), lambda n: b, None, f"harmonic(beta={beta})")
    a = float(Fraction(alpha))
    return Schedule(lambda n: a, lambda n: b, None, f"constant({alpha},{beta})")


def _report(eps, index, rate, horizon, *args, name=None):
    return V.threshold_report(Fraction(eps), index, rate, horizon, *args, name=name).to_json()


def _hm_reports(traj, grid, N, moduli, f, horizon):
    out = []
    rho = R.ar_rates_rho(moduli, N)
    mu = R.metastability_rate(moduli, N)
    steps_r, du, dt = traj.step_residuals(), traj.map_residuals("U"), traj.map_residuals("T")
    for e in grid:
        eps = float(Fraction(e))
        out.append(_report(e, V.empirical_threshold(steps_r, eps), rho.rho1, horizon,
                           name="rho1 vs d(x_{n+1},x_n)"))
        out.append(_report(e, V.empirical_threshold(du, eps), rho.rho2, horizon,
                           name="rho2 vs d(U x_n,x_n)"))
        out.append(_report(e, V.empirical_threshold(dt, eps), rho.rho3, horizon,
                           name="rho3 vs d(T x_n,x_n)"))
        out.append(_report(e, V.empirical_metastability(traj, eps, f), mu, horizon, f,
                           name=f"mu vs metastability, f(n)={f.name}"))
    return out


def _splitting_gamma(fx, schedule, probe=64):
    """Largest band constant (on a 2^-20 grid) that the raw ``beta`` satisfies on a probe window."""
    lo, hi = fx.problem.beta_range()
    betas = [float(schedule.beta(n)) for n in range(probe)]
    g = min(min(betas) - lo, hi - max(betas), 1.0)
    if g <= 0:
        return None
    return Fraction(math.floor(g * (1 << 20)), 1 << 20)


def execute(cfg):
    """Run one configured experiment; returns ``(trajectories, model, report)``."""
    fx = fixtures.get(cfg["fixture"])
    scheme, steps, keep = cfg["scheme"], cfg["steps"], cfg["keep_every"]
    schedule = build_schedule(cfg)
    f = R.CounterFn.affine(cfg["counter"]["a"], cfg["counter"]["b"])
    grid = cfg["eps_grid"]
    reports, extra = [], {}
    moduli = schedule.moduli

    if scheme == "hm":
        traj = run_hm(fx.problem, schedule, steps, keep)
        trajs = [traj]
        if grid:
            if moduli is None:
                raise UsageError("rates need the harmonic schedule with 0 < beta < 1")
            reports = _hm_reports(traj, grid, fx.problem.N, moduli, f, steps)
    elif scheme == "hm_errors":
        ratio, scale = Fraction(cfg["errors"]["ratio"]), Fraction(cfg["errors"]["scale"])
        scale_f, ratio_f = float(scale), float(ratio)

        def deltas(k):
            return scale_f * ratio_f ** k

        exact = run_hm(fx.problem, schedule, steps, keep, residuals=False)
        pert = run_hm_errors(fx.problem, schedule, deltas, steps, keep_every=keep, residuals=False)
        trajs = [exact, pert]
        gap = np.array([fx.space.dist(a, b) for a, b in zip(exact.points, pert.points)])
        extra["final_error_gap"] = float(gap[-1])
        if grid:
            if moduli is None:
                raise UsageError("rates need the harmonic schedule with 0 < beta < 1")
            nu = R.error_rates(moduli.gamma2, lambda k: scale * ratio ** k,
                               chi1=R.geometric_chi(scale, ratio))
            for e in grid:
                reports.append(_report(e, V.empirical_threshold(gap, float(Fraction(e))), nu,
                                       steps, name="nu_hat vs d(x'_n,x_n)"))
    elif scheme == "halpern":
        traj = run_halpern(fx.problem.T, fx.problem.u, fx.problem.x0, schedule.alpha, steps, keep)
        trajs = [traj]
        if grid:
            if moduli is None:
                raise UsageError("rates need the harmonic schedule")
            h = R.halpern_rates(fx.problem.N, moduli)
            for e in grid:
                eps = float(Fraction(e))
                reports.append(_report(e, V.empirical_threshold(traj.step_residuals(), eps),
                                       h.ar_rate, steps, name="halpern ar vs d(y_{n+1},y_n)"))
                reports.append(_report(e, V.empirical_threshold(traj.map_residuals("T"), eps),
                                       h.rho_tilde, steps, name="halpern rho vs d(T y_n,y_n)"))
    elif scheme == "km":
        trajs = [run_km(fx.problem.U, fx.problem.x0, schedule.beta, steps, keep)]
    elif scheme == "tkm":
        if fx.problem.x0.model != geo.EUCLIDEAN:
            raise UsageError("the Tikhonov-Mann scheme needs a Euclidean fixture")
        gam = lambda n: 1.0 - float(schedule.alpha(n + 1))  # noqa: E731
        trajs = [run_tkm(fx.problem.U, fx.problem.x0, schedule.beta, gam, steps)]
    else:
        gamma = _splitting_gamma(fx, schedule)
        if gamma is None:
            raise UsageError("beta leaves the admissible band of the splitting scheme")
        split_moduli = R.example_moduli()
        if scheme == GFB:
            traj = run_gfb(fx.problem, schedule, steps, keep)
            trajs = [traj]
            mus = R.splitting_rates(GFB, 2, split_moduli, gamma)
            pairs = [(traj, mus["mu2"])]
            extra["final_zero_residual"] = float(fx.space.dist(
                fx.problem.forward_backward_map()(traj.last), traj.last))
        else:
            run = run_gdr(fx.problem, schedule, steps, keep)
            trajs = [run.x, run.y, run.z]
            mus = R.splitting_rates(GDR, 4, split_moduli, gamma)
            pairs = [(run.x, mus["mu3"]), (run.y, mus["mu4"]), (run.z, mus["mu5"])]
            if keep == 1:
                extra["step_identity_gap"] = gdr_step_identity_gap(run, schedule)
            extra["final_yz_gap"] = float(fx.space.dist(run.y.last, run.z.last))
        extra["gamma"] = str(gamma)
        for e in grid:
            for t, mu in pairs:
                idx = V.empirical_metastability(t, float(Fraction(e)), f)
                reports.append(_report(e, idx, mu, len(t) - 1, f,
                                       name=f"{mu.name} vs metastability of {t.stream}"))

    final = {t.stream: t.last.to_json() for t in trajs}
    report = {"config": cfg, "fixture_note": fx.note, "schedule": schedule.label,
              "final": final, "thresholds": reports, **extra}
    if fx.limit is not None and scheme in ("hm", "halpern", "gfb"):
        report["distance_to_limit"] = fx.space.dist(trajs[0].last, fx.limit)
    return trajs, fx.space.tag, report


def cmd_run(config_path, out_dir):
    cfg = load_config(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trajs, model, report = execute(cfg)
    write_csv(out / "trajectory.csv", trajs)
    write_jsonl(out / "trajectory.jsonl", trajs, model)
    write_json(out / "report.json", report)
    unsound = [r for r in report["thresholds"] if r["sound"] is False]
    print(f"wrote {out / 'trajectory.csv'}, {out / 'trajectory.jsonl'}, {out / 'report.json'}")
    for r in report["thresholds"]:
        print(f"eps={r['eps']:>6} {r['rate_name']}: index={r['empirical_index']} "
              f"bound={'' if r['rate_exact'] else '>= '}{r['rate_bound']} sound={r['sound']}")
    return EXIT_FAIL if unsound else EXIT_OK


# --------------------------------------------------------------------------
# rates


def _moduli(kind, beta):
    if kind == "example":
        return R.example_moduli(beta)
    if kind == "zero":
        return R.zero_moduli(min(beta, 1 - beta))
    if kind == "linear":
        return R.linear_moduli(min(beta, 1 - beta))
    raise UsageError(f"unknown moduli {kind!r}")


def rate_value(name, args):
    """Evaluate a named rate; returns ``(value, formula)``. May raise RateOverflow."""
    beta = to_real(args.beta)
    m = _moduli(args.moduli, beta)
    eps, N = to_real(args.eps), args.N
    f = R.CounterFn.affine(*args.f)
    q = args.q_star
    if name in ("Gamma1", "Gamma3", "Gamma4"):
        fn = getattr(m, name.lower())
        return fn(eps), fn.formula
    if name == "Gamma2":
        if args.k is None:
            raise UsageError("Gamma2 needs --k")
        return m.gamma2(args.k), m.gamma2.formula
    if name == "Gamma2_prime":
        if args.k is None:
            raise UsageError("Gamma2_prime needs --k")
        return m.gamma2.prime(args.k, eps), "product form of Gamma2 at (k, eps)"
    if name in ("theta1", "theta2", "theta3", "theta4"):
        fn = getattr(R.ar_rates(m, N, q), name)
        return fn(eps), fn.formula
    if name in ("rho1", "rho2", "rho3", "rho"):
        fn = getattr(R.ar_rates_rho(m, N, q), name)
        return fn(eps), fn.formula
    if name == "mu":
        fn = R.metastability_rate(m, N, q)
        return fn(eps, f), fn.formula + f", f(n)={f.name}"
    if name in ("halpern_ar", "halpern_rho", "zeta"):
        h = R.halpern_rates(N, m, m.gamma2 if args.sigma_divergence else None)
        if name == "zeta":
            return h.zeta(eps, f), h.zeta.formula
        fn = h.ar_rate if name == "halpern_ar" else h.rho_tilde
        return fn(eps), fn.formula
    if name == "nu_hat":
        nu = R.error_rates(m.gamma2, lambda k: Fraction(1, 2 ** k), chi1=R.geometric_chi())
        return nu(eps), nu.formula + ", errors 2^-n"
    if name in ("mu1", "mu2", "mu3", "mu4", "mu5"):
        flavor = {"mu1": "averaged", "mu2": GFB}.get(name, GDR)
        gamma = to_real(args.gamma) if args.gamma is not None else min(beta, 1 - beta)
        fns = R.splitting_rates(flavor, N, m, gamma, to_real(args.sigma) if args.sigma else None)
        fn = fns[name]
        return fn(eps, f), fn.formula
    if name.startswith("closed:"):
        gamma = min(beta, 1 - beta)
        return R.closed_form(name.split(":", 1)[1], N, gamma, eps), "displayed closed form"
    raise UsageError(f"unknown rate {name!r}")


RATE_NAMES = ("Gamma1", "Gamma2", "Gamma2_prime", "Gamma3", "Gamma4", "theta1", "theta2",
              "theta3", "theta4", "rho1", "rho2", "rho3", "rho", "mu", "halpern_ar",
              "halpern_rho", "zeta", "nu_hat", "mu1", "mu2", "mu3", "mu4", "mu5",
              "closed:theta1", "closed:theta3", "closed:theta4", "closed:rho")


def cmd_rates(args):
    with bit_budget(args.budget):
        try:
            value, formula = rate_value(args.name, args)
            text = str(value) if value.bit_length() <= 64 * 1024 else format_nat(value)
            exact = True
        except RateOverflow as exc:
            text = f">= 2^{max(exc.lower.bit_length() - 1, 0)} (lower bound)"
            formula, exact = "", False
    print(f"{args.name} = {text}")
    if formula:
        print(f"formula: {formula}")
    if not exact:
        print("note: the value exceeds the bit budget; raise --budget to try harder")
    return EXIT_OK


# --------------------------------------------------------------------------
# verify


def _suite_axioms(space, samples, seed, name):
    return V.run_axiom_suite(space, samples, 1e-9, seed, name).to_json()


def _suite_projection(samples, seed):
    checks = {}
    for name in fixtures.NAMES:
        fx = fixtures.get(name)
        if fx.limit is None:
            continue
        u = fx.problem.u
        ok, worst = V.check_projection_variational(fx.space, fx.target, u, fx.limit, 1e-9,
                                                   samples, seed)
        checks[name] = {"passed": ok, "worst": worst}
    return {"suite": "projection:variational", "passed": all(c["passed"] for c in checks.values()),
            "checks": checks}


def _suite_soundness_e1(seed):
    fx = fixtures.get("E1")
    horizon = 100_000
    traj = run_hm(fx.problem, harmonic_schedule(), horizon)
    f = R.CounterFn.affine(2, 0)
    reports = _hm_reports(traj, ["1/2", "1/10", "1/100"], fx.problem.N,
                          harmonic_schedule().moduli, f, horizon)
    reports = [r for r in reports if not (r["rate_name"].startswith("mu") and r["eps"] != "1/2")]
    passed = all(r["sound"] is True for r in reports)
    return {"suite": "soundness:E1", "passed": passed, "reports": reports}


def _suite_nonexpansive(seed):
    rng = np.random.default_rng(seed)
    checks = {}
    for name in fixtures.HM_NAMES:
        fx = fixtures.get(name)
        pts = [fx.space.sample(rng) for _ in range(60)]
        for which in ("T", "U"):
            gap = V.nonexpansive_gap(getattr(fx.problem, which), fx.space, pts)
            checks[f"{name}.{which}"] = {"passed": gap <= 1e-9, "worst": gap}
    return {"suite": "nonexpansive:fixtures", "passed": all(c["passed"] for c in checks.values()),
            "checks": checks}


SUITES = ("axioms:euclidean", "axioms:hyperboloid", "axioms:tree", "negative:broken-W2",
          "projection:variational", "soundness:E1", "nonexpansive:fixtures")


def run_suite(name, samples=10_000, seed=0):
    if name == "axioms:euclidean":
        return _suite_axioms(geo.EuclideanSpace(2), samples, seed, name)
    if name == "axioms:hyperboloid":
        return _suite_axioms(geo.HyperboloidPlane(), samples, seed, name)
    if name == "axioms:tree":
        return _suite_axioms(geo.SpiderTree(3), samples, seed, name)
    if name == "negative:broken-W2":
        return _suite_axioms(V.BrokenW2Space(2), samples, seed, name)
    if name == "projection:variational":
        return _suite_projection(min(samples, 1000), seed)
    if name == "soundness:E1":
        return _suite_soundness_e1(seed)
    if name == "nonexpansive:fixtures":
        return _suite_nonexpansive(seed)
    raise UsageError(f"unknown suite {name!r}; known: {', '.join(SUITES)}")


def cmd_verify(args):
    report = run_suite(args.suite, args.samples, args.seed)
    text = dumps(report)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"verify_{args.suite.replace(':', '_')}.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    print(f"{args.suite}: {'PASS' if report['passed'] else 'FAIL'}")
    return EXIT_OK if report["passed"] else EXIT_FAIL


# --------------------------------------------------------------------------


def _counter_arg(text):
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected a,b (natural numbers)") from None
    if a < 0 or b < 0:
        raise argparse.ArgumentTypeError("expected natural numbers")
    return a, b


def build_parser():
    p = argparse.ArgumentParser(prog="halpern-mann",
                                description="Alternating Halpern-Mann iterations, rates and checks.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a configured experiment")
    run.add_argument("--config", required=True, help="JSON run config")
    run.add_argument("--out", default=".", help="output directory")

    rates = sub.add_parser("rates", help="evaluate a rate exactly")
    rates.add_argument("name", help=f"one of: {', '.join(RATE_NAMES)}")
    rates.add_argument("--N", type=int, default=1)
    rates.add_argument("--eps", default="1")
    rates.add_argument("--k", type=int)
    rates.add_argument("--beta", default="1/2", help="constant beta of the harmonic schedule")
    rates.add_argument("--moduli", default="example", choices=("example", "zero", "linear"))
    rates.add_argument("--f", type=_counter_arg, default=(2, 0), help="affine counter a,b")
    rates.add_argument("--gamma", help="band constant for splitting rates")
    rates.add_argument("--sigma", help="averagedness lower bound for mu1")
    rates.add_argument("--q-star", action="store_true", help="use the product form of Gamma2")
    rates.add_argument("--sigma-divergence", action="store_true",
                       help="zeta: use Gamma2 instead of Gamma3 in the window start")
    rates.add_argument("--budget", type=int, default=1 << 22, help="bit budget per value")

    ver = sub.add_parser("verify", help="run a verification suite")
    ver.add_argument("--suite", required=True, help=f"one of: {', '.join(SUITES)}")
    ver.add_argument("--samples", type=int, default=10_000)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--out", help="directory for the JSON report")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.config, args.out)
        if args.command == "rates":
            return cmd_rates(args)
        return cmd_verify(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
