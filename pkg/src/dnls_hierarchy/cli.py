"""Command-line front end: generation, verification, evolution, reporting.

Subcommands
    generate-energies   write the conserved-functional densities as JSON
    verify              run a named property suite, JSON verdict
    evolve              integrate an input profile, write monitor series
    compare-hs          Sobolev comparison report for one profile

Reports are JSON-first (sorted keys, explicit seed, one timestamp field)
with CSV companions where tabular.  A key=value config file can supply any
long flag; command-line flags override it.  DNLS_CACHE_DIR, when set, is
used to cache generated energy densities.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import DnlsError, StabilityError
from .grid import GridFunction

J_CAP = 8


def _load_config(path: str) -> dict:
    values: dict[str, str] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def _write_report(payload: dict, out: str | None, fmt: str = "json") -> None:
    payload = dict(payload)
    payload.setdefault("timestamp", time.strftime("%Y-%m-%dT%H:%M:%S"))
    text = json.dumps(payload, indent=1, sort_keys=True, default=str) + "\n"
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _load_profile(args) -> GridFunction:
    src = args.input
    if src.startswith("demo:"):
        from .profiles import demo_profile

        return demo_profile(src[5:], n=args.grid, domain_length=args.domain)
    if not os.path.exists(src):
        raise FileNotFoundError(src)
    if src.endswith(".csv"):
        return GridFunction.read_csv(src, args.domain)
    return GridFunction.read_binary(src)


# -- generate-energies ------------------------------------------------------------


def cmd_generate_energies(args) -> int:
    from . import hierarchy

    if args.j_max > args.cap:
        print(f"error: --j-max {args.j_max} exceeds the cap {args.cap}", file=sys.stderr)
        return 2
    cache_dir = os.environ.get("DNLS_CACHE_DIR")
    cache_path = None
    funcs = None
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        cache_path = os.path.join(cache_dir, f"energies_{args.j_max}.json")
        if os.path.exists(cache_path):
            with open(cache_path) as fh:
                funcs = hierarchy.energies_from_json(fh.read())
    if funcs is None:
        funcs = hierarchy.energies(args.j_max, k_max=args.cap)
        if cache_path:
            with open(cache_path, "w") as fh:
                fh.write(hierarchy.energies_to_json(funcs))
    text = hierarchy.energies_to_json(funcs)
    with open(args.out, "w") as fh:
        fh.write(text)
    for f in funcs:
        print(f"E_{f.j}: {len(f.density)} monomials")
    return 0


# -- verify -----------------------------------------------------------------------


def _check(name: str, fn) -> dict:
    try:
        detail = fn()
        return {"name": name, "passed": True, "detail": detail}
    except AssertionError as exc:
        return {"name": name, "passed": False, "detail": str(exc)}
    except DnlsError as exc:
        return {"name": name, "passed": False, "detail": f"{type(exc).__name__}: {exc}"}


def _suite_symbolic(seed: int) -> list[dict]:
    from fractions import Fraction

    from . import hierarchy, resolvent
    from .diffpoly import U, UBAR, functionals_equal, u_deriv, ubar_deriv
    from .exactnum import I, ONE

    checks = []

    def golden():
        half = Fraction(1, 2)
        m_dens = U * UBAR
        p_dens = (UBAR * u_deriv(1) - U * ubar_deriv(1)).scale(ONE / (2 * I)) + (
            U * UBAR * U * UBAR
        ).scale(half)
        im_part = (U * U * UBAR * ubar_deriv(1) - U * UBAR * UBAR * u_deriv(1)).scale(
            ONE / (2 * I)
        )
        e_dens = (
            u_deriv(1) * ubar_deriv(1)
            - im_part.scale(Fraction(3, 2))
            + (U * UBAR) * (U * UBAR) * (U * UBAR) * Fraction(1, 2)
        )
        targets = [m_dens.scale(-I * half), p_dens.scale(I * Fraction(1, 4)),
                   e_dens.scale(-I * Fraction(1, 8))]
        for j, target in enumerate(targets):
            assert functionals_equal(hierarchy.energy(j).density, target), f"E_{j}"
        return "E_0, E_1, E_2 match the displayed functionals exactly"

    checks.append(_check("golden-hierarchy", golden))

    def quartic():
        target = (U * UBAR * U * UBAR).scale(I * Fraction(1, 8))
        assert functionals_equal(hierarchy.mu_jm(1, 2).density, target)
        return "mu_{1,2} equals i/8 |u|^4"

    checks.append(_check("quartic-coefficient", quartic))

    def structure():
        resolvent.telescope_brackets(6)
        count = 0
        for k in range(0, 7):
            kinds = ["antidiagonal"] + (["diagonal"] if k >= 1 else [])
            for kind in kinds:
                for part in resolvent.homogeneous_parts(k, kind):
                    report = resolvent.verify_structure(part)
                    assert report.ok, f"k={k} {kind} r={part.r}: {report.violations[:1]}"
                    count += 1
        return f"{count} homogeneous parts verified through level 6, telescoping holds"

    checks.append(_check("coefficient-structure", structure))

    def residue_vs_quadrature():
        import math

        worst = 0.0
        for j in range(0, 7):
            for d in range(0, min(2 * j, 6) + 1):
                exact = hierarchy.p_integral(resolvent.PPoly.monomial(d), j)
                for theta in (math.pi / 2, math.pi / 4):
                    quad = hierarchy.p_integral_quadrature(
                        resolvent.PPoly.monomial(d), j, theta
                    )
                    err = abs(exact - quad) / max(1.0, abs(exact))
                    worst = max(worst, err)
                    assert err < 1e-10, f"j={j} d={d} theta={theta}: {err:.2e}"
        return f"residue values match line quadrature, worst {worst:.2e}"

    checks.append(_check("rational-integrals", residue_vs_quadrature))
    return checks


def _suite_scattering(seed: int) -> list[dict]:
    import cmath

    from . import scattering
    from .profiles import two_bump, unit_mass_gaussian

    u = unit_mass_gaussian(1024, 32.0)
    checks = []

    def two_route():
        worst = 0.0
        for profile in (u, two_bump(1024, 48.0)):
            for lam_sq in (4j, 2 + 3j, -1 + 2j):
                a = scattering.jost_transmission(u=profile, lam=scattering
                                                 .SpectralParameter.from_lambda_sq(lam_sq))
                det = scattering.perturbation_determinant(profile, lam_sq, 384)
                worst = max(worst, abs(a * a - det) / abs(det))
        assert worst < 1e-5, f"worst residual {worst:.2e}"
        return f"worst two-route residual {worst:.2e}"

    checks.append(_check("two-route-agreement", two_route))

    def hilbert_schmidt():
        sp = scattering.SpectralParameter.from_lambda_sq(1j)
        disc = scattering.build_T_matrix(u, sp, 512)
        predicted = abs(sp.lam) ** 2 / sp.lam_sq.imag * u.l2_norm_sq()
        rel = abs(disc.hs_norm_sq() - predicted) / predicted
        assert rel < 0.01, f"relative error {rel:.3e}"
        return f"Hilbert-Schmidt identity to {rel:.2e}"

    checks.append(_check("hilbert-schmidt", hilbert_schmidt))

    def large_lambda():
        target = cmath.exp(-0.5j * u.l2_norm_sq())
        errs = [
            abs(scattering.jost_transmission(u, scattering.SpectralParameter.from_rho(r)) - target)
            for r in (1e2, 1e3, 1e4)
        ]
        assert errs[0] > errs[1] > errs[2], f"not monotone: {errs}"
        return f"limit errors {', '.join(f'{e:.2e}' for e in errs)}"

    checks.append(_check("large-lambda-limit", large_lambda))

    def scaling():
        lam_sq = (1.3 + 0.9j) ** 2
        worst = 0.0
        for mu in (0.5, 2.0):
            a1 = scattering.jost_transmission(
                u.rescaled(mu), scattering.SpectralParameter.from_lambda_sq(lam_sq)
            )
            a2 = scattering.jost_transmission(
                u, scattering.SpectralParameter.from_lambda_sq(lam_sq / mu)
            )
            worst = max(worst, abs(a1 - a2))
        assert worst < 1e-6, f"worst {worst:.2e}"
        return f"scaling covariance to {worst:.2e}"

    checks.append(_check("scaling-covariance", scaling))
    return checks


def _suite_evolution(seed: int) -> list[dict]:
    import math

    from . import evolve
    from .profiles import unit_mass_gaussian

    checks = []

    def dispersion():
        n, length, amp, mode = 64, 2 * math.pi, 1.0, 5
        k = mode * 2 * math.pi / length
        x = -length / 2 + (length / n) * np.arange(n)
        u0 = GridFunction(amp * np.exp(1j * k * x), length, check_decay=False)
        omega = k**2 + amp**2 * k
        stepper = evolve.Stepper(n, length, 1e-3, 1.0)
        c = u0.fft()
        for _ in range(1000):
            c = stepper.step(c)
        exact = amp * np.exp(1j * (k * x - omega))
        err = float(np.abs(np.fft.ifft(c) - exact).max())
        assert err < 1e-8, f"plane-wave error {err:.2e}"
        return f"plane-wave error {err:.2e} over unit time"

    checks.append(_check("plane-wave-dispersion", dispersion))

    def conservation():
        u0 = unit_mass_gaussian(512, 32.0)
        cfg = evolve.EvolutionConfig(dt=1e-3, t_final=1.0, monitor_stride=250)
        series = evolve.evolve(u0, cfg, monitors=["mass", "momentum", "energy"])
        drifts = {m: series.relative_drift(m) for m in ("mass", "momentum", "energy")}
        assert all(v < 1e-10 for v in drifts.values()), str(drifts)
        return ", ".join(f"{m} drift {v:.1e}" for m, v in drifts.items())

    checks.append(_check("short-conservation", conservation))
    return checks


def _suite_sobolev(seed: int) -> list[dict]:
    from . import sobolev
    from .profiles import two_bump, unit_mass_gaussian

    u = unit_mass_gaussian(1024, 32.0)
    checks = []

    def identity():
        worst = 0.0
        for s in (0.7, 1.5):
            rep = sobolev.comparison_report(u, s, 0.0)
            rel = abs(rep["ratio"] - rep["expected_ratio"]) / rep["expected_ratio"]
            worst = max(worst, rel)
            assert rep["pass"], f"s={s}: {rel:.2e}"
        return f"exact identity to {worst:.2e}"

    checks.append(_check("comparison-identity", identity))

    def quadratic_remainder():
        worst = 0.0
        for level in (0, 1, 2):
            for rho in (0.7, 3.0, 50.0):
                a = sobolev.phi0(u, rho, level)
                b = sobolev.tau1(u, rho, level).imag
                worst = max(worst, abs(a - b))
        assert worst < 1e-10, f"worst {worst:.2e}"
        return f"phi0 vs quadratic trace remainder to {worst:.2e}"

    checks.append(_check("quadratic-remainder", quadratic_remainder))

    def two_sided():
        rng = np.random.default_rng(seed)
        profiles = [u, two_bump(1024, 48.0)]
        for _ in range(3):
            base = unit_mass_gaussian(512, 32.0)
            noise = rng.standard_normal(512) + 1j * rng.standard_normal(512)
            window = np.exp(-base.x**2 / 8.0)
            profiles.append(base.with_values(base.values + 0.2 * noise * window))
        for s in (0.7, 1.5):
            for r_cut in (0.5, 2.0):
                for p in profiles:
                    rep = sobolev.comparison_report(p, s, r_cut)
                    assert rep["pass"], f"s={s} R={r_cut}"
        return "two-sided bounds hold on randomized profiles"

    checks.append(_check("two-sided-comparison", two_sided))
    return checks


SUITES = {
    "symbolic": _suite_symbolic,
    "scattering": _suite_scattering,
    "evolution": _suite_evolution,
    "sobolev": _suite_sobolev,
}


def cmd_verify(args) -> int:
    if args.suite != "all" and args.suite not in SUITES:
        print(f"error: unknown suite {args.suite!r} (choices: "
              f"{', '.join([*SUITES, 'all'])})", file=sys.stderr)
        return 2
    names = list(SUITES) if args.suite == "all" else [args.suite]
    checks = []
    for name in names:
        checks.extend(SUITES[name](args.seed))
    passed = all(c["passed"] for c in checks)
    payload = {
        "suite": args.suite,
        "seed": args.seed,
        "version": __version__,
        "checks": checks,
        "passed": passed,
    }
    _write_report(payload, args.out)
    if not passed:
        failed = [c["name"] for c in checks if not c["passed"]]
        print(f"FAILED: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


# -- evolve -----------------------------------------------------------------------


def cmd_evolve(args) -> int:
    from . import evolve

    try:
        u0 = _load_profile(args)
    except (FileNotFoundError, KeyError) as exc:
        print(f"error: cannot load input: {exc}", file=sys.stderr)
        return 2
    monitors: list[str] = []
    for token in args.monitor or ["mass", "momentum", "energy"]:
        if token == "a_u":
            if not args.lambda_sq:
                print("error: --monitor a_u needs --lambda-sq", file=sys.stderr)
                return 2
            monitors.extend(f"a:{v}" for v in args.lambda_sq)
        elif token.startswith("phi") and ":" not in token[4:] and args.rho:
            level = token[4:] if token.startswith("phi:") else "1"
            monitors.extend(f"phi:{level},{r}" for r in args.rho)
        else:
            monitors.append(token)
    cfg = evolve.EvolutionConfig(
        dt=args.dt,
        t_final=args.t_final,
        dealias=args.dealias,
        monitor_stride=args.monitor_stride,
        snapshot_stride=args.snapshot_stride,
    )
    if args.snapshot_dir:
        os.makedirs(args.snapshot_dir, exist_ok=True)
    try:
        series = evolve.evolve(u0, cfg, monitors=monitors, snapshot_dir=args.snapshot_dir)
    except StabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = args.out or "monitors.csv"
    if args.format == "json" or out.endswith(".json"):
        series.to_json(out)
    else:
        series.to_csv(out)
    print(f"wrote {out} ({len(series.times)} samples, monitors: {', '.join(sorted(series.values))})")
    return 0


# -- compare-hs --------------------------------------------------------------------


def cmd_compare_hs(args) -> int:
    from . import sobolev

    try:
        u = _load_profile(args)
    except (FileNotFoundError, KeyError) as exc:
        print(f"error: cannot load input: {exc}", file=sys.stderr)
        return 2
    if float(args.s).is_integer():
        payload = {
            "s": args.s,
            "hs": sobolev.hs_seminorm(u, args.s),
            "hs_sq": sobolev.hs_seminorm(u, args.s) ** 2,
            "note": "integer s: seminorm only, no comparison ratio",
        }
        _write_report(payload, args.out)
        return 0
    report = sobolev.comparison_report(u, args.s, args.R)
    _write_report(report, args.out)
    return 0 if report["pass"] else 1


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dnls",
        description="Conserved-quantity hierarchy, transmission Wronskian and "
        "Sobolev comparison tools for the derivative NLS equation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value file; flags override")
        p.add_argument("--grid", type=int, default=1024, help="samples N for demo/CSV input")
        p.add_argument("--domain", type=float, default=32.0, help="period L for demo/CSV input")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="report/output path (default stdout or command default)")
        p.add_argument("--format", choices=["json", "csv"], default="json")

    p_gen = sub.add_parser("generate-energies", help="generate conserved-functional densities")
    common(p_gen)
    p_gen.add_argument("--j-max", type=int, required=True)
    p_gen.add_argument("--cap", type=int, default=J_CAP)
    p_gen.set_defaults(func=cmd_generate_energies)

    p_ver = sub.add_parser("verify", help="run a property suite")
    common(p_ver)
    p_ver.add_argument("--suite", default="all")
    p_ver.set_defaults(func=cmd_verify)

    p_evo = sub.add_parser("evolve", help="integrate a profile and record monitors")
    common(p_evo)
    p_evo.add_argument("--input", required=True,
                       help="profile path (.dnls binary or .csv) or demo:<name>")
    p_evo.add_argument("--dt", type=float, default=1e-3)
    p_evo.add_argument("--t-final", type=float, default=10.0)
    p_evo.add_argument("--dealias", type=float, default=2.0 / 3.0)
    p_evo.add_argument("--monitor", action="append",
                       help="mass|momentum|energy|energy:J|a_u|phi:L|hs:S|hsnorm:S")
    p_evo.add_argument("--lambda-sq", action="append", metavar="RE,IM",
                       help="lambda^2 for a_u monitors (repeatable)")
    p_evo.add_argument("--rho", action="append", type=float,
                       help="rho for phi monitors (repeatable)")
    p_evo.add_argument("--monitor-stride", type=int, default=100)
    p_evo.add_argument("--snapshot-stride", type=int, default=None)
    p_evo.add_argument("--snapshot-dir", default=None)
    p_evo.set_defaults(func=cmd_evolve)

    p_cmp = sub.add_parser("compare-hs", help="Sobolev comparison report")
    common(p_cmp)
    p_cmp.add_argument("--input", required=True)
    p_cmp.add_argument("--s", type=float, required=True)
    p_cmp.add_argument("--R", type=float, default=0.0)
    p_cmp.set_defaults(func=cmd_compare_hs)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # config file provides defaults; explicit flags override
    if "--config" in argv:
        cfg_path = argv[argv.index("--config") + 1]
        values = _load_config(cfg_path)
        known = {a.dest for a in parser._actions}
        for p in parser._subparsers._group_actions[0].choices.values():
            known |= {a.dest for a in p._actions}
        typed = {}
        for key, val in values.items():
            if key not in known:
                print(f"error: unknown config key {key!r}", file=sys.stderr)
                return 2
            typed[key] = val
        for p in parser._subparsers._group_actions[0].choices.values():
            p.set_defaults(**_coerce_defaults(p, typed))
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DnlsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def _coerce_defaults(subparser, values: dict) -> dict:
    out = {}
    for action in subparser._actions:
        if action.dest in values:
            raw = values[action.dest]
            if action.type is not None:
                out[action.dest] = action.type(raw)
            elif action.__class__.__name__ == "_AppendAction":
                out[action.dest] = [raw]
            else:
                out[action.dest] = raw
    return out


if __name__ == "__main__":
    sys.exit(main())
