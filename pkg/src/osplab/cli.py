"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 check failure.
"""
import argparse
import csv
import json
import logging
import os
import sys

from .chains import MixingCapExceeded, NotErgodicError
from .concentration import (
    FIXTURE_CHAINS,
    TailCheckSpec,
    check_reward_ci,
    check_reward_concentration,
    check_tv_concentration,
)
from .experiments import ALGORITHMS, ExperimentSpec, run_seeds, summary_failed, write_artifacts
from .mdp import (
    EnumerationLimitError,
    MdpFormatError,
    analyze_mdp,
    check_enumeration_limit,
    decode_policy,
    generate_ergodic_mdp,
    induced_chain,
    load_mdp,
    validate_mdp,
)
from .osp import min_horizon_for_threshold, t_threshold_rhs

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_CHECK = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _tmix(value):
    if value == "auto":
        return value
    try:
        v = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'auto' or a positive integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError("t_mix override must be >= 1")
    return v


def _start_state(value):
    if value == "env":
        return value
    if value.startswith("fixed:"):
        try:
            return int(value.split(":", 1)[1])
        except ValueError:
            pass
    raise argparse.ArgumentTypeError("expected 'env' or 'fixed:<state>'")


def _seeds(value):
    """Comma list of seeds; ``a-b`` expands to the inclusive range."""
    out = []
    for part in value.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("no seeds given")
    return out


def _floats(value):
    return [float(x) for x in value.split(",") if x.strip()]


def _ints(value):
    return [int(x) for x in value.split(",") if x.strip()]


def build_parser():
    p = _Parser(prog="osplab", description="Optimistic sample-path RL laboratory")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="sample an ergodic MDP and write it as JSON")
    g.add_argument("--states", type=int, required=True)
    g.add_argument("--actions", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--smoothing", type=float, default=0.1)
    g.add_argument("--reward-kind", choices=["bernoulli", "deterministic"], default="bernoulli")
    g.add_argument("--out", required=True)

    a = sub.add_parser("analyze", help="per-policy chain analysis of an MDP")
    a.add_argument("--mdp", required=True)
    a.add_argument("--horizon", type=int, default=100_000)
    a.add_argument("--delta", type=float, default=0.05)
    a.add_argument("--cap", type=int, default=100_000, help="mixing-time search cap")
    a.add_argument("--out", help="directory for analysis.json and policies.csv")
    a.add_argument("--plot", action="store_true", help="also write mixing_profiles.png (needs --out)")

    r = sub.add_parser("run", help="run an algorithm over one or more seeds")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--mdp")
    src.add_argument("--states", type=int)
    r.add_argument("--actions", type=int)
    r.add_argument("--seed", type=int, default=0, help="generator seed when no --mdp is given")
    r.add_argument("--smoothing", type=float, default=0.1)
    r.add_argument("--algo", choices=ALGORITHMS, default="osp")
    r.add_argument("--horizon", type=int, default=10_000)
    r.add_argument("--delta", type=float, default=0.05)
    r.add_argument("--tmix", type=_tmix, default="auto")
    r.add_argument("--seeds", type=_seeds, default=[0])
    r.add_argument("--start-state", type=_start_state, default="env")
    r.add_argument("--reconstruct-paths", choices=["incremental", "scratch"], default="incremental")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--out", required=True)
    r.add_argument("--plot", action="store_true", help="also render regret and phase figures")

    c = sub.add_parser("concentration", help="Monte-Carlo checks of the concentration bounds")
    csrc = c.add_mutually_exclusive_group()
    csrc.add_argument("--chain", choices=sorted(FIXTURE_CHAINS), default=None)
    csrc.add_argument("--mdp")
    c.add_argument("--policy", type=int, default=0, help="policy id whose chain is checked (with --mdp)")
    c.add_argument("--n", type=_ints, default=[1000])
    c.add_argument("--delta", type=_floats, default=[0.05])
    c.add_argument("--epsilon", type=_floats, default=[])
    c.add_argument("--trials", type=int, default=10_000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", help="report JSON path (default: stdout)")
    return p


def _load_or_generate(args):
    if args.mdp:
        return load_mdp(args.mdp)
    if args.actions is None:
        raise UsageError("--actions is required with --states")
    return generate_ergodic_mdp(args.states, args.actions, args.seed, args.smoothing)


def _validated(m):
    check_enumeration_limit(m)
    bad = validate_mdp(m)
    for pid, report in bad:
        print(f"policy {pid}: {report.message}", file=sys.stderr)
    return not bad


def cmd_generate(args):
    m = generate_ergodic_mdp(args.states, args.actions, args.seed, args.smoothing, args.reward_kind)
    with open(args.out, "w") as f:
        f.write(m.to_json())
    ok = _validated(m)
    print(f"wrote {args.out}: S={m.S} A={m.A} validate_mdp={'ok' if ok else 'FAILED'}")
    return EXIT_OK if ok else EXIT_INVALID


def analysis_rows(m, analysis):
    rows = []
    for pid, ca in analysis.per_policy.items():
        rows.append({
            "policy_id": pid,
            "actions": " ".join(map(str, decode_policy(pid, m.S, m.A))),
            "rho": ca.avg_reward,
            "t_mix": ca.mixing_time,
            "beta": ca.pseudo_spectral_gap,
        })
    return rows


def cmd_analyze(args):
    m = load_mdp(args.mdp)
    if not _validated(m):
        return EXIT_INVALID
    an = analyze_mdp(m, cap=args.cap)
    rows = analysis_rows(m, an)
    rhs = t_threshold_rhs(m.S, m.A, args.horizon, args.delta, an.mdp_mixing_time, an.mu_min)
    t_min = min_horizon_for_threshold(m.S, m.A, args.delta, an.mdp_mixing_time, an.mu_min)
    print(f"{'policy':>8} {'actions':>12} {'rho':>10} {'t_mix':>6} {'beta':>8}")
    for row in rows:
        print(f"{row['policy_id']:>8} {row['actions']:>12} {row['rho']:>10.6f} {row['t_mix']:>6} {row['beta']:>8.4f}")
    print(f"t_mix = {an.mdp_mixing_time}  rho* = {an.rho_star:.6f}  pi* = {an.optimal_policy}  mu_min = {an.mu_min:.6f}")
    print(f"T-threshold at T={args.horizon}, delta={args.delta}: rhs = {rhs:.6g} "
          f"({'met' if args.horizon >= rhs else 'not met'}); smallest T meeting it = {t_min}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "policies.csv"), "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["policy_id", "actions", "rho", "t_mix", "beta"])
            for row in rows:
                w.writerow([row["policy_id"], row["actions"], repr(row["rho"]), row["t_mix"], repr(row["beta"])])
        report = {
            "num_states": m.S,
            "num_actions": m.A,
            "t_mix": an.mdp_mixing_time,
            "rho_star": an.rho_star,
            "optimal_policy": an.optimal_policy,
            "mu_min": an.mu_min,
            "horizon": args.horizon,
            "delta": args.delta,
            "t_threshold_rhs": rhs,
            "t_threshold": args.horizon >= rhs,
            "min_horizon_for_threshold": t_min,
            "policies": rows,
        }
        with open(os.path.join(args.out, "analysis.json"), "w") as f:
            json.dump(report, f, indent=2)
            f.write("\n")
        if args.plot:
            from .plotting import plot_mixing_profiles

            chains = [(pid, induced_chain(m, decode_policy(pid, m.S, m.A))[0], ca.stationary)
                      for pid, ca in an.per_policy.items()][:12]
            plot_mixing_profiles(chains, os.path.join(args.out, "mixing_profiles.png"),
                                 n_max=max(2 * an.mdp_mixing_time, 10))
    return EXIT_OK


def cmd_run(args):
    m = _load_or_generate(args)
    if not _validated(m):
        return EXIT_INVALID
    an = analyze_mdp(m)
    spec = ExperimentSpec(args.algo, args.horizon, args.delta, args.tmix, args.seeds,
                          args.start_state, args.reconstruct_paths)
    if isinstance(spec.start_state, int) and not 0 <= spec.start_state < m.S:
        raise UsageError(f"fixed start state {spec.start_state} out of range")
    results = run_seeds(m, an, spec, jobs=args.jobs)
    summary = write_artifacts(m, an, spec, results, args.out)
    if args.plot:
        from .plotting import plot_phase_lengths, plot_regret_curves

        plot_regret_curves(results, spec.seeds, os.path.join(args.out, f"{spec.algorithm}_regret.png"),
                           an.mdp_mixing_time, m.S, m.A, spec.delta, title=spec.algorithm)
        if spec.algorithm == "osp":
            plot_phase_lengths(results[0], m.S, m.A,
                               os.path.join(args.out, f"osp_seed{spec.seeds[0]}_phases.png"))
    print(f"{spec.algorithm}: mean final regret {summary['mean_regret']:.2f} "
          f"(sd {summary['std_regret']:.2f}) over {len(spec.seeds)} seeds; bound {summary['regret_bound']:.2f}")
    return EXIT_CHECK if summary_failed(summary) else EXIT_OK


def cmd_concentration(args):
    if args.mdp:
        m = load_mdp(args.mdp)
        P, r = induced_chain(m, decode_policy(args.policy, m.S, m.A))
    else:
        P, r = FIXTURE_CHAINS[args.chain or "flip"]
    reports = []
    for n in args.n:
        for d in args.delta:
            reports.append(check_reward_ci(TailCheckSpec(P, r, n, args.trials, "reward_ci", delta=d, seed=args.seed)))
            reports.extend(check_tv_concentration(
                TailCheckSpec(P, r, n, args.trials, "tv_concentration", delta=d, seed=args.seed)))
        for eps in args.epsilon:
            reports.append(check_reward_concentration(
                TailCheckSpec(P, r, n, args.trials, "reward_mcdiarmid", epsilon=eps, seed=args.seed)))
    text = json.dumps([rep.to_dict() for rep in reports], indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    failed = [rep for rep in reports if not rep.vacuous and not rep.passed]
    for rep in failed:
        print(f"FAILED {rep.bound_kind} n={rep.n}: {rep.empirical} > {rep.theoretical} + {rep.margin}",
              file=sys.stderr)
    return EXIT_CHECK if failed else EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "analyze": cmd_analyze,
    "run": cmd_run,
    "concentration": cmd_concentration,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, EnumerationLimitError, ValueError) as e:
        if isinstance(e, (MdpFormatError, NotErgodicError)):
            print(f"validation failed: {e}", file=sys.stderr)
            return EXIT_INVALID
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except MixingCapExceeded as e:
        print(f"validation failed: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_USAGE


def entry():
    sys.exit(main())
