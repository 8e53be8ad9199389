"""Command-line front end: seeded batches of runs with pass/fail reporting.

Each scenario/defense combination has a codified expected outcome (an
attack that the enabled screening must catch is *supposed* to raise an
alarm), so the exit code asserts success for attack scenarios too:
0 = every trial matched the expected outcome, 1 = usage or I/O error,
2 = some invariant check failed.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .adversary import SCENARIO_TOKENS, Scenario, ScenarioVariant
from .defense import DefenseConfig
from .jsonutil import canonical_json
from .scenarios import STATUS_ATTACK_DETECTED, RunResult, run_scenario

HONEST_FIDELITY_FLOOR = 1.0 - 1e-9
DEGRADED_FIDELITY_CEILING = 1.0 - 1e-6

SEED_ENV_VAR = "AQS_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract is raise -> exit(1)
        raise UsageError(message)


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    n: int
    trials: int
    seed: int
    defenses: DefenseConfig
    out: Path | None
    format: str


@dataclass
class BatchSummary:
    config: RunConfig
    trial_rows: list[dict]
    check_counts: dict[str, list[int]]  # name -> [passed, total]
    all_ok: bool


def parse_config(argv, env) -> RunConfig:
    parser = _Parser(prog="aqsim", description="arbitrated quantum signature testbed")
    sub = parser.add_subparsers(dest="command")
    run_parser = sub.add_parser("run", help="execute a seeded batch of protocol runs")
    run_parser.error = parser.error
    run_parser.add_argument("--scenario", required=True)
    run_parser.add_argument("--n", type=int, required=True)
    run_parser.add_argument("--trials", type=int, required=True)
    run_parser.add_argument("--seed", type=int, default=None)
    run_parser.add_argument("--defenses", default="")
    run_parser.add_argument("--out", default=None)
    run_parser.add_argument("--format", choices=("json", "text"), default="text")

    args = parser.parse_args(list(argv))
    if args.command != "run":
        raise UsageError("expected the 'run' command")

    if args.scenario not in SCENARIO_TOKENS:
        raise UsageError(
            f"--scenario: unknown scenario {args.scenario!r} "
            f"(choose from {', '.join(SCENARIO_TOKENS)})"
        )
    if args.n < 1:
        raise UsageError("--n: must be >= 1")
    if args.trials < 1:
        raise UsageError("--trials: must be >= 1")

    seed = args.seed
    if seed is None:
        raw = env.get(SEED_ENV_VAR)
        if raw is None:
            raise UsageError(f"--seed: required (or set {SEED_ENV_VAR})")
        try:
            seed = int(raw)
        except ValueError:
            raise UsageError(f"--seed: {SEED_ENV_VAR}={raw!r} is not an integer") from None
    if seed < 0:
        raise UsageError("--seed: must be a non-negative 64-bit integer")

    tokens = [t for t in args.defenses.split(",") if t]
    try:
        defenses = DefenseConfig.from_tokens(tokens)
    except ValueError as exc:
        raise UsageError(f"--defenses: {exc}") from None

    return RunConfig(
        scenario=Scenario.from_token(args.scenario),
        n=args.n,
        trials=args.trials,
        seed=seed,
        defenses=defenses,
        out=Path(args.out) if args.out is not None else None,
        format=args.format,
    )


def _expect_detected(result: RunResult, devices: tuple[str, ...]) -> dict[str, bool]:
    return {
        "alarm-raised": any(d in result.alarms for d in devices),
        "run-aborted": result.verdict == STATUS_ATTACK_DETECTED and result.checks["V"] is None,
    }


def _expect_honest_side(result: RunResult) -> dict[str, bool]:
    fid = result.checks["recover_fidelity_min"]
    return {
        "arbiter-verified": result.checks["V"] == 1,
        "teleport-compare-match": result.checks["v5"] == "match-ok",
        "recover-fidelity": fid is not None and fid >= HONEST_FIDELITY_FLOOR,
        "signature-valid": result.checks["signature_valid"] is True,
        "verdict-no-dispute": result.verdict == "no-dispute",
        "no-alarms": not result.alarms,
    }


def evaluate_expectations(
    result: RunResult, variant: ScenarioVariant, defenses: DefenseConfig
) -> dict[str, bool]:
    """The expected-outcome table: named boolean checks per scenario."""
    if variant is ScenarioVariant.HONEST:
        return _expect_honest_side(result)
    if variant is ScenarioVariant.BOB_LIES:
        return {
            "arbiter-verified": result.checks["V"] == 1,
            "genuine-compare-match": result.genuine_compare == "match-ok",
            "verdict-inconclusive": result.verdict == "inconclusive",
            "board-empty": len(result.board.entries) == 0,
            "no-alarms": not result.alarms,
        }
    if variant in (ScenarioVariant.ALICE_TAMPERS, ScenarioVariant.EVE_DISTURBS):
        return {
            "arbiter-verified": result.checks["V"] == 1,
            "teleport-compare-mismatch": result.checks["v5"] == "mismatch",
            "verdict-inconclusive": result.verdict == "inconclusive",
            "board-empty": len(result.board.entries) == 0,
            "no-alarms": not result.alarms,
        }
    if variant is ScenarioVariant.ALICE_FALSE_PAD:
        fid = result.checks["recover_fidelity_min"]
        return {
            "arbiter-verified": result.checks["V"] == 1,
            "teleport-compare-match": result.checks["v5"] == "match-ok",
            "signature-invalid-under-published-pad": result.checks["signature_valid"] is False,
            "recover-fidelity-degraded": fid is not None and fid < DEGRADED_FIDELITY_CEILING,
            "verdict-no-dispute": result.verdict == "no-dispute",
            "no-alarms": not result.alarms,
        }
    if variant is ScenarioVariant.IPE:
        if defenses.any_enabled:  # either device catches the off-band probe
            return _expect_detected(result, ("wavelength-filter", "pns"))
        checks = {"extraction-exact": result.extraction_matches is True}
        checks.update(_expect_honest_side(result))
        return checks
    if variant is ScenarioVariant.DELAY_PHOTON:
        if defenses.pns:
            return _expect_detected(result, ("pns",))
        checks = {"extraction-exact": result.extraction_matches is True}
        checks.update(_expect_honest_side(result))
        return checks
    raise ValueError(f"no expectation table for {variant}")


def _transcript_filename(config: RunConfig, trial: int) -> str:
    return f"{config.scenario.token}-n{config.n}-seed{config.seed}-trial{trial:04d}.json"


def run_batch(config: RunConfig) -> BatchSummary:
    """Execute all trials, write transcripts if requested, aggregate checks."""
    if config.out is not None:
        config.out.mkdir(parents=True, exist_ok=True)

    rows = []
    counts: dict[str, list[int]] = {}
    all_ok = True
    for trial in range(config.trials):
        result = run_scenario(
            config.scenario, config.n, config.seed, trial, defenses=config.defenses
        )
        expectations = evaluate_expectations(result, config.scenario.variant, config.defenses)
        ok = all(expectations.values())
        all_ok = all_ok and ok
        for name, passed in expectations.items():
            bucket = counts.setdefault(name, [0, 0])
            bucket[0] += int(passed)
            bucket[1] += 1
        rows.append(
            {
                "trial": trial,
                "checks": result.checks,
                "verdict": result.verdict,
                "alarms": list(result.alarms),
                "extraction_match": result.extraction_matches,
                "ok": ok,
            }
        )
        if config.out is not None:
            path = config.out / _transcript_filename(config, trial)
            path.write_bytes(result.transcript_bytes() + b"\n")

    return BatchSummary(config=config, trial_rows=rows, check_counts=counts, all_ok=all_ok)


def render_summary(summary: BatchSummary, fmt: str) -> str:
    config = summary.config
    config_doc = {
        "scenario": config.scenario.token,
        "n": config.n,
        "trials": config.trials,
        "seed": config.seed,
        "defenses": config.defenses.tokens(),
    }
    if fmt == "json":
        doc = {
            "config": config_doc,
            "checks": {
                name: {"passed": passed, "trials": total, "ok": passed == total}
                for name, (passed, total) in summary.check_counts.items()
            },
            "trials": summary.trial_rows,
            "overall": summary.all_ok,
        }
        return canonical_json(doc)

    defenses = ",".join(config.defenses.tokens()) or "-"
    lines = [
        f"scenario={config.scenario.token} n={config.n} trials={config.trials} "
        f"seed={config.seed} defenses={defenses}"
    ]
    width = max(len(name) for name in summary.check_counts)
    for name, (passed, total) in summary.check_counts.items():
        status = "PASS" if passed == total else "FAIL"
        lines.append(f"  {name:<{width}}  {passed}/{total}  {status}")
    lines.append(f"overall: {'PASS' if summary.all_ok else 'FAIL'}")
    return "\n".join(lines)


def main(argv=None, env=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    env = os.environ if env is None else env
    try:
        config = parse_config(argv, env)
    except UsageError as exc:
        print(f"aqsim: error: {exc}", file=sys.stderr)
        return 1
    try:
        summary = run_batch(config)
    except OSError as exc:
        print(f"aqsim: io error: {exc}", file=sys.stderr)
        return 1
    print(render_summary(summary, config.format))
    return 0 if summary.all_ok else 2


if __name__ == "__main__":
    sys.exit(main())
