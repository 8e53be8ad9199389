#!/usr/bin/env python3
"""Sweep every scenario/defense combination and print one outcome line each.

Usage: python scripts/run_matrix.py [--n N] [--trials T] [--seed S]
"""
import argparse

from aqsim.adversary import SCENARIO_TOKENS, Scenario
from aqsim.cli import evaluate_expectations
from aqsim.defense import DefenseConfig
from aqsim.scenarios import run_scenario

DEFENSE_GRID = (
    DefenseConfig(),
    DefenseConfig(wavelength_filter=True),
    DefenseConfig(pns=True),
    DefenseConfig(wavelength_filter=True, pns=True),
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=4)
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--seed", type=int, default=2026)
    args = parser.parse_args()

    print(f"{'scenario':<16} {'defenses':<24} {'verdicts':<28} expected")
    all_ok = True
    for token in SCENARIO_TOKENS:
        scenario = Scenario.from_token(token)
        for defenses in DEFENSE_GRID:
            verdicts: dict[str, int] = {}
            ok = 0
            for trial in range(args.trials):
                result = run_scenario(scenario, args.n, args.seed, trial, defenses=defenses)
                verdicts[str(result.verdict)] = verdicts.get(str(result.verdict), 0) + 1
                checks = evaluate_expectations(result, scenario.variant, defenses)
                ok += all(checks.values())
            all_ok = all_ok and ok == args.trials
            verdict_text = ",".join(f"{c}x {v}" for v, c in sorted(verdicts.items()))
            defense_text = ",".join(defenses.tokens()) or "-"
            print(f"{token:<16} {defense_text:<24} {verdict_text:<28} {ok}/{args.trials}")
    print(f"overall: {'PASS' if all_ok else 'FAIL'}")
    return 0 if all_ok else 2


if __name__ == "__main__":
    raise SystemExit(main())
