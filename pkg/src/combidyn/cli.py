"""Batch command-line front end.

Commands operate on a scenario file and write CSV or a human-readable
report:

* optimize             roll the receding horizon, one CSV row per step/unit
* certify              per-step suboptimality certificates
* oracle               per-step exhaustive optimum and achieved ratio
* sweep-linearization  payoff gains over sampled linearization points
* compare-derivatives  both derivative concepts side by side
* check-concavity      exhaustive certificate-validity check (first slot)
* check-submodular     exhaustive diminishing-returns check (first slot)

Exit codes: 0 ok, 2 parse/configuration error, 3 infeasible, 4 numeric
failure.  Floats print with 9 significant digits; outputs are byte-identical
under a fixed seed and configuration.  The COMBIDYN_MAX_WORKERS environment
variable caps the thread pool used by the sampling commands.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .certify import certify, check_concavity_inequality, monotonicity_report, submodularity_report
from .errors import (
    AdjointDivergedError,
    CombidynError,
    ConstraintError,
    DimensionError,
    EnumerationRefusedError,
    InfeasibleError,
    IntegrationDivergedError,
    NumericError,
    ScenarioError,
    TuViolationError,
)
from .gradient import nonstandard_derivative, standard_derivative
from .refrigeration import (
    Scenario,
    quadratic_payoff_model,
    run_receding_horizon,
    solve_linearized,
    step_constraints,
    step_system,
)
from .scenario_io import parse_scenario
from .solvers import is_feasible
from .system import TimeGrid, evaluate_payoff, integrate

COMMANDS = (
    "optimize",
    "certify",
    "oracle",
    "sweep-linearization",
    "compare-derivatives",
    "check-concavity",
    "check-submodular",
)


@dataclass(frozen=True)
class RunConfig:
    command: str
    scenario_path: str
    derivative: str = "standard"
    solver: str = "tu"
    grid: int = 201
    scheme: str = "euler"
    seed: int = 0
    out: Optional[str] = None
    format: str = "csv"
    samples: int = 100

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConstraintError(f"unknown command {self.command!r}")
        if not self.scenario_path:
            raise ConstraintError("scenario path must be nonempty")
        if self.grid < 2:
            raise ConstraintError("grid must have at least 2 points")


def _fnum(x) -> str:
    return format(float(x), ".9g")


def _bits(alpha) -> str:
    return "".join(str(int(v)) for v in alpha)


def _max_workers() -> int:
    raw = os.environ.get("COMBIDYN_MAX_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_samples(fn, items):
    workers = _max_workers()
    if workers == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _emit(config: RunConfig, lines) -> None:
    text = "\n".join(lines) + "\n"
    if config.out:
        with open(config.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rho_value(res) -> float:
    return 1.0 if res.optimal else res.rho_post


def _cmd_optimize(config: RunConfig, scenario: Scenario):
    results = run_receding_horizon(
        scenario,
        kind=config.derivative if config.derivative != "both" else "both",
        solver=config.solver,
        grid_points=config.grid,
        scheme=config.scheme,
        seed=config.seed,
    )
    if config.format == "csv":
        lines = ["step,unit,alpha,temperature_end,power_kw,payoff,rho_post"]
        for res in results:
            for unit in range(scenario.params.m):
                lines.append(
                    ",".join(
                        [
                            str(res.step),
                            str(unit + 1),
                            str(int(res.alpha[unit])),
                            _fnum(res.temperatures_end[unit]),
                            _fnum(res.power_kw),
                            _fnum(res.payoff),
                            _fnum(_rho_value(res)),
                        ]
                    )
                )
    else:
        lines = [f"receding horizon: {len(results)} steps, {scenario.params.m} units"]
        for res in results:
            lines.append(
                f"step {res.step:3d}  on={int(res.alpha.sum()):3d}  "
                f"power={_fnum(res.power_kw)} kW  payoff={_fnum(res.payoff)}  "
                f"rho_post={_fnum(_rho_value(res))}{'  (base optimal)' if res.optimal else ''}"
            )
    _emit(config, lines)


def _cmd_certify(config: RunConfig, scenario: Scenario):
    results = run_receding_horizon(
        scenario,
        kind=config.derivative if config.derivative != "both" else "both",
        solver=config.solver,
        grid_points=config.grid,
        scheme=config.scheme,
        seed=config.seed,
    )
    if config.format == "csv":
        lines = ["step,kind,payoff,base_payoff,rho,rho_post,optimal"]
        for res in results:
            lines.append(
                ",".join(
                    [
                        str(res.step),
                        res.kind,
                        _fnum(res.payoff),
                        _fnum(res.base_payoff),
                        _fnum(res.rho) if res.rho is not None else "",
                        _fnum(_rho_value(res)),
                        str(int(res.optimal)),
                    ]
                )
            )
    else:
        lines = ["per-step suboptimality certificates"]
        for res in results:
            if res.optimal:
                lines.append(f"step {res.step:3d}  linearization point certified optimal")
            else:
                lines.append(
                    f"step {res.step:3d}  rho_post={_fnum(res.rho_post)}  "
                    f"payoff gain={_fnum(res.payoff - res.base_payoff)}"
                )
    _emit(config, lines)


def _cmd_oracle(config: RunConfig, scenario: Scenario):
    results = run_receding_horizon(
        scenario,
        kind=config.derivative if config.derivative != "both" else "both",
        solver=config.solver,
        grid_points=config.grid,
        scheme=config.scheme,
        seed=config.seed,
        with_oracle=True,
    )
    if config.format == "csv":
        lines = ["step,payoff_gain,oracle_gain,ratio,rho_post"]
        for res in results:
            lines.append(
                ",".join(
                    [
                        str(res.step),
                        _fnum(res.payoff - res.base_payoff),
                        _fnum(res.oracle_payoff - res.base_payoff),
                        _fnum(res.oracle_ratio),
                        _fnum(_rho_value(res)),
                    ]
                )
            )
    else:
        ratios = [res.oracle_ratio for res in results]
        lines = ["per-step comparison against the exhaustive optimum"]
        for res in results:
            lines.append(
                f"step {res.step:3d}  ratio={_fnum(res.oracle_ratio)}  "
                f"rho_post={_fnum(_rho_value(res))}"
            )
        lines.append(f"worst ratio {_fnum(min(ratios))}, mean {_fnum(float(np.mean(ratios)))}")
    _emit(config, lines)


def _first_slot(config: RunConfig, scenario: Scenario):
    spec = step_system(scenario, scenario.params.x0)
    con, band = step_constraints(scenario, 1)
    grid = TimeGrid(scenario.step_hours, config.grid)
    return spec, con, band, grid


def _slot_payoff_fn(config: RunConfig, scenario: Scenario, spec, grid):
    """Exact discrete slot payoff; quadratic reduction for linear fleets."""
    if scenario.transient is None:
        model = quadratic_payoff_model(scenario.params, scenario.step_hours, grid, config.scheme)
        return model.value
    return lambda a: evaluate_payoff(spec, integrate(spec, a, grid, config.scheme), a)


def _cmd_sweep(config: RunConfig, scenario: Scenario):
    spec, con, band, grid = _first_slot(config, scenario)
    rng = np.random.default_rng(config.seed)
    bases = [np.zeros(scenario.params.m)]
    bases += [rng.integers(0, 2, scenario.params.m).astype(float) for _ in range(config.samples - 1)]
    derive = standard_derivative if config.derivative != "nonstandard" else nonstandard_derivative
    baseline = evaluate_payoff(
        spec, integrate(spec, np.zeros(scenario.params.m), grid, config.scheme), np.zeros(scenario.params.m)
    )

    def one(sample):
        idx, abar = sample
        grad = derive(spec, abar, grid, config.scheme)
        alpha_star = solve_linearized(grad, con, band, config.solver, scenario)
        cert = certify(spec, abar, grad, alpha_star, grid, config.scheme)
        applied = cert.alpha_post if is_feasible(con, abar) else cert.alpha_star
        payoff = cert.payoff_post if is_feasible(con, abar) else cert.payoff
        return idx, abar, payoff - baseline, cert.rho_post, applied

    rows = _map_samples(one, list(enumerate(bases)))
    if config.format == "csv":
        lines = ["sample,alpha_bar,payoff_gain,rho_post"]
        for idx, abar, gain, rho_post, _ in rows:
            lines.append(f"{idx},{_bits(abar)},{_fnum(gain)},{_fnum(rho_post)}")
    else:
        gains = [row[2] for row in rows]
        lines = [
            f"linearization sweep over {len(rows)} base points (first slot)",
            f"payoff gain over all-off: min {_fnum(min(gains))}, "
            f"mean {_fnum(float(np.mean(gains)))}, max {_fnum(max(gains))}",
        ]
    _emit(config, lines)


def _cmd_compare(config: RunConfig, scenario: Scenario):
    spec, con, band, grid = _first_slot(config, scenario)
    rng = np.random.default_rng(config.seed)
    bases = [np.zeros(scenario.params.m)]
    bases += [rng.integers(0, 2, scenario.params.m).astype(float) for _ in range(config.samples - 1)]

    def one(sample):
        idx, abar = sample
        out = {}
        grads = {}
        for kind, derive in (("standard", standard_derivative), ("nonstandard", nonstandard_derivative)):
            grad = derive(spec, abar, grid, config.scheme)
            grads[kind] = grad
            alpha_star = solve_linearized(grad, con, band, config.solver, scenario)
            cert = certify(spec, abar, grad, alpha_star, grid, config.scheme)
            out[kind] = cert.payoff_post if is_feasible(con, abar) else cert.payoff
        gdiff = float(np.max(np.abs(grads["standard"].entries - grads["nonstandard"].entries)))
        return idx, abar, out["standard"], out["nonstandard"], gdiff

    rows = _map_samples(one, list(enumerate(bases)))
    avg_std = float(np.mean([r[2] for r in rows]))
    avg_ns = float(np.mean([r[3] for r in rows]))
    max_gdiff = max(r[4] for r in rows)
    if config.format == "csv":
        lines = ["sample,alpha_bar,payoff_standard,payoff_nonstandard,grad_max_diff"]
        for idx, abar, ps, pn, gd in rows:
            lines.append(f"{idx},{_bits(abar)},{_fnum(ps)},{_fnum(pn)},{_fnum(gd)}")
        lines.append(f"# mean_standard={_fnum(avg_std)} mean_nonstandard={_fnum(avg_ns)} "
                     f"grad_max_diff={_fnum(max_gdiff)}")
    else:
        lines = [
            f"derivative comparison over {len(rows)} base points (first slot)",
            f"mean payoff, standard:    {_fnum(avg_std)}",
            f"mean payoff, nonstandard: {_fnum(avg_ns)}",
            f"max gradient difference:  {_fnum(max_gdiff)}",
        ]
    _emit(config, lines)


def _cmd_check_concavity(config: RunConfig, scenario: Scenario):
    spec, con, band, grid = _first_slot(config, scenario)
    abar = np.zeros(scenario.params.m)
    derive = standard_derivative if config.derivative != "nonstandard" else nonstandard_derivative
    grad = derive(spec, abar, grid, config.scheme)
    payoff_fn = _slot_payoff_fn(config, scenario, spec, grid)
    report = check_concavity_inequality(spec, abar, grad, grid, config.scheme, payoff_fn=payoff_fn)
    verdict = "pass" if report.holds else "FAIL"
    lines = [
        f"concavity inequality ({grad.kind} derivative, {report.checked} points): {verdict}",
        f"worst violator {_bits(report.worst_alpha)} with gap {_fnum(report.worst_violation)}",
    ]
    _emit(config, lines)


def _cmd_check_submodular(config: RunConfig, scenario: Scenario):
    spec, _con, _band, grid = _first_slot(config, scenario)
    payoff_fn = _slot_payoff_fn(config, scenario, spec, grid)
    sub = submodularity_report(payoff_fn, scenario.params.m)
    mono = monotonicity_report(payoff_fn, scenario.params.m)
    lines = [
        f"submodularity: {'pass' if sub.holds else 'FAIL'} "
        f"(worst second difference {_fnum(sub.worst_gap)} at {_bits(sub.witness)})",
        f"monotonicity: {'pass' if mono.holds else 'FAIL'} "
        f"(worst drop {_fnum(mono.worst_gap)} at {_bits(mono.witness)})",
    ]
    _emit(config, lines)


_DISPATCH = {
    "optimize": _cmd_optimize,
    "certify": _cmd_certify,
    "oracle": _cmd_oracle,
    "sweep-linearization": _cmd_sweep,
    "compare-derivatives": _cmd_compare,
    "check-concavity": _cmd_check_concavity,
    "check-submodular": _cmd_check_submodular,
}


def run(config: RunConfig) -> int:
    scenario = parse_scenario(config.scenario_path)
    _DISPATCH[config.command](config, scenario)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="combidyn",
        description="Optimize binary decisions governing an ODE fleet and certify the results.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, help="scenario file path")
        p.add_argument(
            "--derivative", default="standard", choices=("standard", "nonstandard", "both")
        )
        p.add_argument("--solver", default="tu", choices=("l0", "tu", "knapsack", "oracle"))
        p.add_argument("--grid", type=int, default=201, help="time points per slot")
        p.add_argument("--scheme", default="euler", choices=("euler", "rk4"))
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output path (stdout when omitted)")
        p.add_argument("--format", default="csv", choices=("csv", "report"))
        p.add_argument("--samples", type=int, default=100, help="sample count for sweeps")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    config = RunConfig(
        command=args.command,
        scenario_path=args.scenario,
        derivative=args.derivative,
        solver=args.solver,
        grid=args.grid,
        scheme=args.scheme,
        seed=args.seed,
        out=args.out,
        format=args.format,
        samples=args.samples,
    )
    try:
        return run(config)
    except (ScenarioError, ConstraintError, DimensionError, EnumerationRefusedError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (
        IntegrationDivergedError,
        AdjointDivergedError,
        TuViolationError,
        NumericError,
    ) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4
    except CombidynError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
