"""Command-line front end.

Subcommands: ``fisher`` (information tables over a phase range),
``posterior`` (prior/posterior curves for one scenario), ``sweep``
(repetition sweeps, scaling studies, protocol comparisons) and
``report`` (full estimation reports as versioned JSON records).

Exit codes: 0 success, 2 configuration/usage error, 3 runtime error.
Relative ``--out`` paths are resolved under ``PHASELAB_OUTPUT_DIR``
when that variable is set.
"""

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, bayes, configio, harness
from .configio import ConfigError
from .errors import PhaseLabError
from .information import classical_fisher
from .models import build_model
from .streams import derive_stream


def _resolve_out(path):
    if path is None:
        return None
    path = Path(path)
    base = os.environ.get("PHASELAB_OUTPUT_DIR")
    if base and not path.is_absolute():
        return Path(base) / path
    return path


def _emit_csv(out_path, header, rows):
    if out_path is None:
        configio.write_csv(sys.stdout, header, rows)
    else:
        configio.write_csv(out_path, header, rows)


def _emit_json(out_path, payload):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


def cmd_fisher(args) -> int:
    document = configio.load_config(args.config)
    if "fisher" not in document:
        raise ConfigError("config must contain a [fisher] section")
    section = document["fisher"]
    protocol = str(section.get("protocol", ""))
    if protocol not in configio.FISHER_PROTOCOLS:
        raise ConfigError(
            f"unknown protocol {protocol!r}; expected one of {configio.FISHER_PROTOCOLS}"
        )
    params = dict(section.get("params", {}))
    try:
        start = float(section["phi_start"])
        stop = float(section["phi_stop"])
        points = int(section["phi_points"])
    except KeyError as missing:
        raise ConfigError(f"missing field {missing} in [fisher]") from None
    if points < 1 or not (stop > start):
        raise ConfigError("need phi_stop > phi_start and phi_points >= 1")
    try:
        model = build_model(protocol, params)
        qfi = harness.protocol_qfi(protocol, params)
    except PhaseLabError as exc:
        raise ConfigError(str(exc)) from exc
    rows = []
    for phi in np.linspace(start, stop, points):
        fisher = classical_fisher(model, float(phi))
        if fisher > 0.0 and math.isfinite(fisher):
            bound = 1.0 / fisher
        else:
            bound = 0.0 if math.isinf(fisher) else math.inf
        rows.append((float(phi), fisher, qfi, bound))
    _emit_csv(_resolve_out(args.out), ["phi", "fisher", "qfi", "cr_bound"], rows)
    return 0


def cmd_posterior(args) -> int:
    document = configio.load_config(args.config)
    kind, config, _ = configio.parse_scenario(document, args.seed)
    if kind != "experiment":
        raise ConfigError(f"protocol {config.get('protocol', kind)!r} has no posterior curve")
    try:
        model = build_model(config.protocol, config.params)
    except PhaseLabError as exc:
        raise ConfigError(str(exc)) from exc
    grid = bayes.make_grid(config.prior, config.grid_size)
    data_section = document["scenario"].get("data", {})
    if "outcomes" in data_section:
        outcomes = np.asarray(data_section["outcomes"])
        if outcomes.size and hasattr(model, "outcome_index"):
            try:
                model.outcome_index(outcomes)
            except PhaseLabError as exc:
                raise ConfigError(f"invalid [scenario.data] outcomes: {exc}") from exc
    else:
        stream = derive_stream(config.master_seed, 0)
        phi = config.true_phase
        if phi is None:
            phi = config.prior.lo + config.prior.width * float(stream.uniform())
        outcomes = model.sample(stream, phi, config.repetitions)
    posterior = bayes.update(grid, model, outcomes)
    rows = zip(grid.nodes, grid.density, posterior.density)
    _emit_csv(
        _resolve_out(args.out),
        ["phi", "prior_density", "posterior_density"],
        rows,
    )
    return 0


def _sweep_section(document) -> dict:
    if "sweep" not in document:
        raise ConfigError("config must contain a [sweep] section")
    return dict(document["sweep"])


def cmd_sweep(args) -> int:
    document = configio.load_config(args.config)
    section = _sweep_section(document)
    if args.seed is not None:
        section["seed"] = int(args.seed)
    if "seed" not in section:
        raise ConfigError("sweep configs must carry an explicit seed")
    seed = int(section["seed"])
    trials = int(section.get("trials", 2000))
    grid_size = int(section.get("grid_size", bayes.DEFAULT_GRID_SIZE))
    normalized = {"sweep": {**section, "kind": args.kind}}
    out_path = _resolve_out(args.out)
    summary = {
        "schema": configio.SCHEMA_VERSION,
        "kind": args.kind,
        "manifest": configio.build_manifest(
            normalized,
            __version__,
            seed,
            [out_path] if out_path else [],
            args.no_timestamp,
        ),
    }
    try:
        if args.kind == "hb-repetition":
            prior = (
                configio.parse_prior(section["prior"], "sweep.prior")
                if "prior" in section
                else None
            )
            rows = harness.hb_repetition_sweep(
                n_total=int(section["n_total"]),
                n_values=[int(v) for v in section["n_values"]],
                prior=prior,
                grid_size=grid_size,
                trials=trials,
                master_seed=seed,
                mode=str(section.get("mode", "exact")),
                threads=args.threads,
            )
            if not rows:
                raise ConfigError("no admissible repetition values in n_values")
            best = min(rows, key=lambda r: r.mean_posterior_variance)
            summary["optimum_n"] = best.repetitions
            summary["optimum_variance"] = best.mean_posterior_variance
            summary["rows"] = [configio.report_payload(r) for r in rows]
            header = [
                "n",
                "j",
                "mean_posterior_variance",
                "cr_reference",
                "qfi_reference",
                "classical_reference",
                "failed_trials",
            ]
            csv_rows = [
                (
                    r.repetitions,
                    r.j,
                    r.mean_posterior_variance,
                    r.cr_reference,
                    r.qfi_reference,
                    r.classical_reference,
                    r.n_failed,
                )
                for r in rows
            ]
        elif args.kind == "scaling":
            study = harness.scaling_study(
                protocol=str(section["protocol"]),
                resource_levels=[int(v) for v in section["resource_levels"]],
                trials=trials,
                grid_size=grid_size,
                master_seed=seed,
                threads=args.threads,
            )
            summary["protocol"] = study.protocol
            summary["exponent"] = study.exponent
            header = ["resources", "empirical_mse", "cr_reference"]
            csv_rows = list(zip(study.resources, study.mse_values, study.cr_references))
        elif args.kind == "noon-vs-mz":
            report = harness.noon_vs_mz_comparison(
                n_photons=int(section["n_photons"]),
                grid_size=grid_size,
                trials=trials,
                master_seed=seed,
            )
            summary["comparison"] = configio.report_payload(report)
            header = ["scheme", "info_gain_nats", "dispersion", "variance"]
            csv_rows = [
                ("noon", report.noon_info_gain, report.noon_dispersion, report.noon_posterior_variance),
                ("noon-sampled-phase", report.noon_info_gain, report.noon_dispersion, report.noon_sampled_mean_variance),
                ("mz", report.mz_info_gain, report.mz_dispersion, math.nan),
                ("uniform-baseline", 0.0, math.nan, report.uniform_baseline_variance),
            ]
        else:  # pragma: no cover - argparse restricts choices
            raise ConfigError(f"unknown sweep kind {args.kind!r}")
    except KeyError as missing:
        raise ConfigError(f"missing field {missing} in [sweep]") from None
    _emit_csv(out_path, header, csv_rows)
    if out_path is not None:
        summary_path = Path(str(out_path) + ".summary.json")
        summary["manifest"]["outputs"].append(str(summary_path))
        _emit_json(summary_path, summary)
        print(f"wrote {out_path} and {summary_path}")
    else:
        _emit_json(None, summary)
    return 0


def cmd_report(args) -> int:
    document = configio.load_config(args.config)
    kind, config, normalized = configio.parse_scenario(document, args.seed)
    if kind == "experiment":
        report = harness.run_experiment(config, threads=args.threads)
        seed = config.master_seed
    elif kind == "chi2-demo":
        report = harness.chi2_phase_demo(
            s=float(config["s"]),
            n=int(config["n"]),
            theta_true=float(config.get("theta_true", 0.0)),
            trials=int(config["trials"]),
            master_seed=int(config["master_seed"]),
        )
        seed = int(config["master_seed"])
    else:
        report = harness.matched_squeezed_analysis(
            s=float(config["s"]) if "s" in config else None,
            n_total=float(config["n_total"]) if "n_total" in config else None,
            samples=int(config.get("samples", 100_000)),
            master_seed=int(config["master_seed"]),
        )
        seed = int(config["master_seed"])
    out_path = _resolve_out(args.out)
    payload = {
        "schema": configio.SCHEMA_VERSION,
        "kind": kind,
        "manifest": configio.build_manifest(
            normalized,
            __version__,
            seed,
            [out_path] if out_path else [],
            args.no_timestamp,
        ),
        "config": normalized,
        "report": configio.report_payload(report),
    }
    _emit_json(out_path, payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phaselab",
        description="Resource-accounted phase estimation: information tables, "
        "posterior curves, sweeps and estimation reports.",
    )
    parser.add_argument("--version", action="version", version=f"phaselab {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    fisher = commands.add_parser("fisher", help="Fisher/QFI/CR table over a phase range")
    fisher.add_argument("--config", required=True)
    fisher.add_argument("--out", default=None)
    fisher.set_defaults(func=cmd_fisher)

    posterior = commands.add_parser("posterior", help="prior and posterior densities")
    posterior.add_argument("--config", required=True)
    posterior.add_argument("--out", default=None)
    posterior.add_argument("--seed", type=int, default=None)
    posterior.set_defaults(func=cmd_posterior)

    sweep = commands.add_parser("sweep", help="repetition sweeps and comparisons")
    sweep.add_argument("kind", choices=["hb-repetition", "scaling", "noon-vs-mz"])
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", default=None)
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--threads", type=int, default=1)
    sweep.add_argument("--no-timestamp", action="store_true")
    sweep.set_defaults(func=cmd_sweep)

    report = commands.add_parser("report", help="full estimation report as JSON")
    report.add_argument("--config", required=True)
    report.add_argument("--out", default=None)
    report.add_argument("--seed", type=int, default=None)
    report.add_argument("--threads", type=int, default=1)
    report.add_argument("--no-timestamp", action="store_true")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 0
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
