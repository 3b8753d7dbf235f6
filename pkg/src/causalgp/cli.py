"""Command-line entry point.

Subcommands: ``bench`` (replication benchmark with CSV/JSON reports),
``arc`` (accuracy-rejection curves plus SVG), ``plot-fit`` (truth /
posterior-band figure), ``active`` (acquisition-loop curves plus SVG), and
``gen`` (dump datasets to CSV).  Every flag can also be supplied through an
INI config file (section ``[experiment]``, keys named like the flags);
explicit flags win.  The default output directory comes from the
``CAUSALGP_OUT`` environment variable, falling back to ``./results``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import os
import sys
from pathlib import Path

from . import active, evaluation, runner, svgplot
from .datagen import FAMILIES, DesignSpec, generate, write_dataset_csv
from .evaluation import DEFAULT_QUANTILES, PredictionSet
from .svgplot import CsvFormatError

__all__ = ["main"]

OUTPUT_ENV_VAR = "CAUSALGP_OUT"


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip() != "")


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip() != "")


def _parse_names(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip() != "")


def _parse_seeds(text: str) -> tuple[int, ...]:
    """Either ``root:count`` (count seeds starting at root) or a comma list."""
    text = text.strip()
    if ":" in text:
        root_s, count_s = text.split(":", 1)
        root, count = int(root_s), int(count_s)
        if count < 1:
            raise ValueError(f"seed count must be >= 1, got {count}")
        return tuple(range(root, root + count))
    return _parse_ints(text)


def _load_config(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValueError(f"config file not found: {path}")
    if not parser.has_section("experiment"):
        raise ValueError(f"{path}: missing [experiment] section")
    return dict(parser.items("experiment"))


def _resolve(cli_value, cfg: dict[str, str], key: str, parse, default):
    """Flag value if given, else config-file value, else the default."""
    if cli_value is not None:
        return cli_value
    if key in cfg:
        return parse(cfg[key])
    return default


def _resolve_out(cli_value, cfg: dict[str, str]) -> Path:
    if cli_value is not None:
        return Path(cli_value)
    if "out" in cfg:
        return Path(cfg["out"])
    env = os.environ.get(OUTPUT_ENV_VAR)
    return Path(env) if env else Path("results")


def _join_append(values: list[str] | None) -> str | None:
    if values is None:
        return None
    return ",".join(values)


def _experiment_flags(sub: argparse.ArgumentParser, *, seeds: bool = True) -> None:
    sub.add_argument("--config", metavar="PATH", help="INI file, section [experiment]")
    sub.add_argument("--design", help=f"design family, one of {', '.join(FAMILIES)}")
    sub.add_argument("--n", action="append", help="sample size(s), repeatable or comma list")
    if seeds:
        sub.add_argument("--seeds", help="'root:count' or comma list, e.g. 0:20 or 1,2,5")
    sub.add_argument("--out", metavar="DIR", help=f"output directory (default ${OUTPUT_ENV_VAR} or ./results)")
    sub.add_argument("--rho", type=float, help="confounding strength in [0, 1)")
    sub.add_argument("--eta", type=float, help="stage-one regularization")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalgp",
        description="Gaussian-process treatment-effect estimation under hidden confounding",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    bench = subs.add_parser("bench", help="run a replication benchmark, write results.csv + summary.json")
    _experiment_flags(bench)
    bench.add_argument("--method", action="append", help="estimator(s), repeatable or comma list")
    bench.add_argument("--jobs", type=int, help="parallel workers (default: all cores)")
    bench.add_argument("--quantiles", help="ARC quantile levels, comma list")
    bench.add_argument("--n-boot", type=int, dest="n_boot", help="bootstrap resamples")
    bench.set_defaults(func=_cmd_bench)

    arc = subs.add_parser("arc", help="compute accuracy-rejection curves, write CSV + SVG")
    _experiment_flags(arc)
    arc.add_argument("--method", action="append", help="estimator(s) with a variance output")
    arc.add_argument("--quantiles", help="ARC quantile levels, comma list")
    arc.add_argument("--n-boot", type=int, dest="n_boot", help="bootstrap resamples")
    arc.set_defaults(func=_cmd_arc)

    fit = subs.add_parser("plot-fit", help="plot truth, posterior mean, and 95% band for one replication")
    _experiment_flags(fit, seeds=False)
    fit.add_argument("--method", action="append", help="estimator to plot")
    fit.add_argument("--seed", type=int, help="replication seed (default 0)")
    fit.add_argument("--dump", metavar="CSV", help="plot an existing (x,truth,mean,variance) dump instead")
    fit.set_defaults(func=_cmd_plot_fit)

    act = subs.add_parser("active", help="run acquisition loops, write curve CSV + SVG")
    _experiment_flags(act)
    act.add_argument("--strategy", action="append", help="max_variance and/or random (default both)")
    act.add_argument("--budget", type=int, help="points to acquire (default 100)")
    act.add_argument("--n-train", type=int, dest="n_train", help="initial training size (default 30)")
    act.add_argument("--n-pool", type=int, dest="n_pool", help="pool size (default 300)")
    act.set_defaults(func=_cmd_active)

    gen = subs.add_parser("gen", help="write generated datasets as CSV")
    _experiment_flags(gen)
    gen.set_defaults(func=_cmd_gen)
    return parser


def _common_values(args) -> dict:
    cfg = _load_config(args.config)
    design = _resolve(args.design, cfg, "design", str, None)
    if design is None:
        raise ValueError("--design is required (flag or config)")
    values = {
        "design": design,
        "ns": _resolve(_join_append(args.n) and _parse_ints(_join_append(args.n)), cfg, "n", _parse_ints, (200,)),
        "out": _resolve_out(args.out, cfg),
        "rho": _resolve(args.rho, cfg, "rho", float, 0.5),
        "eta": _resolve(args.eta, cfg, "eta", float, None),
        "cfg": cfg,
    }
    if hasattr(args, "seeds"):
        values["seeds"] = _resolve(
            args.seeds and _parse_seeds(args.seeds), cfg, "seeds", _parse_seeds, tuple(range(20))
        )
    return values


def _cmd_bench(args) -> int:
    common = _common_values(args)
    cfg = common["cfg"]
    config = runner.ExperimentConfig(
        design=common["design"],
        sample_sizes=common["ns"],
        methods=_resolve(_join_append(args.method) and _parse_names(_join_append(args.method)),
                         cfg, "method", _parse_names, ("gpiv",)),
        seeds=common["seeds"],
        rho=common["rho"],
        eta=common["eta"],
        quantiles=_resolve(args.quantiles and _parse_floats(args.quantiles),
                           cfg, "quantiles", _parse_floats, DEFAULT_QUANTILES),
        n_boot=_resolve(args.n_boot, cfg, "n_boot", int, 25),
        output_dir=common["out"],
        jobs=_resolve(args.jobs, cfg, "jobs", int, 0),
    )
    report = runner.run_benchmark(config)
    print(f"wrote {report.csv_path}")
    print(f"wrote {report.json_path}")
    if report.n_failed:
        print(f"{report.n_failed} replication(s) failed; see the error column", file=sys.stderr)
        return 1
    return 0


_ARC_METHODS = ("gpiv", "gpproxy", "gpiv_bootstrap", "gpproxy_bootstrap")


def _cmd_arc(args) -> int:
    common = _common_values(args)
    cfg = common["cfg"]
    methods = _resolve(_join_append(args.method) and _parse_names(_join_append(args.method)),
                       cfg, "method", _parse_names, None)
    if methods is None:
        methods = ("gpproxy",) if common["design"].startswith("proxy") else ("gpiv",)
    bad = [m for m in methods if m not in _ARC_METHODS]
    if bad:
        raise ValueError(f"methods {bad} produce no variance; arc needs one of {_ARC_METHODS}")
    quantiles = _resolve(args.quantiles and _parse_floats(args.quantiles),
                         cfg, "quantiles", _parse_floats, DEFAULT_QUANTILES)
    n_boot = _resolve(args.n_boot, cfg, "n_boot", int, 25)

    out = common["out"]
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "arc_curves.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["design", "n", "method", "seed", "quantile", "rate", "accuracy"])
        for n in common["ns"]:
            for method in methods:
                for seed in common["seeds"]:
                    mean, var, truth_vals, _ = runner.predict_replication(
                        common["design"], n, method, seed,
                        rho=common["rho"], eta=common["eta"], n_boot=n_boot,
                    )
                    pred = PredictionSet(mean=mean, variance=var, truth=truth_vals)
                    for q in quantiles:
                        curve = evaluation.delta_arc(pred, q)
                        for rate, acc in zip(curve.rejection_rates, curve.accuracies):
                            writer.writerow(
                                [common["design"], n, method, seed,
                                 repr(float(q)), repr(float(rate)), repr(float(acc))]
                            )
    svg_path = out / "arc.svg"
    svgplot.plot_arc(csv_path, svg_path)
    print(f"wrote {csv_path}")
    print(f"wrote {svg_path}")
    return 0


def _cmd_plot_fit(args) -> int:
    cfg = _load_config(args.config)
    out = _resolve_out(args.out, cfg)
    out.mkdir(parents=True, exist_ok=True)
    svg_path = out / "fit.svg"
    dump = _resolve(args.dump, cfg, "dump", str, None)
    if dump is not None:
        svgplot.plot_fit(dump, svg_path)
        print(f"wrote {svg_path}")
        return 0
    design = _resolve(args.design, cfg, "design", str, None)
    if design is None:
        raise ValueError("--design is required when no --dump is given")
    ns = _resolve(_join_append(args.n) and _parse_ints(_join_append(args.n)), cfg, "n", _parse_ints, (200,))
    methods = _resolve(_join_append(args.method) and _parse_names(_join_append(args.method)),
                       cfg, "method", _parse_names, None)
    method = methods[0] if methods else ("gpproxy" if design.startswith("proxy") else "gpiv")
    seed = _resolve(args.seed, cfg, "seed", int, 0)
    rho = _resolve(args.rho, cfg, "rho", float, 0.5)
    eta = _resolve(args.eta, cfg, "eta", float, None)
    rows = runner.fit_dump_rows(design, ns[0], method, seed, rho=rho, eta=eta)
    dump_path = out / "fit_dump.csv"
    with dump_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "truth", "mean", "variance"])
        for row in rows:
            writer.writerow([repr(v) for v in row])
    svgplot.plot_fit(dump_path, svg_path)
    print(f"wrote {dump_path}")
    print(f"wrote {svg_path}")
    return 0


def _cmd_active(args) -> int:
    common = _common_values(args)
    cfg = common["cfg"]
    strategies = _resolve(_join_append(args.strategy) and _parse_names(_join_append(args.strategy)),
                          cfg, "strategy", _parse_names, active.STRATEGIES)
    bad = [s for s in strategies if s not in active.STRATEGIES]
    if bad:
        raise ValueError(f"unknown strategies {bad}; expected subset of {active.STRATEGIES}")
    budget = _resolve(args.budget, cfg, "budget", int, 100)
    n_train = _resolve(args.n_train, cfg, "n_train", int, 30)
    n_pool = _resolve(args.n_pool, cfg, "n_pool", int, 300)

    runs = []
    for seed in common["seeds"]:
        train, pool, grid, truth_vals = active.prepare_run(
            common["design"], n_train, n_pool, rho=common["rho"], seed=seed
        )
        for strategy in strategies:
            runs.append(
                active.run_acquisition(
                    train, pool, grid, truth_vals,
                    budget=budget, strategy=strategy, seed=seed,
                )
            )
    out = common["out"]
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "active_curves.csv"
    active.write_curves_csv(runs, csv_path)
    svg_path = out / "active.svg"
    svgplot.plot_active(csv_path, svg_path)
    print(f"wrote {csv_path}")
    print(f"wrote {svg_path}")
    return 0


def _cmd_gen(args) -> int:
    common = _common_values(args)
    out = common["out"]
    out.mkdir(parents=True, exist_ok=True)
    for n in common["ns"]:
        for seed in common["seeds"]:
            data, _ = generate(DesignSpec(family=common["design"], n=n, rho=common["rho"], seed=seed))
            path = out / f"{common['design']}_n{n}_seed{seed}.csv"
            write_dataset_csv(data, path)
            print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CsvFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
