"""Command-line entry point: ``wellfill <command> [options]``.

Exit codes: 0 success, 1 partial failure (some wells or files failed), 2
invalid input or configuration.  ``evaluate`` collects per-well failures in
its report and returns 1 only when no well succeeded.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .experiment import (MAX_NEIGHBORS, Strategy, StrategyError, audit_csv, complete_well, correlations,
                         evaluate, neighbor_sweep, select_test_wells)
from .features import EmptyDatasetError, build_dataset
from .gaps import FilterCriteria, corpus_order_histogram, filter_wells, histogram_csv, missingness
from .las import LasParseError, load_aliases, load_corpus, parse_las, read_las, write_las
from .models.io import MODEL_KINDS, ModelFormatError, fit_regressor, load_model, save_model
from .plots import heatmap_svg, lines_svg, log_tracks_svg, scatter_svg
from .synth import PRESETS, SynthSpec, generate, preset
from .synthesis import GapSpec, InfeasibleInjection, inject_gaps, read_ground_truth_csv
from .wells import PROPERTIES, CoordSystem, PropertyKind, WellError

log = logging.getLogger("wellfill")

EXIT_OK, EXIT_PARTIAL, EXIT_INVALID = 0, 1, 2
CORPUS_ENV = "WELLFILL_CORPUS"


class UsageError(Exception):
    pass


# -- helpers ----------------------------------------------------------------

def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _input_digests(paths) -> dict[str, str]:
    out = {}
    for p in paths:
        p = Path(p)
        if p.is_dir():
            for f in sorted(p.iterdir()):
                if f.is_file() and f.suffix.lower() == ".las":
                    out[str(f)] = _digest(f)
        elif p.is_file():
            out[str(p)] = _digest(p)
    return out


def _config_view(args) -> dict:
    skip = {"func", "config"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        out[k] = v if isinstance(v, (str, int, float, bool, type(None), list, dict)) else str(v)
    return out


def write_manifest(out: Path, args, inputs, outputs: list[str]) -> None:
    manifest = {
        "command": args.command,
        "config": _config_view(args),
        "seeds": {"seed": getattr(args, "seed", None)},
        "inputs": _input_digests(inputs),
        "outputs": sorted(outputs),
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


class _Outputs:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def text(self, name: str, content: str) -> Path:
        p = self.root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(content, encoding="utf-8", newline="")
        self.files.append(name)
        return p

    def bytes(self, name: str, content: bytes) -> Path:
        p = self.root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(content)
        self.files.append(name)
        return p


def _targets(text: str) -> list[PropertyKind]:
    if text.lower() == "all":
        return list(PROPERTIES)
    try:
        return [PropertyKind(t.strip().upper()) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"unknown target {text!r}; expected nphi, gr, rhob, vp or all") from None


def _models(text: str) -> list[str]:
    if text.lower() == "all":
        return list(MODEL_KINDS)
    kinds = [m.strip().lower() for m in text.split(",")]
    bad = [m for m in kinds if m not in MODEL_KINDS]
    if bad:
        raise UsageError(f"unknown model {', '.join(bad)}; expected lr, gb, nn or all")
    return kinds


def _strategies(text: str) -> list[Strategy]:
    try:
        return [Strategy.parse(s) for s in text.split(",")]
    except StrategyError as exc:
        raise UsageError(str(exc)) from None


def _gap_spec(args) -> GapSpec:
    try:
        return GapSpec(args.mean, args.std, args.per_km, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _coord(args) -> CoordSystem | None:
    return None if args.coords == "auto" else CoordSystem(args.coords)


def _load(args):
    corpus = args.corpus or os.environ.get(CORPUS_ENV)
    if not corpus:
        raise UsageError(f"no corpus: pass --corpus or set {CORPUS_ENV}")
    if not Path(corpus).is_dir():
        raise UsageError(f"corpus directory {corpus} does not exist")
    args.corpus = corpus
    aliases = load_aliases(args.aliases) if args.aliases else None
    wells, errors = load_corpus(corpus, aliases, _coord(args), jobs=args.jobs)
    return wells, errors


def _read_well(args, path):
    aliases = load_aliases(args.aliases) if args.aliases else None
    return read_las(path, aliases, _coord(args))


# -- commands ---------------------------------------------------------------

def cmd_validate(args) -> int:
    paths = []
    for p in args.paths:
        p = Path(p)
        if p.is_dir():
            paths.extend(sorted(f for f in p.iterdir() if f.suffix.lower() == ".las"))
        elif p.is_file():
            paths.append(p)
        else:
            raise UsageError(f"{p} does not exist")
    if not paths:
        raise UsageError("no LAS files given")
    aliases = load_aliases(args.aliases) if args.aliases else None
    failed = 0
    for p in paths:
        try:
            well = parse_las(p.read_bytes(), aliases, _coord(args), name=p.stem)
            present = ",".join(k.value for k in PROPERTIES if not np.isnan(well[k]).all())
            print(f"ok    {p.name}: {well.name}, {well.n_rows} rows, curves {present or 'none'}")
        except LasParseError as exc:
            failed += 1
            print(f"error {p.name}: {exc}")
    if failed == len(paths):
        return EXIT_INVALID
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_stats(args) -> int:
    wells, errors = _load(args)
    if not wells:
        raise UsageError("no parseable wells in the corpus")
    out = _Outputs(args.out)
    stats = missingness(wells)
    out.text("stats.csv", stats.to_csv())
    out.text("coincidence.csv", histogram_csv(corpus_order_histogram(wells)))
    write_manifest(out.root, args, [args.corpus], out.files)
    print(f"{stats.n_wells} wells, {stats.total_km:.2f} km, complete rows {100 * stats.complete_fraction:.1f}%, "
          f"{stats.gaps_per_km:.2f} gaps/km")
    return EXIT_PARTIAL if errors else EXIT_OK


def _criteria(args) -> FilterCriteria:
    try:
        return FilterCriteria(args.min_depth, args.max_gap, args.min_complete, args.ratio_mode)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_filter(args) -> int:
    wells, errors = _load(args)
    accepted, rejected = filter_wells(wells, _criteria(args))
    out = _Outputs(args.out)
    out.text("accepted.txt", "".join(f"{w.name}\n" for w in accepted))
    lines = ["well,criterion,value,threshold"] + [
        f"{r.well_name},{r.criterion},{r.value!r},{r.threshold!r}" for r in rejected]
    out.text("rejected.csv", "\n".join(lines) + "\n")
    write_manifest(out.root, args, [args.corpus], out.files)
    print(f"{len(accepted)} accepted, {len(rejected)} rejected")
    return EXIT_PARTIAL if errors else EXIT_OK


def cmd_inject(args) -> int:
    spec = _gap_spec(args)
    if args.input:
        wells, errors, inputs = [_read_well(args, args.input)], [], [args.input]
    else:
        wells, errors = _load(args)
        inputs = [args.corpus]
    out = _Outputs(args.out)
    failed = len(errors)
    for well in wells:
        try:
            res = inject_gaps(well, spec)
        except InfeasibleInjection as exc:
            log.warning("%s", exc)
            failed += 1
            continue
        out.bytes(f"{well.name}.las", write_las(res.modified_well))
        out.text(f"{well.name}.truth.csv", res.ground_truth_csv())
    write_manifest(out.root, args, inputs, out.files)
    if failed and failed >= len(wells) + len(errors):
        return EXIT_INVALID if not wells else EXIT_PARTIAL
    return EXIT_PARTIAL if failed else EXIT_OK


def _model_options(args) -> dict:
    return dict(args.model_options or {})


def cmd_train(args) -> int:
    if args.input:
        wells, errors, inputs = [_read_well(args, args.input)], [], [args.input]
    else:
        wells, errors = _load(args)
        inputs = [args.corpus]
    out = _Outputs(args.out)
    opts = _model_options(args)
    for target in _targets(args.target):
        try:
            data = build_dataset(wells, target)
        except EmptyDatasetError as exc:
            raise UsageError(str(exc)) from None
        for kind in _models(args.model):
            reg = fit_regressor(kind, data.X, data.y, args.seed, opts.get(kind, {}), target)
            name = f"model_{target.value}_{kind}.json"
            save_model(reg, out.root / name)
            out.files.append(name)
            print(f"trained {kind} for {target.value} on {len(data)} rows -> {name}")
    write_manifest(out.root, args, inputs, out.files)
    return EXIT_PARTIAL if errors else EXIT_OK


def cmd_complete(args) -> int:
    well = _read_well(args, args.input)
    out = _Outputs(args.out)
    inputs = [args.input]
    if args.model_file == "train-local":
        targets = _targets(args.target)
        kind = _models(args.model)[0]
        regs = {}
        for t in targets:
            try:
                data = build_dataset([well], t)
            except EmptyDatasetError as exc:
                log.warning("%s", exc)
                continue
            regs[t] = fit_regressor(kind, data.X, data.y, args.seed, _model_options(args).get(kind, {}), t)
        strategy = "local"
    else:
        reg = load_model(args.model_file)
        if reg.target is None:
            raise UsageError("model file has no target property")
        if args.target != "all" and _targets(args.target) != [reg.target]:
            raise UsageError(f"model predicts {reg.target.value}, not {args.target}")
        regs = {reg.target: reg}
        strategy = "model-file"
        inputs.append(args.model_file)
    audit = []
    unfilled = 0
    for t, reg in regs.items():
        well, cells = complete_well(well, t, reg, strategy)
        unfilled += sum(c.value != c.value for c in cells)
        audit.append(audit_csv(well.name, t, cells))
    header = "well,property,row,depth,value,model,strategy,filled\n"
    out.bytes(f"{well.name}.completed.las", write_las(well))
    out.text(f"{well.name}.audit.csv", header + "".join(a[len(header):] for a in audit))
    write_manifest(out.root, args, inputs, out.files)
    if unfilled:
        print(f"{unfilled} gap rows could not be predicted (missing siblings)")
    return EXIT_PARTIAL if unfilled else EXIT_OK


def cmd_evaluate(args) -> int:
    targets, models, strategies = _targets(args.target), _models(args.model), _strategies(args.strategy)
    spec = _gap_spec(args)
    wells, errors = _load(args)
    if not args.no_filter:
        wells, rejected = filter_wells(wells, _criteria(args))
        for r in rejected:
            log.info("filtered out %s", r)
    if not wells:
        raise UsageError("no eligible wells after filtering")
    tests = select_test_wells(wells, args.test_wells, args.seed)
    opts = _model_options(args)
    report = evaluate(wells, tests, targets, models, strategies, spec, args.seed, args.jobs, opts)
    out = _Outputs(args.out)
    out.text("report.csv", report.to_csv())
    out.text("aggregate.csv", report.aggregate_csv())
    out.text("gaps.csv", report.gaps_csv())
    out.text("predictions.csv", report.predictions_csv())
    for agg in report.aggregate():
        rs = [r for r in report.results if r.ok and r.target == agg["target"]
              and r.model == agg["model"] and r.strategy == agg["strategy"]]
        if not rs:
            continue
        truth = np.concatenate([r.truth for r in rs])
        pred = np.concatenate([r.predicted for r in rs])
        label = f"{agg['target'].value}_{agg['model']}_{agg['strategy'].replace(':', '')}"
        out.text(f"plots/scatter_{label}.svg", scatter_svg(truth, pred, f"{label} (MAPE {agg['mape']:.2f}%)"))
    write_manifest(out.root, args, [args.corpus], out.files)
    print(report.table())
    ok = sum(r.ok for r in report.results)
    if ok == 0:
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_sweep(args) -> int:
    wells, errors = _load(args)
    names = {w.name: w for w in wells}
    if args.well not in names:
        raise UsageError(f"well {args.well!r} not in the corpus")
    if not 0 <= args.k_max <= MAX_NEIGHBORS:
        raise UsageError(f"--k-max must lie in [0, {MAX_NEIGHBORS}]")
    spec = _gap_spec(args)
    out = _Outputs(args.out)
    series = {}
    csvs = []
    for target in _targets(args.target):
        for kind in _models(args.model):
            res = neighbor_sweep(wells, names[args.well], target, kind, spec, args.k_max, args.seed,
                                 _model_options(args).get(kind), args.jobs)
            if res.truncated:
                print(f"note: sweep truncated at k={len(res.points) - 1} (not enough wells)")
            csvs.append(res.to_csv())
            series[f"{target.value} {kind}"] = ([p.k for p in res.points], [p.mape for p in res.points])
    head = csvs[0].split("\n", 1)[0] + "\n"
    out.text("sweep.csv", head + "".join(c.split("\n", 1)[1] for c in csvs))
    out.text("mape_vs_k.svg", lines_svg(series, f"{args.well}: MAPE vs neighbors", "neighbors k", "MAPE (%)"))
    write_manifest(out.root, args, [args.corpus], out.files)
    return EXIT_PARTIAL if errors else EXIT_OK


def cmd_correlate(args) -> int:
    wells, errors = _load(args)
    if not wells:
        raise UsageError("no parseable wells in the corpus")
    out = _Outputs(args.out)
    modes = ["per-well", "global"] if args.mode == "both" else [args.mode]
    labels = [k.value for k in PROPERTIES]
    for mode in modes:
        try:
            cm = correlations(wells, mode)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        out.text(f"correlation_{mode}.csv", cm.to_csv())
        out.text(f"correlation_{mode}.svg", heatmap_svg(cm.values, labels, f"correlation ({mode})"))
    write_manifest(out.root, args, [args.corpus], out.files)
    return EXIT_PARTIAL if errors else EXIT_OK


def cmd_synth(args) -> int:
    try:
        spec = SynthSpec.from_json(args.spec) if args.spec else preset(args.preset)
        changes = {k: v for k, v in (("n_wells", args.n_wells), ("extent", args.extent),
                                     ("step", args.step)) if v is not None}
        spec = replace(spec, seed=args.seed, **changes)
    except (ValueError, TypeError, KeyError) as exc:
        raise UsageError(f"invalid synthetic spec: {exc}") from None
    out = _Outputs(args.out)
    for well in generate(spec):
        out.bytes(f"{well.name}.las", write_las(well))
    out.text("synth_spec.json", json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n")
    write_manifest(out.root, args, [args.spec] if args.spec else [], out.files)
    print(f"wrote {spec.n_wells} wells to {out.root}")
    return EXIT_OK


def cmd_plot(args) -> int:
    well = _read_well(args, args.input)
    overlays = {}
    inputs = [args.input]
    if args.ground_truth:
        truth = read_ground_truth_csv(Path(args.ground_truth).read_text(encoding="utf-8"))
        by_kind: dict = {}
        for (row, kind), v in sorted(truth.items(), key=lambda kv: (kv[0][0], PROPERTIES.index(kv[0][1]))):
            by_kind.setdefault(kind, ([], []))
            by_kind[kind][0].append(row)
            by_kind[kind][1].append(v)
        overlays["ground truth"] = by_kind
        inputs.append(args.ground_truth)
    if args.audit:
        import csv
        by_kind = {}
        with open(args.audit, newline="", encoding="utf-8") as fh:
            for rec in csv.DictReader(fh):
                if rec["filled"] == "yes":
                    k = PropertyKind(rec["property"])
                    by_kind.setdefault(k, ([], []))
                    by_kind[k][0].append(int(rec["row"]))
                    by_kind[k][1].append(float(rec["value"]))
        overlays["prediction"] = by_kind
        inputs.append(args.audit)
    out = _Outputs(args.out)
    out.text(f"{well.name}.tracks.svg", log_tracks_svg(well, overlays))
    write_manifest(out.root, args, inputs, out.files)
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys mirror the long options")
    common.add_argument("--corpus", help=f"directory of LAS files (default: ${CORPUS_ENV})")
    common.add_argument("--aliases", help="JSON file mapping extra mnemonics to properties")
    common.add_argument("--coords", choices=["auto", "projected_meters", "geographic_degrees"], default="auto")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--out", default="wellfill_out")
    common.add_argument("-v", "--verbose", action="store_true")

    gaps = argparse.ArgumentParser(add_help=False)
    gaps.add_argument("--mean", type=float, default=150.0, help="mean artificial gap size (m)")
    gaps.add_argument("--std", type=float, default=50.0, help="gap size standard deviation (m)")
    gaps.add_argument("--per-km", type=float, default=2.0, help="artificial gaps per km")

    filt = argparse.ArgumentParser(add_help=False)
    filt.add_argument("--min-depth", type=float, default=1500.0)
    filt.add_argument("--max-gap", type=float, default=50.0)
    filt.add_argument("--min-complete", type=float, default=0.5)
    filt.add_argument("--ratio-mode", choices=["total", "incomplete"], default="total")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--target", default="all", help="nphi|gr|rhob|vp|all (comma list allowed)")
    model.add_argument("--model", default="gb", help="lr|gb|nn|all (comma list allowed)")
    model.add_argument("--model-options", type=json.loads, default=None,
                       help='JSON per model kind, e.g. {"gb": {"n_trees": 50}}')

    p = argparse.ArgumentParser(prog="wellfill", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"wellfill {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="parse LAS files and report problems")
    s.add_argument("paths", nargs="+")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("stats", parents=[common], help="missingness and gap statistics")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("filter", parents=[common, filt], help="apply well eligibility criteria")
    s.set_defaults(func=cmd_filter)

    s = sub.add_parser("inject", parents=[common, gaps], help="blank artificial gaps, keep ground truth")
    s.add_argument("--input", help="single LAS file instead of --corpus")
    s.set_defaults(func=cmd_inject)

    s = sub.add_parser("train", parents=[common, model], help="fit and save models")
    s.add_argument("--input", help="single LAS file instead of --corpus")
    s.set_defaults(func=cmd_train)

    for name in ("complete", "predict"):
        s = sub.add_parser(name, parents=[common, model], help="fill gaps of a LAS file")
        s.add_argument("--input", required=True)
        s.add_argument("--model-file", default="train-local", help='saved model JSON or "train-local"')
        s.set_defaults(func=cmd_complete)

    s = sub.add_parser("evaluate", parents=[common, gaps, filt, model], help="run strategies on test wells")
    s.add_argument("--strategy", default="local", help="local|global|neighbors:K (comma list allowed)")
    s.add_argument("--test-wells", type=int, default=50)
    s.add_argument("--no-filter", action="store_true", help="skip the eligibility filter")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("sweep", parents=[common, gaps, model], help="MAPE against neighbor count")
    s.add_argument("--well", required=True)
    s.add_argument("--k-max", type=int, default=MAX_NEIGHBORS)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("correlate", parents=[common], help="property correlation matrices")
    s.add_argument("--mode", choices=["per-well", "global", "both"], default="both")
    s.set_defaults(func=cmd_correlate)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic LAS corpus")
    s.add_argument("--preset", choices=PRESETS, default="standard")
    s.add_argument("--spec", help="JSON synthetic spec (overrides --preset)")
    s.add_argument("--n-wells", type=int)
    s.add_argument("--extent", type=float)
    s.add_argument("--step", type=float)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("plot", parents=[common], help="log tracks as SVG")
    s.add_argument("--input", required=True)
    s.add_argument("--ground-truth", help="ground-truth CSV from inject")
    s.add_argument("--audit", help="audit CSV from complete")
    s.set_defaults(func=cmd_plot)
    p.commands = sub.choices
    return p


def _apply_config(parser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    sub = parser.commands[args.command]
    known = {a.dest for a in sub._actions}
    unknown = sorted(k for k in (key.replace("-", "_") for key in cfg) if k not in known)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    # command-line flags win over the config file
    sub.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    except UsageError as exc:
        print(f"wellfill: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, LasParseError, WellError, ModelFormatError, StrategyError,
            FileNotFoundError, InfeasibleInjection) as exc:
        print(f"wellfill: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
