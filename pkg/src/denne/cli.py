"""Command-line driver: synth, perturb, train, eval and report from one INI config.

Every stage reads and writes a single output directory:

    graph.edges        pristine graph (synth)
    groups.labels      partition groups, or positions.txt for geometric graphs
    observed.edges     corrupted graph (perturb), delta.txt with the edits
    <variant>/s<seed>/ embeddings.txt, noise.txt, train_report.csv (train)
    <variant>/metrics_nc.csv, metrics_gr.csv (eval)
    report.csv         mean/std across all metrics files (report)
    manifest.ini       the fully resolved config
"""
from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import io
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .eval import DEFAULT_FRACTIONS, DEFAULT_RATIOS, DataError, classification_scores, reconstruction_scores
from .graph import (Graph, GraphParseError, GraphRangeError, GraphShapeError, LabelTable,
                    load_edge_list, load_labels, write_delta, write_edge_list, write_labels)
from .model import VARIANTS, ConfigError, ModelConfig, init_model, read_embeddings, write_embeddings, write_noise_dump
from .objective import TrainingError, train
from .sampling import SamplingError, WalkConfig
from .synth import (GEOMETRIC_EDGES, GEOMETRIC_NODES, PARTITION_EDGES, PARTITION_NODES, CapacityError,
                    GeometricSpec, NoiseSpec, PartitionSpec, SpecError, calibrate_partition,
                    calibrate_radius, gen_geometric, gen_partition, inject_noise, scaled_edge_target)

log = logging.getLogger("denne")


# --- config ----------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetConfig:
    kind: str = "partition"  # "partition" | "geometric" | "file"
    nodes: int = 256
    groups: int = 8
    edges: float = 0.0  # 0 keeps the published pair density at this size
    intra_fraction: float = 0.9
    radius: float = 0.0  # 0 calibrates from edges
    path: str = ""
    labels: str = ""
    name: str = ""
    seed: int = 0


@dataclass(frozen=True)
class EvalConfig:
    fractions: tuple[float, ...] = DEFAULT_FRACTIONS
    ratios: tuple[float, ...] = DEFAULT_RATIOS
    seeds: int = 20
    l2: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    seeds: tuple[int, ...] = (0,)
    variant: str = "basic"
    ground_truth_memberships: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    model: ModelConfig = field(default_factory=ModelConfig)
    walk: WalkConfig = field(default_factory=WalkConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    run: RunConfig = field(default_factory=RunConfig)

    @property
    def dataset_name(self) -> str:
        d = self.dataset
        return d.name or (Path(d.path).stem if d.kind == "file" else d.kind)

    def model_config(self, variant: str | None = None, seed: int | None = None) -> ModelConfig:
        variant = variant or self.run.variant
        base = dataclasses.asdict(self.model)
        for key in ("community", "degree", "noise_mode"):
            base.pop(key)
        base["mixture"] = self.model.mixture
        if seed is not None:
            base["seed"] = seed
        cfg = ModelConfig.for_variant(variant, **base)
        cfg.validate()
        return cfg


SECTIONS = {"dataset": DatasetConfig, "noise": NoiseSpec, "model": ModelConfig,
            "walk": WalkConfig, "eval": EvalConfig, "run": RunConfig}
# variant flags are chosen by run.variant, not set directly
_HIDDEN = {("model", "community"), ("model", "degree"), ("model", "noise_mode")}


def _parse_value(text: str, default):
    text = text.strip()
    if isinstance(default, bool):
        low = text.lower()
        if low not in ("true", "false", "yes", "no", "1", "0"):
            raise ValueError(text)
        return low in ("true", "yes", "1")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, str):
        return text
    if default is None or text.lower() == "none":
        return None if text.lower() == "none" else int(text)
    if isinstance(default, tuple):
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if default and isinstance(default[0], tuple):
            return tuple(tuple(float(x) for x in p.split(":")) for p in parts)
        kind = type(default[0]) if default else float
        return tuple(kind(p) for p in parts)
    raise ValueError(text)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return ", ".join(":".join(repr(float(x)) for x in p) for p in value)
        return ", ".join(repr(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def parse_config(text: str) -> ExperimentConfig:
    """Parse INI text; unknown or malformed keys are collected into one ConfigError."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}".splitlines()[0]) from exc
    bad = [s for s in parser.sections() if s not in SECTIONS]
    parts = {}
    for name, cls in SECTIONS.items():
        defaults = cls()
        values = {}
        if parser.has_section(name):
            for key, raw in parser.items(name):
                fields = {f.name for f in dataclasses.fields(cls)}
                if key not in fields or (name, key) in _HIDDEN:
                    bad.append(f"{name}.{key}")
                    continue
                try:
                    values[key] = _parse_value(raw, getattr(defaults, key))
                except ValueError:
                    bad.append(f"{name}.{key}")
        try:
            parts[name] = dataclasses.replace(defaults, **values)
        except ValueError:
            bad.append(name)
    if bad:
        raise ConfigError("invalid config keys: " + ", ".join(bad))
    cfg = ExperimentConfig(**parts)
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    bad = []
    d = cfg.dataset
    if d.kind not in ("partition", "geometric", "file"):
        bad.append("dataset.kind")
    if d.kind == "file" and not d.path:
        bad.append("dataset.path")
    if d.kind != "file" and d.nodes < 2:
        bad.append("dataset.nodes")
    if d.kind == "partition" and not 1 <= d.groups <= d.nodes:
        bad.append("dataset.groups")
    if not 0.0 <= d.intra_fraction <= 1.0:
        bad.append("dataset.intra_fraction")
    if d.edges < 0:
        bad.append("dataset.edges")
    try:
        cfg.noise.validate()
    except SpecError:
        bad.append("noise")
    if cfg.run.variant not in VARIANTS:
        bad.append("run.variant")
    if not cfg.run.seeds:
        bad.append("run.seeds")
    if any(not 0 < f < 1 for f in cfg.eval.fractions):
        bad.append("eval.fractions")
    if any(not 0 < r <= 1 for r in cfg.eval.ratios):
        bad.append("eval.ratios")
    if cfg.eval.seeds < 1:
        bad.append("eval.seeds")
    try:
        if cfg.run.variant in VARIANTS:
            cfg.model_config()
    except ConfigError as exc:
        bad.extend("model." + k for k in str(exc).split(": ", 1)[-1].split(", "))
    if bad:
        raise ConfigError("invalid config keys: " + ", ".join(bad))


def format_config(cfg: ExperimentConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    for name in SECTIONS:
        part = getattr(cfg, name)
        parser[name] = {f.name: _format_value(getattr(part, f.name))
                        for f in dataclasses.fields(part) if (name, f.name) not in _HIDDEN}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text)


def with_overrides(cfg: ExperimentConfig, seed: int | None = None, variant: str | None = None) -> ExperimentConfig:
    """Apply --seed / --variant; the top-level seed feeds every section's stream."""
    if seed is not None:
        cfg = dataclasses.replace(
            cfg,
            dataset=dataclasses.replace(cfg.dataset, seed=seed),
            noise=dataclasses.replace(cfg.noise, seed=seed),
            walk=dataclasses.replace(cfg.walk, seed=seed),
            model=dataclasses.replace(cfg.model, seed=seed),
            run=dataclasses.replace(cfg.run, seeds=(seed,)),
        )
    if variant is not None:
        cfg = dataclasses.replace(cfg, run=dataclasses.replace(cfg.run, variant=variant))
    validate_config(cfg)
    return cfg


# --- stages ----------------------------------------------------------------------

def _write(path: Path, writer) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer(fh)


def _read_graph(path: Path) -> Graph:
    try:
        with open(path) as fh:
            return load_edge_list(fh)
    except OSError as exc:
        raise FileNotFoundError(f"cannot read graph {path}: {exc.strerror}") from exc


def _write_manifest(cfg: ExperimentConfig, out: Path) -> None:
    _write(out / "manifest.ini", lambda fh: fh.write(format_config(cfg)))


def run_synth(cfg: ExperimentConfig, out: Path) -> Graph:
    """Generate (or copy) the pristine graph and its side information."""
    d = cfg.dataset
    out.mkdir(parents=True, exist_ok=True)
    if d.kind == "file":
        graph = _read_graph(Path(d.path))
        if d.labels:
            with open(d.labels) as fh:
                labels = load_labels(fh, graph.n)
            _write(out / "groups.labels", lambda fh: write_labels(labels, fh))
    elif d.kind == "partition":
        target = d.edges or scaled_edge_target(d.nodes, PARTITION_NODES, PARTITION_EDGES)
        p_in, p_out = calibrate_partition(d.nodes, d.groups, target, d.intra_fraction)
        graph, groups = gen_partition(PartitionSpec(d.nodes, d.groups, p_in, p_out, d.seed))
        _write(out / "groups.labels", lambda fh: write_labels(LabelTable.from_groups(groups), fh))
    else:
        radius = d.radius or calibrate_radius(d.nodes, d.edges or scaled_edge_target(d.nodes, GEOMETRIC_NODES,
                                                                                       GEOMETRIC_EDGES))
        graph, pos = gen_geometric(GeometricSpec(d.nodes, radius, d.seed))
        _write(out / "positions.txt", lambda fh: np.savetxt(fh, pos, fmt="%.17g"))
    _write(out / "graph.edges", lambda fh: write_edge_list(graph, fh))
    _write_manifest(cfg, out)
    log.info("pristine graph: %d nodes, %d edges", graph.n, graph.edge_count)
    return graph


def _pristine(cfg: ExperimentConfig, out: Path) -> Graph:
    if not (out / "graph.edges").exists():
        return run_synth(cfg, out)
    return _read_graph(out / "graph.edges")


def run_perturb(cfg: ExperimentConfig, out: Path) -> Graph:
    pristine = _pristine(cfg, out)
    observed, delta = inject_noise(pristine, cfg.noise)
    _write(out / "observed.edges", lambda fh: write_edge_list(observed, fh))
    _write(out / "delta.txt", lambda fh: write_delta(delta, fh))
    _write_manifest(cfg, out)
    log.info("observed graph: %d added, %d removed", len(delta.added), len(delta.removed))
    return observed


def _observed(cfg: ExperimentConfig, out: Path) -> Graph:
    if not (out / "observed.edges").exists():
        return run_perturb(cfg, out)
    return _read_graph(out / "observed.edges")


def _labels(out: Path, n: int) -> LabelTable:
    path = out / "groups.labels"
    if not path.exists():
        raise DataError(f"no labels for this dataset ({path} missing)")
    with open(path) as fh:
        return load_labels(fh, n)


def seed_dir(out: Path, variant: str, seed: int) -> Path:
    return out / variant / f"s{seed}"


def run_train(cfg: ExperimentConfig, out: Path, seed: int) -> Path:
    """Train one variant for one seed; returns the directory holding its artifacts."""
    graph = _observed(cfg, out)
    mcfg = cfg.model_config(seed=seed)
    memberships = None
    if mcfg.community and cfg.run.ground_truth_memberships:
        labels = _labels(out, graph.n)
        if labels.multilabel:
            raise DataError("ground-truth memberships need single-label groups")
        memberships = np.array([min(t) if t else 0 for t in labels.labels])
        mcfg = dataclasses.replace(mcfg, n_communities=max(labels.num_labels, 2))
    model = init_model(mcfg, graph, memberships=memberships)
    report = train(model, graph, dataclasses.replace(cfg.walk, seed=seed))
    dest = seed_dir(out, cfg.run.variant, seed)
    _write(dest / "embeddings.txt", lambda fh: write_embeddings(model.u, fh))
    _write(dest / "noise.txt", lambda fh: write_noise_dump(model, fh))
    _write(dest / "train_report.csv", lambda fh: report.write_csv(fh))
    _write_manifest(cfg, out)
    return dest


def _embeddings(out: Path, variant: str, seed: int) -> np.ndarray:
    path = seed_dir(out, variant, seed) / "embeddings.txt"
    try:
        with open(path) as fh:
            return read_embeddings(fh)
    except OSError as exc:
        raise FileNotFoundError(f"missing embeddings {path}: {exc.strerror}") from exc


METRIC_HEADER = ("variant", "dataset", "param", "seed", "metric", "value")


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def with_aggregates(rows: list[tuple]) -> list[tuple]:
    """Append mean and std rows for every (variant, dataset, param, metric) cell."""
    cells: dict[tuple, list[float]] = {}
    for v, d, p, _, m, val in rows:
        cells.setdefault((v, d, p, m), []).append(float(val))
    agg = []
    for (v, d, p, m), vals in cells.items():
        agg.append((v, d, p, "mean", m, _fmt(float(np.mean(vals)))))
        agg.append((v, d, p, "std", m, _fmt(float(np.std(vals)))))
    return rows + agg


def _write_metrics(path: Path, rows: list[tuple]) -> None:
    def writer(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_HEADER)
        w.writerows(rows)
    _write(path, writer)


def run_eval_nc(cfg: ExperimentConfig, out: Path, seed: int | None = None) -> Path:
    """Node classification on one embedding over eval.seeds random splits per fraction."""
    seed = cfg.run.seeds[0] if seed is None else seed
    emb = _embeddings(out, cfg.run.variant, seed)
    labels = _labels(out, len(emb))
    if not len(labels.labeled_nodes()):
        raise DataError("label table is empty")
    rows = []
    for frac in cfg.eval.fractions:
        for s in range(cfg.eval.seeds):
            macro, micro = classification_scores(emb, labels, frac, seed=s, l2=cfg.eval.l2)
            rows.append((cfg.run.variant, cfg.dataset_name, _fmt(frac), s, "macro_f1", _fmt(macro)))
            rows.append((cfg.run.variant, cfg.dataset_name, _fmt(frac), s, "micro_f1", _fmt(micro)))
    path = out / cfg.run.variant / "metrics_nc.csv"
    _write_metrics(path, with_aggregates(rows))
    return path


def run_eval_gr(cfg: ExperimentConfig, out: Path, seeds=None) -> Path:
    """Reconstruction F1 over the ratio grid, one row per (training seed, ratio)."""
    seeds = cfg.run.seeds if seeds is None else seeds
    pristine = _pristine(cfg, out)
    rows = []
    for seed in seeds:
        emb = _embeddings(out, cfg.run.variant, seed)
        for ratio in cfg.eval.ratios:
            res = reconstruction_scores(emb, pristine, ratio)
            rows.append((cfg.run.variant, cfg.dataset_name, _fmt(ratio), seed, "f1", _fmt(res.f1)))
    path = out / cfg.run.variant / "metrics_gr.csv"
    _write_metrics(path, with_aggregates(rows))
    return path


def run_report(out: Path) -> Path:
    """Collect the mean/std rows of every metrics file under ``out`` into report.csv."""
    rows = []
    for path in sorted(out.glob("*/metrics_*.csv")):
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                if row["seed"] in ("mean", "std"):
                    rows.append(tuple(row[k] for k in METRIC_HEADER))
    if not rows:
        raise DataError(f"no metrics files under {out}")
    path = out / "report.csv"
    _write_metrics(path, rows)
    return path


def run_all(cfg: ExperimentConfig, out: Path) -> None:
    """synth, perturb, train for every run seed, then gr (and nc when labels exist)."""
    run_synth(cfg, out)
    run_perturb(cfg, out)
    for seed in cfg.run.seeds:
        run_train(cfg, out, seed)
    run_eval_gr(cfg, out)
    if (out / "groups.labels").exists():
        run_eval_nc(cfg, out, cfg.run.seeds[0])
    run_report(out)


# --- entry point -----------------------------------------------------------------

ERROR_CATEGORIES = (
    (ConfigError, "config", 2),
    (SpecError, "config", 2),
    ((FileNotFoundError, OSError), "io", 3),
    ((GraphParseError, GraphRangeError, GraphShapeError), "graph", 4),
    ((DataError, CapacityError, SamplingError), "data", 4),
    (TrainingError, "training", 5),
)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment config")
    common.add_argument("--seed", type=int, help="top-level seed for every random stream")
    common.add_argument("--variant", choices=VARIANTS, help="model variant")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="denne", description="Denoising network embedding experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="generate the pristine graph")
    sub.add_parser("perturb", parents=[common], help="inject edge noise")
    sub.add_parser("train", parents=[common], help="train embeddings")
    ev = sub.add_parser("eval", help="evaluate embeddings")
    ev_sub = ev.add_subparsers(dest="task", required=True)
    ev_sub.add_parser("nc", parents=[common], help="node classification")
    ev_sub.add_parser("gr", parents=[common], help="graph reconstruction")
    sub.add_parser("report", parents=[common], help="aggregate metrics files")
    sub.add_parser("run", parents=[common], help="full pipeline")
    sub.add_parser("config", parents=[common], help="print the resolved config")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    try:
        cfg = with_overrides(load_config(args.config), args.seed, args.variant)
        if args.command == "synth":
            run_synth(cfg, out)
        elif args.command == "perturb":
            run_perturb(cfg, out)
        elif args.command == "train":
            for seed in cfg.run.seeds:
                run_train(cfg, out, seed)
        elif args.command == "eval":
            run_eval_nc(cfg, out) if args.task == "nc" else run_eval_gr(cfg, out)
        elif args.command == "report":
            run_report(out)
        elif args.command == "run":
            run_all(cfg, out)
        elif args.command == "config":
            sys.stdout.write(format_config(cfg))
    except Exception as exc:
        for kinds, category, code in ERROR_CATEGORIES:
            if isinstance(exc, kinds):
                msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
                print(f"error: {category}: {msg}", file=sys.stderr)
                return code
        raise
    return 0


if __name__ == "__main__":
    sys.exit(main())
