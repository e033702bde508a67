"""Command-line orchestration for sweep experiments and architecture search.

Commands:
    stage1     sample circuit architectures for one sweep setting, train them
               under the requested configurations on the synthetic two-class
               set, and write one metrics CSV per (setting, configuration)
    nas        run the multi-objective search on an IDX image dataset and
               write archive.jsonl / pareto.json / summary.csv
    eval-arch  evaluate a single architecture descriptor end to end and
               print its metric triple as JSON
    selftest   quick internal consistency checks

Configuration comes from built-in defaults, overlaid by an optional JSON
file (--config; a previous run's manifest.json works too), overlaid by
flags.  Every run writes a manifest.json recording the resolved config and
its hash; rerunning with identical config reproduces outputs byte for byte.

Exit codes: 0 success, 2 usage/config error, 3 missing data,
4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import archspace, data, nas
from .archspace import (
    TOPOLOGY_KINDS,
    Stage1Setting,
    arch_from_json,
    arch_to_json,
    sample_stage1_architecture,
    stage1_setting,
)
from .hybridnet import build_dense_model, build_pure_model, encode_angles
from .metrics import (
    METRIC_CSV_COLUMNS,
    DegenerateVarianceError,
    MetricTriple,
    expressibility_uniform_kl,
    gradient_variance,
    trainability,
)
from .trainer import CONFIGURATION_IDS, TrainConfig, train

log = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "HQNNLAB_OUTPUT_DIR"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_DATA = 3
EXIT_INVARIANT = 4


def _config_hash(resolved: dict) -> str:
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _arch_id(arch) -> str:
    blob = json.dumps(arch_to_json(arch), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _load_file_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"config file {path} does not exist")
    obj = json.loads(p.read_text())
    # a manifest from a previous run carries the resolved config inside
    return obj.get("resolved_config", obj)


def _resolve_config(defaults: dict, file_cfg: dict, flags: dict) -> dict:
    unknown = set(file_cfg) - set(defaults)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    resolved = dict(defaults)
    resolved.update(file_cfg)
    resolved.update({k: v for k, v in flags.items() if v is not None})
    return resolved


def _output_dir(flag_value: str | None, command: str) -> Path:
    base = flag_value or os.environ.get(OUTPUT_DIR_ENV) or f"runs/{command}"
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_manifest(out_dir: Path, command: str, resolved: dict, files: list[str], extra: dict | None = None) -> None:
    if "seed" in resolved:
        global_seed = resolved["seed"]
    else:
        global_seed = resolved.get("seeds", [0])[0]
    manifest = {
        "command": command,
        "config_hash": _config_hash(resolved),
        "global_seed": global_seed,
        "resolved_config": resolved,
        "files": files,
    }
    if extra:
        manifest.update(extra)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _str_list(text: str) -> list[str]:
    return [v for v in text.split(",") if v]


# --------------------------------------------------------------------------
# stage1: sweep-setting training runs + metric rows
# --------------------------------------------------------------------------

STAGE1_DEFAULTS = {
    "setting": None,
    "configurations": [1, 2, 3],
    "n_architectures": 20,
    "seeds": [0],
    "epochs": 15,
    "learning_rate": 0.01,
    "batch_size": 32,
    "n_samples": 500,
    "noise": 0.15,
    "trainability_batch": 100,
    "expressibility_samples": 200,
    "trainability_at": "final",
    "grad_method": "adjoint",
    "qubit_choices": None,
    "depth_choices": None,
    "topology_choices": None,
}


def _setting_with_overrides(cfg: dict) -> Stage1Setting:
    setting = stage1_setting(int(cfg["setting"]))
    return Stage1Setting(
        id=setting.id,
        qubit_choices=tuple(cfg["qubit_choices"]) if cfg["qubit_choices"] else setting.qubit_choices,
        depth_choices=tuple(cfg["depth_choices"]) if cfg["depth_choices"] else setting.depth_choices,
        topology_choices=tuple(cfg["topology_choices"]) if cfg["topology_choices"] else setting.topology_choices,
    )


def stage1_row(arch, dataset, setting_id: int, config_id: int, run_seed: int, slot: int, opts: dict) -> dict:
    """Train one sampled architecture under one configuration; metric row."""
    configuration = CONFIGURATION_IDS[config_id]
    init_rng = np.random.default_rng(np.random.SeedSequence([run_seed, setting_id, slot, config_id, 1]))
    if config_id == 1:
        model = build_pure_model(arch, init_rng)
    else:
        model = build_dense_model(arch, init_rng, n_classes=2)

    record = train(
        model,
        dataset,
        TrainConfig(
            configuration=configuration,
            learning_rate=opts["learning_rate"],
            epochs=opts["epochs"],
            batch_size=opts["batch_size"],
            seed=int(np.random.SeedSequence([run_seed, setting_id, slot, config_id, 2]).generate_state(1)[0]),
            grad_method=opts["grad_method"],
        ),
    )
    measured = record.model if opts["trainability_at"] == "final" else model
    accuracy = record.val_accuracy_history[-1]

    expr_rng = np.random.default_rng(np.random.SeedSequence([run_seed, setting_id, slot, config_id, 3]))
    encode = lambda x: encode_angles(measured, x[None, :])[0][0]
    expressibility = expressibility_uniform_kl(
        arch, encode, dataset.train_features, opts["expressibility_samples"], expr_rng
    )

    batch_rng = np.random.default_rng(np.random.SeedSequence([run_seed, setting_id, slot, config_id, 4]))
    n_train = len(dataset.train_idx)
    pick = batch_rng.choice(n_train, size=min(opts["trainability_batch"], n_train), replace=False)
    variance = gradient_variance(
        measured, configuration, dataset.train_features[pick], dataset.train_labels[pick],
        grad_method=opts["grad_method"],
    )
    try:
        t_value = trainability(variance)
    except DegenerateVarianceError:
        log.warning("degenerate gradient variance for arch %s (config %d)", _arch_id(arch), config_id)
        t_value = None

    return {
        "arch_id": _arch_id(arch),
        "setting": setting_id,
        "configuration": config_id,
        "n": arch.n_qubits,
        "depth": arch.depth,
        "topology": arch.topology.kind,
        "entangler": arch.entangling_gate,
        "accuracy": accuracy,
        "expressibility": expressibility,
        "trainability": t_value,
        "variance": variance,
        "seed": run_seed,
    }


def _stage1_task(task: tuple) -> dict:
    return stage1_row(*task)


def cmd_stage1(cfg: dict, out_dir: Path, jobs: int) -> int:
    if cfg["setting"] is None:
        print("stage1 needs --setting (1-4)", file=sys.stderr)
        return EXIT_USAGE
    try:
        setting = _setting_with_overrides(cfg)
    except ValueError as err:
        print(f"stage1: {err}", file=sys.stderr)
        return EXIT_USAGE
    bad = [c for c in cfg["configurations"] if c not in (1, 2, 3)]
    if bad:
        print(f"stage1: unknown configurations {bad}; valid ids are 1, 2, 3", file=sys.stderr)
        return EXIT_USAGE
    bad_topo = [t for t in setting.topology_choices if t not in TOPOLOGY_KINDS]
    if bad_topo:
        print(f"stage1: unknown topologies {bad_topo}; valid: {TOPOLOGY_KINDS}", file=sys.stderr)
        return EXIT_USAGE

    opts = {k: cfg[k] for k in (
        "epochs", "learning_rate", "batch_size", "trainability_batch",
        "expressibility_samples", "trainability_at", "grad_method",
    )}
    tasks = []
    dataset_manifests = []
    for run_seed in cfg["seeds"]:
        dataset = data.generate_synthetic(cfg["n_samples"], cfg["noise"], seed=run_seed)
        dataset_manifests.append(data.dataset_manifest(dataset, "synthetic", run_seed))
        arch_rng = np.random.default_rng(np.random.SeedSequence([run_seed, 100 + setting.id]))
        arches = [sample_stage1_architecture(setting, arch_rng) for _ in range(cfg["n_architectures"])]
        for slot, arch in enumerate(arches):
            for config_id in cfg["configurations"]:
                tasks.append((arch, dataset, setting.id, config_id, run_seed, slot, opts))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_stage1_task, tasks))
    else:
        rows = [_stage1_task(t) for t in tasks]

    files = []
    for config_id in cfg["configurations"]:
        name = f"stage1_setting{setting.id}_config{config_id}.csv"
        with open(out_dir / name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(METRIC_CSV_COLUMNS)
            for row in rows:
                if row["configuration"] != config_id:
                    continue
                writer.writerow([
                    row["arch_id"], row["setting"], row["configuration"], row["n"],
                    row["depth"], row["topology"], row["entangler"],
                    repr(float(row["accuracy"])), repr(float(row["expressibility"])),
                    "" if row["trainability"] is None else repr(float(row["trainability"])),
                    repr(float(row["variance"])), row["seed"],
                ])
        files.append(name)
    _write_manifest(out_dir, "stage1", cfg, files, extra={"datasets": dataset_manifests})
    print(f"stage1: wrote {len(files)} CSV file(s) to {out_dir}")
    return EXIT_OK


# --------------------------------------------------------------------------
# nas
# --------------------------------------------------------------------------

NAS_DEFAULTS = {
    "scope": "full",
    "population": 12,
    "generations": 8,
    "epochs": 5,  # per-candidate training budget; see also --epochs
    "learning_rate": 0.01,
    "batch_size": 32,
    "images": None,
    "labels": None,
    "classes": 10,
    "per_class": 400,
    "image_size": None,
    "expressibility_samples": 200,
    "trainability_batch": 100,
    "mutation_rate": 0.40,
    "seed": 0,
}

FRONT_COLUMNS = ("Qubits", "Parameterized Gates", "Ent. Topology", "Ent. Gate", "Depth",
                 "Accuracy", "Trainability", "Expressibility")


def _print_front(result: nas.NasResult) -> None:
    rows = []
    for ind in sorted(result.pareto_front, key=lambda i: -i.objectives.one_minus_accuracy):
        q = ind.genome.quantum
        rows.append((
            str(q.n_qubits), archspace.gate_string(q), q.topology.kind.replace("_", "-"),
            q.entangling_gate, str(q.depth),
            f"{1.0 - ind.objectives.one_minus_accuracy:.4f}",
            f"{ind.objectives.trainability:.4f}",
            f"{ind.objectives.expressibility:.4f}",
        ))
    widths = [max(len(c), *(len(r[i]) for r in rows)) if rows else len(c)
              for i, c in enumerate(FRONT_COLUMNS)]
    print(" | ".join(c.ljust(w) for c, w in zip(FRONT_COLUMNS, widths)))
    for r in rows:
        print(" | ".join(v.ljust(w) for v, w in zip(r, widths)))


def cmd_nas(cfg: dict, out_dir: Path, jobs: int) -> int:
    if not cfg["images"] or not cfg["labels"]:
        print("nas needs --images and --labels (IDX files)", file=sys.stderr)
        return EXIT_MISSING_DATA
    for path in (cfg["images"], cfg["labels"]):
        if not Path(path).exists():
            print(f"nas: dataset file {path} not found", file=sys.stderr)
            return EXIT_MISSING_DATA
    if cfg["scope"] not in nas.SCOPES:
        print(f"nas: scope must be one of {nas.SCOPES}", file=sys.stderr)
        return EXIT_USAGE

    raw = data.load_idx(cfg["images"], cfg["labels"])
    dataset = data.stratified_subset(raw, classes=cfg["classes"], per_class=cfg["per_class"], seed=cfg["seed"])
    if cfg["image_size"]:
        dataset = data.downscale_images(dataset, int(cfg["image_size"]))

    config = nas.NasConfig(
        scope=cfg["scope"],
        population=cfg["population"],
        generations=cfg["generations"],
        seed=cfg["seed"],
        epochs=cfg["epochs"],
        learning_rate=cfg["learning_rate"],
        batch_size=cfg["batch_size"],
        mutation_rate=cfg["mutation_rate"],
        expressibility_samples=cfg["expressibility_samples"],
        trainability_batch=cfg["trainability_batch"],
        n_classes=cfg["classes"],
    )
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            result = nas.run_nsga2(config, dataset, map_fn=pool.map)
    else:
        result = nas.run_nsga2(config, dataset)

    config_hash = _config_hash(cfg)
    nas.write_archive(result, out_dir / "archive.jsonl")
    nas.write_pareto(result, out_dir / "pareto.json", scope=cfg["scope"],
                     config_hash=config_hash, global_seed=cfg["seed"],
                     image_shape=dataset.features.shape[1:], n_classes=cfg["classes"])
    nas.write_summary(result, out_dir / "summary.csv")
    _write_manifest(out_dir, "nas", cfg, ["archive.jsonl", "pareto.json", "summary.csv"],
                    extra={"dataset": data.dataset_manifest(dataset, cfg["images"], cfg["seed"])})
    _print_front(result)
    return EXIT_OK


# --------------------------------------------------------------------------
# eval-arch
# --------------------------------------------------------------------------

EVAL_ARCH_DEFAULTS = {
    "arch": None,
    "scope": "full",
    "epochs": 15,
    "learning_rate": 0.01,
    "batch_size": 32,
    "n_samples": 500,
    "noise": 0.15,
    "trainability_batch": 100,
    "expressibility_samples": 200,
    "seed": 0,
}

SCOPE_TO_CONFIG_ID = {"pure": 1, "full": 2, "quantum_only": 3}


def cmd_eval_arch(cfg: dict) -> int:
    if cfg["arch"] is None:
        print("eval-arch needs --arch pointing at an architecture JSON file", file=sys.stderr)
        return EXIT_USAGE
    path = Path(cfg["arch"])
    if not path.exists():
        print(f"eval-arch: {path} not found", file=sys.stderr)
        return EXIT_MISSING_DATA
    if cfg["scope"] not in SCOPE_TO_CONFIG_ID:
        print(f"eval-arch: scope must be one of {sorted(SCOPE_TO_CONFIG_ID)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        arch = arch_from_json(json.loads(path.read_text()))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
        print(f"eval-arch: could not parse {path}: {err}", file=sys.stderr)
        return EXIT_USAGE

    dataset = data.generate_synthetic(cfg["n_samples"], cfg["noise"], seed=cfg["seed"])
    opts = {
        "epochs": cfg["epochs"], "learning_rate": cfg["learning_rate"],
        "batch_size": cfg["batch_size"], "trainability_batch": cfg["trainability_batch"],
        "expressibility_samples": cfg["expressibility_samples"],
        "trainability_at": "final", "grad_method": "adjoint",
    }
    row = stage1_row(arch, dataset, 0, SCOPE_TO_CONFIG_ID[cfg["scope"]], cfg["seed"], 0, opts)
    degenerate = row["trainability"] is None
    triple = MetricTriple(row["accuracy"], row["expressibility"],
                          0.0 if degenerate else row["trainability"])
    out = {
        "arch": arch_to_json(arch),
        "gates": archspace.gate_string(arch),
        "scope": cfg["scope"],
        "seed": cfg["seed"],
        "accuracy": triple.accuracy,
        "expressibility": triple.expressibility,
        "trainability": None if degenerate else triple.trainability,
        "variance": row["variance"],
        "config_hash": _config_hash(cfg),
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


# --------------------------------------------------------------------------
# selftest
# --------------------------------------------------------------------------

def cmd_selftest() -> int:
    from . import qsim
    from .hybridnet import quantum_adjoint_grads, quantum_forward, quantum_param_grad

    failures = 0

    def check(name: str, ok: bool) -> None:
        nonlocal failures
        print(f"selftest: {name}: {'ok' if ok else 'FAIL'}")
        failures += 0 if ok else 1

    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 6))
        state = qsim.init_state(n)
        for _ in range(int(rng.integers(5, 40))):
            kind = str(rng.choice(["RX", "RY", "RZ", "CNOT", "CZ"])) if n > 1 else str(rng.choice(["RX", "RY", "RZ"]))
            target = int(rng.integers(n))
            if kind in ("CNOT", "CZ"):
                control = int((target + 1 + rng.integers(n - 1)) % n)
                qsim.apply_gate(state, qsim.GateOp(kind, target, control=control))
            else:
                qsim.apply_gate(state, qsim.GateOp(kind, target, angle=float(rng.uniform(0, 2 * np.pi))))
        worst = max(worst, abs(np.linalg.norm(state.amplitudes) - 1.0))
    check(f"norm preserved over 100 random circuits (worst {worst:.2e})", worst < 1e-9)

    arch = archspace.CircuitArchitecture(
        3, 2, ("RY", "RX", "RZ"), archspace.Topology("circular"), "CNOT", "RY"
    )
    theta = rng.uniform(0, 2 * np.pi, arch.n_params)
    angles = rng.uniform(-1, 1, 3)
    upstream = rng.normal(size=3)
    g_shift = quantum_param_grad(arch, theta, angles, upstream)
    g_adj, _ = quantum_adjoint_grads(arch, theta, angles[None, :], upstream[None, :])
    check("adjoint agrees with shift rule (1e-10)", np.abs(g_shift - g_adj).max() < 1e-10)

    h = 1e-4
    fd = np.zeros_like(theta)
    for k in range(theta.size):
        tp, tm = theta.copy(), theta.copy()
        tp[k] += h
        tm[k] -= h
        fd[k] = upstream @ (quantum_forward(arch, tp, angles) - quantum_forward(arch, tm, angles)) / (2 * h)
    check("shift rule agrees with finite differences (1e-6)", np.abs(g_shift - fd).max() < 1e-6)

    ok = True
    for _ in range(20):
        objs = [nas.ObjectiveVector(*rng.uniform(0, 1, 3)) for _ in range(12)]
        front0 = set(nas.fast_non_dominated_sort(objs)[0])
        brute = {i for i in range(12) if not any(nas.dominates(objs[j], objs[i]) for j in range(12))}
        ok &= front0 == brute
    check("non-dominated sort matches brute force", ok)

    s = stage1_setting(4)
    a1 = sample_stage1_architecture(s, np.random.default_rng(7))
    a2 = sample_stage1_architecture(s, np.random.default_rng(7))
    check("architecture sampling is seed-deterministic", a1 == a2)

    return EXIT_OK if failures == 0 else EXIT_INVARIANT


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hqnnlab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    s1 = sub.add_parser("stage1", help="sweep-setting training runs with metric CSVs")
    s1.add_argument("--config", help="JSON config file (or a previous manifest.json)")
    s1.add_argument("--setting", type=int, choices=(1, 2, 3, 4))
    s1.add_argument("--configurations", type=_int_list, help="comma list from {1,2,3}")
    s1.add_argument("--n-architectures", type=int, dest="n_architectures")
    s1.add_argument("--seeds", type=_int_list, help="comma list of run seeds")
    s1.add_argument("--epochs", type=int)
    s1.add_argument("--learning-rate", type=float, dest="learning_rate")
    s1.add_argument("--batch-size", type=int, dest="batch_size")
    s1.add_argument("--n-samples", type=int, dest="n_samples")
    s1.add_argument("--noise", type=float)
    s1.add_argument("--trainability-batch", type=int, dest="trainability_batch")
    s1.add_argument("--expressibility-samples", type=int, dest="expressibility_samples")
    s1.add_argument("--trainability-at", choices=("final", "init"), dest="trainability_at")
    s1.add_argument("--grad-method", choices=("adjoint", "shift"), dest="grad_method")
    s1.add_argument("--qubit-choices", type=_int_list, dest="qubit_choices")
    s1.add_argument("--depth-choices", type=_int_list, dest="depth_choices")
    s1.add_argument("--topology-choices", type=_str_list, dest="topology_choices")
    s1.add_argument("--output-dir", dest="output_dir")
    s1.add_argument("--jobs", type=int, default=1)

    sn = sub.add_parser("nas", help="NSGA-II search over the joint design space")
    sn.add_argument("--config")
    sn.add_argument("--scope", choices=nas.SCOPES)
    sn.add_argument("--population", type=int)
    sn.add_argument("--generations", type=int)
    sn.add_argument("--epochs", type=int,
                    help="per-candidate training budget (default 5; 10 is the other common choice)")
    sn.add_argument("--learning-rate", type=float, dest="learning_rate")
    sn.add_argument("--batch-size", type=int, dest="batch_size")
    sn.add_argument("--images", help="IDX image file (raw or gzip)")
    sn.add_argument("--labels", help="IDX label file (raw or gzip)")
    sn.add_argument("--classes", type=int)
    sn.add_argument("--per-class", type=int, dest="per_class")
    sn.add_argument("--image-size", type=int, dest="image_size",
                    help="optionally downscale images to this size")
    sn.add_argument("--expressibility-samples", type=int, dest="expressibility_samples")
    sn.add_argument("--trainability-batch", type=int, dest="trainability_batch")
    sn.add_argument("--mutation-rate", type=float, dest="mutation_rate")
    sn.add_argument("--seed", type=int)
    sn.add_argument("--output-dir", dest="output_dir")
    sn.add_argument("--jobs", type=int, default=1)

    se = sub.add_parser("eval-arch", help="one-off evaluation of an architecture JSON")
    se.add_argument("--config")
    se.add_argument("--arch", help="architecture descriptor JSON file")
    se.add_argument("--scope", choices=tuple(SCOPE_TO_CONFIG_ID))
    se.add_argument("--epochs", type=int)
    se.add_argument("--learning-rate", type=float, dest="learning_rate")
    se.add_argument("--batch-size", type=int, dest="batch_size")
    se.add_argument("--n-samples", type=int, dest="n_samples")
    se.add_argument("--noise", type=float)
    se.add_argument("--trainability-batch", type=int, dest="trainability_batch")
    se.add_argument("--expressibility-samples", type=int, dest="expressibility_samples")
    se.add_argument("--seed", type=int)

    sub.add_parser("selftest", help="quick internal consistency checks")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)

    try:
        if args.command == "selftest":
            return cmd_selftest()
        flags = {k: v for k, v in vars(args).items()
                 if k not in ("command", "config", "output_dir", "jobs")}
        if args.command == "stage1":
            cfg = _resolve_config(STAGE1_DEFAULTS, _load_file_config(args.config), flags)
            return cmd_stage1(cfg, _output_dir(args.output_dir, "stage1"), args.jobs)
        if args.command == "nas":
            cfg = _resolve_config(NAS_DEFAULTS, _load_file_config(args.config), flags)
            return cmd_nas(cfg, _output_dir(args.output_dir, "nas"), args.jobs)
        if args.command == "eval-arch":
            cfg = _resolve_config(EVAL_ARCH_DEFAULTS, _load_file_config(args.config), flags)
            return cmd_eval_arch(cfg)
        return EXIT_USAGE
    except FileNotFoundError as err:
        print(str(err), file=sys.stderr)
        return EXIT_MISSING_DATA
    except (data.IdxFormatError, data.InsufficientClassError) as err:
        print(f"dataset error: {err}", file=sys.stderr)
        return EXIT_MISSING_DATA
    except nas.InvariantError as err:
        print(f"internal invariant violated: {err}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
