"""NSGA-II search over the joint classical-quantum design space.

Three objectives, all minimised: (1 - validation accuracy), output-
distribution expressibility, and trainability under the selected gradient
scope ("full" pools quantum and classical components and trains end to
end; "quantum_only" pools quantum components and freezes the classical
layers during training).

Every generation produces as many offspring as the population size, so a
run with population N over G generations evaluates exactly N + G*N
candidates, all of which land in the archive with their per-candidate
seeds derived from (run seed, generation, slot).
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .archspace import (
    ACTIVATIONS,
    CONV_CHANNELS,
    CONV_KERNELS,
    ENTANGLERS,
    ROTATION_AXES,
    SEARCH_DEPTHS,
    SEARCH_QUBITS,
    SEARCH_TOPOLOGIES,
    ConvSpec,
    HybridGenome,
    Topology,
    gate_string,
    genome_to_json,
    sample_genome,
    validate,
)
from .data import LabeledDataset
from .hybridnet import build_conv_model, conv_output_shape, encode_angles
from .metrics import (
    DegenerateVarianceError,
    expressibility_uniform_kl,
    gradient_variance,
    trainability,
    validation_accuracy,
)
from .trainer import TrainConfig, train

log = logging.getLogger(__name__)

SCOPES = ("full", "quantum_only")
SCOPE_CONFIGURATION = {"full": "hybrid_full", "quantum_only": "hybrid_quantum_only"}


class InvariantError(RuntimeError):
    """An internal search invariant was violated."""


@dataclass(frozen=True)
class ObjectiveVector:
    one_minus_accuracy: float
    expressibility: float
    trainability: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.one_minus_accuracy, self.expressibility, self.trainability)


@dataclass
class Individual:
    genome: HybridGenome
    objectives: ObjectiveVector | None = None
    rank: int | None = None
    crowding: float | None = None
    eval_seed: int | None = None
    generation: int | None = None
    # marks sentinel carriers: degenerate gradient variance or a failed
    # evaluation, whose trainability is pinned above all measured values
    degenerate: bool = False


@dataclass
class NasConfig:
    scope: str = "full"
    population: int = 12
    generations: int = 8
    seed: int = 0
    epochs: int = 5
    learning_rate: float = 0.01
    batch_size: int = 32
    mutation_rate: float = 0.40
    expressibility_samples: int = 200
    trainability_batch: int = 100
    n_classes: int = 10

    def __post_init__(self):
        if self.scope not in SCOPES:
            raise ValueError(f"scope must be one of {SCOPES}")
        if self.population < 4 or self.population % 2:
            raise ValueError(f"population must be even and >= 4, got {self.population}")
        if self.generations < 0:
            raise ValueError(f"generations must be >= 0, got {self.generations}")


def evaluate(
    genome: HybridGenome,
    dataset: LabeledDataset,
    scope: str,
    seed: int,
    config: NasConfig | None = None,
) -> ObjectiveVector:
    """Train one candidate and measure the objective triple.

    Raises DegenerateVarianceError when every pooled gradient component is
    identical (typically a circuit whose gates never move any probability);
    the exception carries the already-measured (1-accuracy, expressibility)
    pair in its ``partial`` attribute and the search loop substitutes a
    worst-case trainability sentinel.
    """
    config = config or NasConfig(scope=scope)
    problems = validate(genome)
    if problems:
        raise ValueError(f"invalid genome: {problems}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    image_shape = dataset.features.shape[1:]
    model = build_conv_model(genome, image_shape, rng, n_classes=config.n_classes)
    model.init_seed = seed
    record = train(
        model,
        dataset,
        TrainConfig(
            configuration=SCOPE_CONFIGURATION[scope],
            learning_rate=config.learning_rate,
            epochs=config.epochs,
            batch_size=config.batch_size,
            seed=int(np.random.SeedSequence([seed, 2]).generate_state(1)[0]),
        ),
    )
    trained = record.model
    accuracy = validation_accuracy(trained, dataset.val_features, dataset.val_labels)

    expr_rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    encode = lambda x: encode_angles(trained, x[None, ...])[0][0]
    expressibility = expressibility_uniform_kl(
        genome.quantum, encode, dataset.train_features, config.expressibility_samples, expr_rng
    )

    batch_rng = np.random.default_rng(np.random.SeedSequence([seed, 4]))
    n_train = len(dataset.train_idx)
    pick = batch_rng.choice(n_train, size=min(config.trainability_batch, n_train), replace=False)
    try:
        variance = gradient_variance(
            trained,
            SCOPE_CONFIGURATION[scope],
            dataset.train_features[pick],
            dataset.train_labels[pick],
        )
        t_value = trainability(variance)
    except DegenerateVarianceError as err:
        err.partial = (1.0 - accuracy, expressibility)
        raise
    return ObjectiveVector(1.0 - accuracy, expressibility, t_value)


# --------------------------------------------------------------------------
# NSGA-II machinery
# --------------------------------------------------------------------------

def dominates(a: ObjectiveVector, b: ObjectiveVector) -> bool:
    """a dominates b when a <= b everywhere and a < b somewhere (minimising)."""
    ta, tb = a.as_tuple(), b.as_tuple()
    return all(x <= y for x, y in zip(ta, tb)) and ta != tb


def fast_non_dominated_sort(objectives: list[ObjectiveVector]) -> list[list[int]]:
    """Partition indices into fronts; front 0 is the non-dominated set."""
    if any(o is None for o in objectives):
        raise ValueError("all individuals must be evaluated before sorting")
    n = len(objectives)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    counts = [0] * n
    fronts: list[list[int]] = [[]]
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            if dominates(objectives[p], objectives[q]):
                dominated_by[p].append(q)
            elif dominates(objectives[q], objectives[p]):
                counts[p] += 1
        if counts[p] == 0:
            fronts[0].append(p)
    i = 0
    while fronts[i]:
        nxt = []
        for p in fronts[i]:
            for q in dominated_by[p]:
                counts[q] -= 1
                if counts[q] == 0:
                    nxt.append(q)
        i += 1
        fronts.append(nxt)
    fronts.pop()
    return fronts


def crowding_distance(front: list[ObjectiveVector]) -> list[float]:
    """Per-member density: boundary members get inf, interiors accumulate
    normalised neighbour gaps; zero-range objectives contribute nothing."""
    if not front:
        raise ValueError("front must be non-empty")
    size = len(front)
    dist = [0.0] * size
    if size <= 2:
        return [float("inf")] * size
    values = np.array([o.as_tuple() for o in front])
    for m in range(values.shape[1]):
        order = np.argsort(values[:, m], kind="stable")
        lo, hi = values[order[0], m], values[order[-1], m]
        dist[order[0]] = dist[order[-1]] = float("inf")
        if hi == lo:
            continue
        for pos in range(1, size - 1):
            i = order[pos]
            if dist[i] == float("inf"):
                continue
            dist[i] += (values[order[pos + 1], m] - values[order[pos - 1], m]) / (hi - lo)
    return dist


def tournament_select(population: list[Individual], rng: np.random.Generator) -> Individual:
    """Binary tournament on (rank, crowding), coin flip on full ties.

    The two contestants are distinct individuals whenever the population
    has more than one member.
    """
    if len(population) == 1:
        return population[0]
    i, j = rng.choice(len(population), size=2, replace=False)
    a, b = population[int(i)], population[int(j)]
    if a.rank != b.rank:
        return a if a.rank < b.rank else b
    if a.crowding != b.crowding:
        return a if a.crowding > b.crowding else b
    return a if rng.integers(2) == 0 else b


def _fix_axes(axes: tuple[str, ...], n: int, rng: np.random.Generator) -> tuple[str, ...]:
    if len(axes) == n:
        return axes
    if len(axes) > n:
        return axes[:n]
    extra = tuple(str(a) for a in rng.choice(ROTATION_AXES, size=n - len(axes)))
    return axes + extra


def crossover(p1: HybridGenome, p2: HybridGenome, rng: np.random.Generator) -> HybridGenome:
    """Uniform attribute-wise mix of the two parents.

    The axis string is inherited whole from one parent and trimmed or
    padded with fresh draws when its length disagrees with the child's
    qubit count.
    """

    def pick(a, b):
        return a if rng.integers(2) == 0 else b

    q1, q2 = p1.quantum, p2.quantum
    n = pick(q1.n_qubits, q2.n_qubits)
    axes = _fix_axes(pick(q1.rotation_axes, q2.rotation_axes), n, rng)
    quantum = replace(
        q1,
        n_qubits=n,
        depth=pick(q1.depth, q2.depth),
        rotation_axes=axes,
        topology=pick(q1.topology, q2.topology),
        entangling_gate=pick(q1.entangling_gate, q2.entangling_gate),
        encoding_axis=pick(q1.encoding_axis, q2.encoding_axis),
    )
    return HybridGenome(
        conv1=pick(p1.conv1, p2.conv1),
        conv2=pick(p1.conv2, p2.conv2),
        activation=pick(p1.activation, p2.activation),
        quantum=quantum,
    )


def mutate(genome: HybridGenome, p_m: float = 0.40, rng: np.random.Generator | None = None) -> HybridGenome:
    """Resample each attribute from its domain independently with prob p_m.

    The per-qubit axis string counts as one attribute and is resampled
    whole; a qubit-count change trims or pads an unmutated string.
    """
    rng = np.random.default_rng() if rng is None else rng
    hit = rng.random(9) < p_m

    def conv(spec: ConvSpec, flag: bool) -> ConvSpec:
        if not flag:
            return spec
        return ConvSpec(
            channels=int(rng.choice(CONV_CHANNELS)),
            kernel=int(rng.choice(CONV_KERNELS)),
            pool=bool(rng.integers(2)),
        )

    conv1 = conv(genome.conv1, hit[0])
    conv2 = conv(genome.conv2, hit[1])
    activation = str(rng.choice(ACTIVATIONS)) if hit[2] else genome.activation
    q = genome.quantum
    n = int(rng.choice(SEARCH_QUBITS)) if hit[3] else q.n_qubits
    depth = int(rng.choice(SEARCH_DEPTHS)) if hit[4] else q.depth
    topology = Topology(str(rng.choice(SEARCH_TOPOLOGIES))) if hit[5] else q.topology
    entangler = str(rng.choice(ENTANGLERS)) if hit[6] else q.entangling_gate
    encoding = str(rng.choice(ROTATION_AXES)) if hit[7] else q.encoding_axis
    if hit[8]:
        axes = tuple(str(a) for a in rng.choice(ROTATION_AXES, size=n))
    else:
        axes = _fix_axes(q.rotation_axes, n, rng)
    return HybridGenome(
        conv1=conv1,
        conv2=conv2,
        activation=activation,
        quantum=replace(
            q,
            n_qubits=n,
            depth=depth,
            rotation_axes=axes,
            topology=topology,
            entangling_gate=entangler,
            encoding_axis=encoding,
        ),
    )


# --------------------------------------------------------------------------
# the search loop
# --------------------------------------------------------------------------

@dataclass
class NasResult:
    archive: list[Individual]
    final_population: list[Individual]
    pareto_front: list[Individual]
    populations: list[list[Individual]]  # survivors after each selection step


@dataclass
class DatasetEvaluator:
    """Picklable default evaluator, usable with process-pool map functions."""

    dataset: LabeledDataset
    config: NasConfig

    def __call__(self, genome: HybridGenome, seed: int) -> ObjectiveVector:
        return evaluate(genome, self.dataset, self.config.scope, seed, self.config)


def _rank_population(population: list[Individual]) -> list[list[int]]:
    fronts = fast_non_dominated_sort([ind.objectives for ind in population])
    for rank, front in enumerate(fronts):
        dists = crowding_distance([population[i].objectives for i in front])
        for i, d in zip(front, dists):
            population[i].rank = rank
            population[i].crowding = d
    return fronts


def _select_next(population: list[Individual], fronts: list[list[int]], size: int) -> list[Individual]:
    chosen: list[Individual] = []
    for front in fronts:
        if len(chosen) + len(front) <= size:
            chosen.extend(population[i] for i in front)
        else:
            by_crowding = sorted(front, key=lambda i: -population[i].crowding)
            chosen.extend(population[i] for i in by_crowding[: size - len(chosen)])
            break
    return chosen


def _candidate_seed(run_seed: int, generation: int, slot: int) -> int:
    return int(np.random.SeedSequence([run_seed, 3, generation, slot]).generate_state(1)[0])


def _refresh_sentinels(archive: list[Individual]) -> None:
    """Pin degenerate/failed candidates above every measured trainability.

    The worst-case placeholder is the largest finite measured value in the
    archive plus one; it is recomputed whenever the archive grows so no
    later measurement can overtake a sentinel.
    """
    finite = [
        ind.objectives.trainability
        for ind in archive
        if not ind.degenerate and np.isfinite(ind.objectives.trainability)
    ]
    sentinel = (max(finite) if finite else 0.0) + 1.0
    for ind in archive:
        if ind.degenerate:
            ind.objectives = replace(ind.objectives, trainability=sentinel)


def run_nsga2(
    config: NasConfig,
    dataset: LabeledDataset | None = None,
    evaluator: Callable[[HybridGenome, int], ObjectiveVector] | None = None,
    map_fn: Callable = map,
) -> NasResult:
    """Full elitist loop; returns the archive and the final front.

    ``evaluator(genome, seed)`` defaults to training-based evaluation on
    ``dataset``.  ``map_fn`` may be an executor map; candidate seeds depend
    only on (run seed, generation, slot) so results are order-independent.
    """
    if evaluator is None:
        if dataset is None:
            raise ValueError("need either a dataset or an explicit evaluator")
        evaluator = DatasetEvaluator(dataset, config)

    archive: list[Individual] = []

    def evaluate_batch(genomes: list[HybridGenome], generation: int) -> list[Individual]:
        seeds = [_candidate_seed(config.seed, generation, slot) for slot in range(len(genomes))]
        results = list(map_fn(_safe_eval, [(evaluator, g, s) for g, s in zip(genomes, seeds)]))
        batch = []
        for genome, seed, (payload, degenerate, failed) in zip(genomes, seeds, results):
            ind = Individual(
                genome=genome, eval_seed=seed, generation=generation,
                degenerate=degenerate or failed,
            )
            if failed:
                ind.objectives = ObjectiveVector(1.0, 1.0, np.nan)
            elif degenerate:
                base = payload if payload is not None else (1.0, 1.0)
                ind.objectives = ObjectiveVector(base[0], base[1], np.nan)
            else:
                ind.objectives = payload
            batch.append(ind)
            archive.append(ind)
        _refresh_sentinels(archive)
        return batch

    rng_init = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    rng_evolve = np.random.default_rng(np.random.SeedSequence([config.seed, 2]))
    population = evaluate_batch([sample_genome(rng_init) for _ in range(config.population)], 0)
    populations = [list(population)]

    for generation in range(1, config.generations + 1):
        fronts = _rank_population(population)
        offspring_genomes = []
        for _ in range(config.population):
            mother = tournament_select(population, rng_evolve)
            father = tournament_select(population, rng_evolve)
            child = mutate(crossover(mother.genome, father.genome, rng_evolve), config.mutation_rate, rng_evolve)
            offspring_genomes.append(child)
        offspring = evaluate_batch(offspring_genomes, generation)
        merged = population + offspring
        fronts = _rank_population(merged)
        population = _select_next(merged, fronts, config.population)
        populations.append(list(population))

    fronts = _rank_population(population)
    pareto = [population[i] for i in fronts[0]]
    for a in pareto:
        for b in pareto:
            if a is not b and dominates(a.objectives, b.objectives):
                raise InvariantError("final front contains a dominated pair")
    return NasResult(
        archive=archive, final_population=population, pareto_front=pareto, populations=populations
    )


def _safe_eval(task) -> tuple:
    """Worker wrapper: (objectives-or-partial-pair, degenerate, failed)."""
    evaluator, genome, seed = task
    try:
        return evaluator(genome, seed), False, False
    except DegenerateVarianceError as err:
        log.warning("degenerate gradient variance for genome %s", gate_string(genome.quantum))
        return getattr(err, "partial", None), True, False
    except Exception:
        log.exception("candidate evaluation failed; assigning worst-case objectives")
        return None, False, True


# --------------------------------------------------------------------------
# run outputs
# --------------------------------------------------------------------------

SUMMARY_COLUMNS = (
    "generation",
    "eval_seed",
    "n",
    "depth",
    "gates",
    "topology",
    "entangler",
    "encoding",
    "accuracy",
    "expressibility",
    "trainability",
)


def count_scope_params(
    genome: HybridGenome, scope: str, image_shape: tuple[int, int], n_classes: int
) -> int:
    """Trainable parameter count under a scope, from the genome alone."""
    q = genome.quantum
    n_theta = q.n_qubits * q.depth
    if scope == "quantum_only":
        return n_theta
    c1, c2 = genome.conv1, genome.conv2
    flat = int(np.prod(conv_output_shape(genome, image_shape)))
    n_phi = (
        c1.channels * c1.kernel**2 + c1.channels
        + c2.channels * c1.channels * c2.kernel**2 + c2.channels
        + q.n_qubits * flat + q.n_qubits
        + n_classes * q.n_qubits + n_classes
    )
    return n_theta + n_phi


def _front_row(ind: Individual) -> dict:
    q = ind.genome.quantum
    return {
        "n": q.n_qubits,
        "gates": gate_string(q),
        "topology": q.topology.kind.replace("_", "-"),
        "entangler": q.entangling_gate,
        "depth": q.depth,
        "accuracy": 1.0 - ind.objectives.one_minus_accuracy,
        "trainability": ind.objectives.trainability,
        "expressibility": ind.objectives.expressibility,
    }


def write_archive(result: NasResult, path) -> None:
    with open(path, "w") as fh:
        for ind in result.archive:
            fh.write(
                json.dumps(
                    {
                        "generation": ind.generation,
                        "eval_seed": ind.eval_seed,
                        "genome": genome_to_json(ind.genome),
                        "objectives": {
                            "one_minus_accuracy": ind.objectives.one_minus_accuracy,
                            "expressibility": ind.objectives.expressibility,
                            "trainability": ind.objectives.trainability,
                        },
                        "degenerate": ind.degenerate,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def write_pareto(
    result: NasResult,
    path,
    *,
    scope: str,
    config_hash: str,
    global_seed: int,
    image_shape: tuple[int, int] | None = None,
    n_classes: int | None = None,
) -> None:
    front = []
    for ind in sorted(result.pareto_front, key=lambda i: -i.objectives.one_minus_accuracy):
        row = dict(_front_row(ind), genome=genome_to_json(ind.genome), eval_seed=ind.eval_seed)
        if image_shape is not None and n_classes is not None:
            row["scope_size"] = count_scope_params(ind.genome, scope, image_shape, n_classes)
        front.append(row)
    obj = {"scope": scope, "config_hash": config_hash, "global_seed": global_seed, "front": front}
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_summary(result: NasResult, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for ind in result.archive:
            q = ind.genome.quantum
            writer.writerow(
                [
                    ind.generation,
                    ind.eval_seed,
                    q.n_qubits,
                    q.depth,
                    gate_string(q),
                    q.topology.kind,
                    q.entangling_gate,
                    q.encoding_axis,
                    repr(float(1.0 - ind.objectives.one_minus_accuracy)),
                    repr(float(ind.objectives.expressibility)),
                    repr(float(ind.objectives.trainability)),
                ]
            )
