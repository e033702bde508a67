"""Search tests: dominance, sorting, crowding, variation operators, the loop."""

import json

import numpy as np
import pytest

from hqnnlab.archspace import (
    ACTIVATIONS,
    CONV_CHANNELS,
    CONV_KERNELS,
    ENTANGLERS,
    ROTATION_AXES,
    SEARCH_DEPTHS,
    SEARCH_QUBITS,
    SEARCH_TOPOLOGIES,
    CircuitArchitecture,
    ConvSpec,
    HybridGenome,
    Topology,
    genome_from_json,
    sample_genome,
    validate,
)
from hqnnlab.metrics import DegenerateVarianceError
from hqnnlab.nas import (
    Individual,
    NasConfig,
    NasResult,
    ObjectiveVector,
    count_scope_params,
    crossover,
    crowding_distance,
    dominates,
    fast_non_dominated_sort,
    mutate,
    run_nsga2,
    tournament_select,
    write_archive,
    write_pareto,
    write_summary,
)

from oracles import brute_force_fronts


def obj(*values) -> ObjectiveVector:
    return ObjectiveVector(*values)


class SeededMock:
    """Deterministic pseudo-random objectives derived from the genome alone."""

    def __call__(self, genome: HybridGenome, seed: int) -> ObjectiveVector:
        key = json.dumps(
            {
                "c1": [genome.conv1.channels, genome.conv1.kernel, genome.conv1.pool],
                "c2": [genome.conv2.channels, genome.conv2.kernel, genome.conv2.pool],
                "act": genome.activation,
                "q": [genome.quantum.n_qubits, genome.quantum.depth, genome.quantum.topology.kind],
                "axes": genome.quantum.rotation_axes,
            },
            sort_keys=True,
        )
        digest = np.frombuffer(key.encode().ljust(128, b"x")[:128], dtype=np.uint8)
        rng = np.random.default_rng(digest)
        return ObjectiveVector(*rng.uniform(0.0, 1.0, 3))


class ChainMock:
    """Objectives on a strict chain: one global optimum, total order."""

    def __call__(self, genome: HybridGenome, seed: int) -> ObjectiveVector:
        h = genome.quantum.n_qubits * 1000 + genome.quantum.depth * 17 + genome.conv1.channels
        return ObjectiveVector(float(h), float(h), float(h))


class TestDominates:
    def test_strictly_better(self):
        assert dominates(obj(0.1, 0.1, 1.0), obj(0.2, 0.2, 2.0))

    def test_mutually_nondominated(self):
        a, b = obj(0.1, 0.3, 1.0), obj(0.3, 0.1, 1.0)
        assert not dominates(a, b) and not dominates(b, a)

    def test_equal_vectors(self):
        a = obj(0.5, 0.5, 0.5)
        assert not dominates(a, obj(0.5, 0.5, 0.5))

    def test_partial_improvement(self):
        assert dominates(obj(0.1, 0.2, 2.0), obj(0.1, 0.2, 3.0))


class TestSort:
    def test_single_front(self):
        objs = [obj(1, 0, 0), obj(0, 1, 0), obj(0, 0, 1)]
        assert fast_non_dominated_sort(objs) == [[0, 1, 2]]

    def test_strict_chain(self):
        objs = [obj(3, 3, 3), obj(1, 1, 1), obj(2, 2, 2)]
        assert fast_non_dominated_sort(objs) == [[1], [2], [0]]

    def test_matches_brute_force_on_random_populations(self):
        rng = np.random.default_rng(0)
        for _ in range(60):
            size = int(rng.integers(1, 21))
            objs = [obj(*rng.uniform(0, 1, 3)) for _ in range(size)]
            fronts = [sorted(f) for f in fast_non_dominated_sort(objs)]
            assert fronts == brute_force_fronts([o.as_tuple() for o in objs])

    def test_every_index_exactly_once(self):
        rng = np.random.default_rng(1)
        objs = [obj(*rng.integers(0, 3, 3).astype(float)) for _ in range(15)]
        flat = [i for front in fast_non_dominated_sort(objs) for i in front]
        assert sorted(flat) == list(range(15))

    def test_unevaluated_rejected(self):
        with pytest.raises(ValueError):
            fast_non_dominated_sort([obj(1, 1, 1), None])


class TestCrowding:
    def test_small_fronts_all_infinite(self):
        assert crowding_distance([obj(1, 2, 3)]) == [float("inf")]
        assert crowding_distance([obj(1, 2, 3), obj(2, 1, 0)]) == [float("inf")] * 2

    def test_collinear_middle_gets_full_gap(self):
        front = [obj(0.0, 5.0, 5.0), obj(1.0, 5.0, 5.0), obj(2.0, 5.0, 5.0)]
        dist = crowding_distance(front)
        assert dist[0] == float("inf") and dist[2] == float("inf")
        assert dist[1] == pytest.approx(1.0)

    def test_duplicates_no_division_by_zero(self):
        front = [obj(1, 1, 1)] * 4
        dist = crowding_distance(front)
        assert np.isfinite(dist).sum() >= 2
        assert all(d == 0.0 for d in dist if np.isfinite(d))

    def test_interior_accumulates_across_objectives(self):
        front = [obj(0, 0, 0), obj(1, 2, 0), obj(2, 4, 0), obj(4, 8, 0)]
        dist = crowding_distance(front)
        assert dist[1] == pytest.approx(0.5 + 0.5)
        assert dist[2] == pytest.approx(0.75 + 0.75)

    def test_empty_front_rejected(self):
        with pytest.raises(ValueError):
            crowding_distance([])


class TestTournament:
    @staticmethod
    def individual(rank, crowding):
        ind = Individual(genome=sample_genome(np.random.default_rng(0)))
        ind.rank, ind.crowding = rank, crowding
        return ind

    def test_lower_rank_wins(self):
        pop = [self.individual(0, 0.1), self.individual(2, 9.9)]
        rng = np.random.default_rng(1)
        for _ in range(50):
            assert tournament_select(pop, rng).rank == 0

    def test_crowding_breaks_rank_ties(self):
        pop = [self.individual(1, float("inf")), self.individual(1, 0.5)]
        rng = np.random.default_rng(2)
        for _ in range(50):
            assert tournament_select(pop, rng).crowding == float("inf")

    def test_full_tie_is_a_fair_coin(self):
        a, b = self.individual(0, 1.0), self.individual(0, 1.0)
        rng = np.random.default_rng(3)
        wins = sum(tournament_select([a, b], rng) is a for _ in range(10_000))
        assert abs(wins / 10_000 - 0.5) < 0.02


class TestCrossover:
    def test_identical_parents_identical_child(self):
        genome = sample_genome(np.random.default_rng(4))
        child = crossover(genome, genome, np.random.default_rng(5))
        assert child == genome

    def test_scalar_attributes_come_from_parents(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            p1, p2 = sample_genome(rng), sample_genome(rng)
            child = crossover(p1, p2, rng)
            assert child.conv1 in (p1.conv1, p2.conv1)
            assert child.conv2 in (p1.conv2, p2.conv2)
            assert child.activation in (p1.activation, p2.activation)
            q, q1, q2 = child.quantum, p1.quantum, p2.quantum
            assert q.n_qubits in (q1.n_qubits, q2.n_qubits)
            assert q.depth in (q1.depth, q2.depth)
            assert q.topology in (q1.topology, q2.topology)
            assert q.entangling_gate in (q1.entangling_gate, q2.entangling_gate)
            assert q.encoding_axis in (q1.encoding_axis, q2.encoding_axis)

    def test_fuzzed_children_validate(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            child = crossover(sample_genome(rng), sample_genome(rng), rng)
            assert validate(child) == []

    def test_seeded_determinism(self):
        p1 = sample_genome(np.random.default_rng(8))
        p2 = sample_genome(np.random.default_rng(9))
        a = crossover(p1, p2, np.random.default_rng(10))
        b = crossover(p1, p2, np.random.default_rng(10))
        assert a == b


class TestMutate:
    def test_zero_rate_is_identity(self):
        genome = sample_genome(np.random.default_rng(11))
        assert mutate(genome, 0.0, np.random.default_rng(12)) == genome

    def test_full_rate_resamples_and_validates(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            assert validate(mutate(sample_genome(rng), 1.0, rng)) == []

    def test_mutants_validate_at_default_rate(self):
        rng = np.random.default_rng(14)
        for _ in range(1000):
            assert validate(mutate(sample_genome(rng), 0.40, rng)) == []

    def test_per_attribute_change_rate(self):
        # resampling can land on the old value, so the observable change
        # rate per attribute is p_m * (1 - 1/|domain|)
        rng = np.random.default_rng(15)
        n_trials = 10_000
        domains = {
            "conv1": len(CONV_CHANNELS) * len(CONV_KERNELS) * 2,
            "conv2": len(CONV_CHANNELS) * len(CONV_KERNELS) * 2,
            "activation": len(ACTIVATIONS),
            "n_qubits": len(SEARCH_QUBITS),
            "depth": len(SEARCH_DEPTHS),
            "topology": len(SEARCH_TOPOLOGIES),
            "entangler": len(ENTANGLERS),
            "encoding": len(ROTATION_AXES),
        }
        changed = {k: 0 for k in domains}
        for _ in range(n_trials):
            genome = sample_genome(rng)
            mutant = mutate(genome, 0.40, rng)
            changed["conv1"] += mutant.conv1 != genome.conv1
            changed["conv2"] += mutant.conv2 != genome.conv2
            changed["activation"] += mutant.activation != genome.activation
            changed["n_qubits"] += mutant.quantum.n_qubits != genome.quantum.n_qubits
            changed["depth"] += mutant.quantum.depth != genome.quantum.depth
            changed["topology"] += mutant.quantum.topology != genome.quantum.topology
            changed["entangler"] += mutant.quantum.entangling_gate != genome.quantum.entangling_gate
            changed["encoding"] += mutant.quantum.encoding_axis != genome.quantum.encoding_axis
        for name, domain in domains.items():
            expected = 0.40 * (1.0 - 1.0 / domain)
            assert abs(changed[name] / n_trials - expected) < 0.03, name

    def test_qubit_change_fixes_axis_length(self):
        rng = np.random.default_rng(16)
        for _ in range(300):
            mutant = mutate(sample_genome(rng), 0.40, rng)
            assert len(mutant.quantum.rotation_axes) == mutant.quantum.n_qubits


class TestRunNsga2:
    def test_population_and_generation_counts(self):
        result = run_nsga2(NasConfig(population=12, generations=8, seed=0), evaluator=SeededMock())
        assert len(result.archive) == 108
        assert len(result.final_population) == 12
        generations = [ind.generation for ind in result.archive]
        assert generations.count(0) == 12
        assert all(generations.count(g) == 12 for g in range(1, 9))

    def test_zero_generations_returns_initial_front(self):
        result = run_nsga2(NasConfig(population=4, generations=0, seed=1), evaluator=SeededMock())
        assert len(result.archive) == 4
        front_objs = [ind.objectives for ind in result.pareto_front]
        for a in front_objs:
            assert not any(dominates(b, a) for b in [i.objectives for i in result.archive])

    def test_chain_mock_recovers_global_optimum(self):
        result = run_nsga2(NasConfig(population=4, generations=2, seed=2), evaluator=ChainMock())
        assert len(result.archive) == 12
        scores = [ind.objectives.as_tuple() for ind in result.archive]
        brute_best = min(scores)
        front = {ind.objectives.as_tuple() for ind in result.pareto_front}
        assert front == {brute_best}
        # brute-force dominance filter over every evaluated point agrees
        pareto = [s for s in scores if not any(t < s for t in scores)]
        assert set(pareto) == front

    def test_no_dominated_pair_in_front(self):
        result = run_nsga2(NasConfig(population=12, generations=3, seed=3), evaluator=SeededMock())
        for a in result.pareto_front:
            for b in result.pareto_front:
                assert a is b or not dominates(a.objectives, b.objectives)

    def test_archive_reproducible(self):
        config = NasConfig(population=6, generations=4, seed=4)
        a = run_nsga2(config, evaluator=SeededMock())
        b = run_nsga2(config, evaluator=SeededMock())
        assert [i.genome for i in a.archive] == [i.genome for i in b.archive]
        assert [i.objectives for i in a.archive] == [i.objectives for i in b.archive]
        assert [i.eval_seed for i in a.archive] == [i.eval_seed for i in b.archive]

    def test_elitism_keeps_objective_minima(self):
        result = run_nsga2(NasConfig(population=12, generations=6, seed=5), evaluator=SeededMock())
        by_generation = {}
        for ind in result.archive:
            by_generation.setdefault(ind.generation, []).append(ind)
        for g in range(1, 7):
            merged = result.populations[g - 1] + by_generation[g]
            for axis in range(3):
                best_merged = min(i.objectives.as_tuple()[axis] for i in merged)
                best_next = min(i.objectives.as_tuple()[axis] for i in result.populations[g])
                assert best_next <= best_merged

    def test_population_must_be_even_and_large_enough(self):
        with pytest.raises(ValueError):
            NasConfig(population=5)
        with pytest.raises(ValueError):
            NasConfig(population=2)

    def test_degenerate_candidates_get_sentinel(self):
        class SometimesDegenerate:
            def __call__(self, genome, seed):
                if genome.quantum.n_qubits % 2 == 0:
                    err = DegenerateVarianceError("flat gradients")
                    err.partial = (0.9, 0.9)
                    raise err
                return ObjectiveVector(0.5, 0.5, float(genome.quantum.depth))

        result = run_nsga2(NasConfig(population=8, generations=2, seed=6), evaluator=SometimesDegenerate())
        degenerate = [i for i in result.archive if i.degenerate]
        healthy = [i for i in result.archive if not i.degenerate]
        assert degenerate, "mock should produce degenerate candidates"
        max_healthy = max(i.objectives.trainability for i in healthy)
        for ind in degenerate:
            assert ind.objectives.trainability > max_healthy
            assert np.isfinite(ind.objectives.trainability)
        for ind in result.pareto_front:
            assert not ind.degenerate

    def test_failed_evaluations_become_worst_case(self):
        class Flaky:
            def __call__(self, genome, seed):
                if genome.quantum.depth >= 30:
                    raise RuntimeError("simulated crash")
                return ObjectiveVector(0.2, 0.2, 1.0)

        result = run_nsga2(NasConfig(population=8, generations=2, seed=7), evaluator=Flaky())
        failed = [i for i in result.archive if i.objectives.one_minus_accuracy == 1.0]
        assert failed, "mock should produce failures"
        assert len(result.archive) == 24


class TestScopeParams:
    def test_quantum_scope_is_n_times_depth(self):
        genome = sample_genome(np.random.default_rng(17))
        q = genome.quantum
        assert count_scope_params(genome, "quantum_only", (8, 8), 10) == q.n_qubits * q.depth

    def test_full_scope_matches_built_model(self):
        from hqnnlab.hybridnet import build_conv_model

        rng = np.random.default_rng(18)
        for _ in range(20):
            genome = sample_genome(rng)
            model = build_conv_model(genome, (8, 8), rng, n_classes=10)
            expected = model.theta.size + model.n_phi
            assert count_scope_params(genome, "full", (8, 8), 10) == expected


class TestOutputs:
    @staticmethod
    def result():
        return run_nsga2(NasConfig(population=6, generations=2, seed=8), evaluator=SeededMock())

    def test_archive_jsonl_roundtrip(self, tmp_path):
        result = self.result()
        write_archive(result, tmp_path / "archive.jsonl")
        lines = (tmp_path / "archive.jsonl").read_text().strip().split("\n")
        assert len(lines) == len(result.archive)
        for line, ind in zip(lines, result.archive):
            entry = json.loads(line)
            assert genome_from_json(entry["genome"]) == ind.genome
            assert entry["eval_seed"] == ind.eval_seed
            assert entry["objectives"]["trainability"] == ind.objectives.trainability

    def test_pareto_json_schema_and_dominance(self, tmp_path):
        result = self.result()
        write_pareto(result, tmp_path / "pareto.json", scope="quantum_only",
                     config_hash="abc", global_seed=8, image_shape=(8, 8), n_classes=10)
        obj = json.loads((tmp_path / "pareto.json").read_text())
        assert obj["scope"] == "quantum_only"
        triples = []
        for row in obj["front"]:
            assert set(row) >= {"n", "gates", "topology", "entangler", "depth",
                                "accuracy", "trainability", "expressibility", "scope_size"}
            genome = genome_from_json(row["genome"])
            assert row["scope_size"] == genome.quantum.n_qubits * genome.quantum.depth
            triples.append((1.0 - row["accuracy"], row["expressibility"], row["trainability"]))
        for a in triples:
            for b in triples:
                assert a == b or not (all(x <= y for x, y in zip(a, b)) and a != b)

    def test_pareto_row_renders_report_schema(self, tmp_path):
        # report-format fixture row with known column values
        axes = tuple("RY-RX-RX-RZ-RX-RY-RZ-RZ-RY-RZ-RX-RZ".split("-"))
        genome = HybridGenome(
            ConvSpec(8, 3, True), ConvSpec(16, 5, False), "relu",
            CircuitArchitecture(12, 45, axes, Topology("all_to_all"), "CZ", "RY"),
        )
        ind = Individual(genome=genome, objectives=ObjectiveVector(1.0 - 0.5963, 0.0499, 3.7456),
                         eval_seed=1, generation=0)
        result = NasResult(archive=[ind], final_population=[ind], pareto_front=[ind], populations=[[ind]])
        write_pareto(result, tmp_path / "pareto.json", scope="full", config_hash="x", global_seed=0)
        row = json.loads((tmp_path / "pareto.json").read_text())["front"][0]
        assert row["n"] == 12
        assert row["gates"] == "RY-RX-RX-RZ-RX-RY-RZ-RZ-RY-RZ-RX-RZ"
        assert row["topology"] == "all-to-all"
        assert row["entangler"] == "CZ"
        assert row["depth"] == 45
        assert row["accuracy"] == pytest.approx(0.5963, abs=1e-12)
        assert row["trainability"] == pytest.approx(3.7456, abs=1e-12)
        assert row["expressibility"] == pytest.approx(0.0499, abs=1e-12)

    def test_summary_csv_schema(self, tmp_path):
        import csv

        result = self.result()
        write_summary(result, tmp_path / "summary.csv")
        with open(tmp_path / "summary.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == len(result.archive)
        assert set(rows[0]) == {"generation", "eval_seed", "n", "depth", "gates", "topology",
                                "entangler", "encoding", "accuracy", "expressibility", "trainability"}
        for row in rows:
            float(row["accuracy"])
            int(row["n"])
