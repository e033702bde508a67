"""Architecture definitions: circuits, entanglement topologies, search spaces.

A circuit architecture fixes one rotation axis per qubit; that per-qubit
axis is reused in every layer with a fresh trainable angle, so a circuit
with n qubits and depth L carries n*L parameters.

Entanglement topologies (pair sets use (control, target) with control on
the lower-indexed qubit, except the explicit wrap-around pair of the
circular chain):

    linear       (0,1), (1,2), ..., (n-2,n-1)
    paired       (0,1), (2,3), ...
    circular     linear plus (n-1, 0)
    star         (0,1), (0,2), ..., (0,n-1)
    all_to_all   every (i, j) with i < j
    alternating  even layers (0,1),(2,3),...; odd layers (1,2),(3,4),...
    random       n-1 distinct pairs drawn without replacement, fixed
                 across layers, reproducible from the topology seed
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

TOPOLOGY_KINDS = ("linear", "paired", "circular", "random", "alternating", "all_to_all", "star")
ROTATION_AXES = ("RX", "RY", "RZ")
ENTANGLERS = ("CNOT", "CZ")

# Joint classical-quantum search space (the `random` topology is excluded
# here on purpose; it is only part of the sweep space above).
SEARCH_TOPOLOGIES = ("linear", "paired", "circular", "alternating", "all_to_all", "star")
SEARCH_QUBITS = tuple(range(2, 13))
SEARCH_DEPTHS = (5, 10, 15, 20, 25, 30, 35, 45, 50)
CONV_CHANNELS = (2, 4, 8, 12, 16, 24, 32, 48, 64)
CONV_KERNELS = (3, 5)
ACTIVATIONS = ("relu", "silu", "tanh")

# Sweep-stage space: n, L and topology choices for the four settings.
SWEEP_QUBITS = (8, 10, 12)
SWEEP_DEPTHS = (5, 10, 15, 20)


@dataclass(frozen=True)
class Topology:
    kind: str
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in TOPOLOGY_KINDS:
            raise ValueError(f"unknown topology kind {self.kind!r}")


@dataclass(frozen=True)
class CircuitArchitecture:
    """Full circuit description: (n, L, per-qubit axes, topology, gates)."""

    n_qubits: int
    depth: int
    rotation_axes: tuple[str, ...]
    topology: Topology
    entangling_gate: str = "CNOT"
    encoding_axis: str = "RY"

    def __post_init__(self):
        if len(self.rotation_axes) != self.n_qubits:
            raise ValueError(
                f"rotation_axes has length {len(self.rotation_axes)}, expected {self.n_qubits}"
            )

    @property
    def n_params(self) -> int:
        return self.n_qubits * self.depth


@dataclass(frozen=True)
class ConvSpec:
    channels: int
    kernel: int
    pool: bool


@dataclass(frozen=True)
class HybridGenome:
    """One search individual: two conv layers + activation + circuit."""

    conv1: ConvSpec
    conv2: ConvSpec
    activation: str
    quantum: CircuitArchitecture


@dataclass(frozen=True)
class Stage1Setting:
    """Which sweep dimensions vary; singleton tuples mean 'fixed'."""

    id: int
    qubit_choices: tuple[int, ...]
    depth_choices: tuple[int, ...]
    topology_choices: tuple[str, ...]


def stage1_setting(setting_id: int) -> Stage1Setting:
    """The four sweep settings: vary qubits / topology / depth / everything."""
    table = {
        1: Stage1Setting(1, SWEEP_QUBITS, (10,), ("alternating",)),
        2: Stage1Setting(2, (10,), (10,), TOPOLOGY_KINDS),
        3: Stage1Setting(3, (10,), SWEEP_DEPTHS, ("alternating",)),
        4: Stage1Setting(4, SWEEP_QUBITS, SWEEP_DEPTHS, TOPOLOGY_KINDS),
    }
    if setting_id not in table:
        raise ValueError(f"setting id must be one of {sorted(table)}, got {setting_id}")
    return table[setting_id]


def entanglement_pairs(topology: Topology, n: int, layer: int) -> list[tuple[int, int]]:
    """Deterministic (control, target) list for one layer of entanglers."""
    if n < 2:
        raise ValueError(f"need at least 2 qubits for entanglement, got {n}")
    kind = topology.kind
    if kind == "linear":
        return [(i, i + 1) for i in range(n - 1)]
    if kind == "paired":
        return [(2 * i, 2 * i + 1) for i in range(n // 2)]
    if kind == "circular":
        return [(i, i + 1) for i in range(n - 1)] + [(n - 1, 0)]
    if kind == "star":
        return [(0, i) for i in range(1, n)]
    if kind == "all_to_all":
        return list(combinations(range(n), 2))
    if kind == "alternating":
        start = layer % 2
        return [(i, i + 1) for i in range(start, n - 1, 2)]
    if kind == "random":
        rng = np.random.default_rng(topology.seed)
        all_pairs = list(combinations(range(n), 2))
        picks = rng.choice(len(all_pairs), size=min(n - 1, len(all_pairs)), replace=False)
        return [all_pairs[i] for i in picks]
    raise ValueError(f"unknown topology kind {kind!r}")


def sample_stage1_architecture(
    setting: Stage1Setting, rng: np.random.Generator
) -> CircuitArchitecture:
    """Uniform draw from the setting's choice sets (CNOT / RY-encoding fixed)."""
    n = int(rng.choice(setting.qubit_choices))
    depth = int(rng.choice(setting.depth_choices))
    kind = str(rng.choice(setting.topology_choices))
    seed = int(rng.integers(2**31)) if kind == "random" else None
    axes = tuple(str(a) for a in rng.choice(ROTATION_AXES, size=n))
    return CircuitArchitecture(
        n_qubits=n,
        depth=depth,
        rotation_axes=axes,
        topology=Topology(kind, seed),
        entangling_gate="CNOT",
        encoding_axis="RY",
    )


def sample_genome(rng: np.random.Generator) -> HybridGenome:
    """Uniform draw from the joint classical-quantum search space."""

    def conv() -> ConvSpec:
        return ConvSpec(
            channels=int(rng.choice(CONV_CHANNELS)),
            kernel=int(rng.choice(CONV_KERNELS)),
            pool=bool(rng.integers(2)),
        )

    conv1, conv2 = conv(), conv()
    activation = str(rng.choice(ACTIVATIONS))
    n = int(rng.choice(SEARCH_QUBITS))
    arch = CircuitArchitecture(
        n_qubits=n,
        depth=int(rng.choice(SEARCH_DEPTHS)),
        rotation_axes=tuple(str(a) for a in rng.choice(ROTATION_AXES, size=n)),
        topology=Topology(str(rng.choice(SEARCH_TOPOLOGIES))),
        entangling_gate=str(rng.choice(ENTANGLERS)),
        encoding_axis=str(rng.choice(ROTATION_AXES)),
    )
    return HybridGenome(conv1, conv2, activation, arch)


def validate(genome: HybridGenome) -> list[str]:
    """Every field outside its enumerated domain, as human-readable strings."""
    problems = []
    for name, spec in (("conv1", genome.conv1), ("conv2", genome.conv2)):
        if spec.channels not in CONV_CHANNELS:
            problems.append(f"{name}.channels {spec.channels} not in {CONV_CHANNELS}")
        if spec.kernel not in CONV_KERNELS:
            problems.append(f"{name}.kernel {spec.kernel} not in {CONV_KERNELS}")
        if not isinstance(spec.pool, bool):
            problems.append(f"{name}.pool {spec.pool!r} is not boolean")
    if genome.activation not in ACTIVATIONS:
        problems.append(f"activation {genome.activation!r} not in {ACTIVATIONS}")
    q = genome.quantum
    if q.n_qubits not in SEARCH_QUBITS:
        problems.append(f"quantum.n_qubits {q.n_qubits} not in [2, 12]")
    if q.depth not in SEARCH_DEPTHS:
        problems.append(f"quantum.depth {q.depth} not in {SEARCH_DEPTHS}")
    if q.topology.kind not in SEARCH_TOPOLOGIES:
        problems.append(f"quantum.topology {q.topology.kind!r} not in {SEARCH_TOPOLOGIES}")
    if q.entangling_gate not in ENTANGLERS:
        problems.append(f"quantum.entangling_gate {q.entangling_gate!r} not in {ENTANGLERS}")
    if q.encoding_axis not in ROTATION_AXES:
        problems.append(f"quantum.encoding_axis {q.encoding_axis!r} not in {ROTATION_AXES}")
    if len(q.rotation_axes) != q.n_qubits:
        problems.append(
            f"quantum.rotation_axes length {len(q.rotation_axes)} != n_qubits {q.n_qubits}"
        )
    bad_axes = [a for a in q.rotation_axes if a not in ROTATION_AXES]
    if bad_axes:
        problems.append(f"quantum.rotation_axes values {bad_axes} not in {ROTATION_AXES}")
    return problems


def gate_string(arch: CircuitArchitecture) -> str:
    """Report rendering of the per-qubit axis assignment, e.g. 'RY-RX-RZ'."""
    return "-".join(arch.rotation_axes)


def arch_to_json(arch: CircuitArchitecture) -> dict:
    return {
        "n_qubits": arch.n_qubits,
        "depth": arch.depth,
        "axes": list(arch.rotation_axes),
        "topology": arch.topology.kind,
        "topology_seed": arch.topology.seed,
        "entangler": arch.entangling_gate,
        "encoding": arch.encoding_axis,
    }


def arch_from_json(obj: dict) -> CircuitArchitecture:
    """Parse an architecture descriptor.

    Accepts axes either as a list or as a dash-joined gate string, and
    topology names with dashes in place of underscores.
    """
    axes = obj["axes"]
    if isinstance(axes, str):
        axes = axes.split("-")
    kind = str(obj["topology"]).replace("-", "_")
    return CircuitArchitecture(
        n_qubits=int(obj["n_qubits"]),
        depth=int(obj["depth"]),
        rotation_axes=tuple(axes),
        topology=Topology(kind, obj.get("topology_seed")),
        entangling_gate=obj.get("entangler", "CNOT"),
        encoding_axis=obj.get("encoding", "RY"),
    )


def genome_to_json(genome: HybridGenome) -> dict:
    return {
        "conv1": {"channels": genome.conv1.channels, "kernel": genome.conv1.kernel, "pool": genome.conv1.pool},
        "conv2": {"channels": genome.conv2.channels, "kernel": genome.conv2.kernel, "pool": genome.conv2.pool},
        "activation": genome.activation,
        "quantum": arch_to_json(genome.quantum),
    }


def genome_from_json(obj: dict) -> HybridGenome:
    def conv(d: dict) -> ConvSpec:
        return ConvSpec(int(d["channels"]), int(d["kernel"]), bool(d["pool"]))

    return HybridGenome(
        conv1=conv(obj["conv1"]),
        conv2=conv(obj["conv2"]),
        activation=obj["activation"],
        quantum=arch_from_json(obj["quantum"]),
    )
