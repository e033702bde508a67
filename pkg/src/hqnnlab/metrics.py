"""Expressibility, trainability and accuracy metrics.

Expressibility (primary variant): for each of ``n_samples`` draws, sample
circuit angles uniformly from [0, 2*pi), pick one dataset input, compute
the basis-state probabilities and their KL divergence from uniform,
normalised by log(d) so the value lands in [0, 1]; the reported metric is
the mean over draws.  0 means perfectly uniform output (most expressive),
1 means all mass on a single basis state.

Expressibility (secondary variant): KL divergence between the histogram
of pairwise state fidelities |<psi(a)|psi(b)>|^2 and the analytic
fully-random-state fidelity density (d-1)(1-F)^(d-2), integrated per bin.

Trainability: -log10 of the population variance over the components of
the batch-mean loss gradient.  Scope is the quantum parameter vector for
"pure_pqc" / "hybrid_quantum_only" and the pooled quantum + classical
vector for "hybrid_full".  Lower values mean larger gradients and easier
optimisation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .archspace import CircuitArchitecture
from .hybridnet import GradientRecord, HybridModel, forward_batch, loss_and_grad, run_circuit

TWO_PI = 2.0 * np.pi

METRIC_CSV_COLUMNS = (
    "arch_id",
    "setting",
    "configuration",
    "n",
    "depth",
    "topology",
    "entangler",
    "accuracy",
    "expressibility",
    "trainability",
    "variance",
    "seed",
)


class DegenerateVarianceError(ValueError):
    """Gradient variance is zero (or negative); trainability is undefined."""


@dataclass
class MetricTriple:
    accuracy: float
    expressibility: float
    trainability: float

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy must lie in [0, 1], got {self.accuracy}")


def normalized_uniform_kl(probs: np.ndarray) -> float:
    """(1/log d) * sum_i p_i log(p_i * d), with 0*log 0 taken as 0."""
    probs = np.asarray(probs, dtype=float)
    d = probs.size
    mask = probs > 0.0
    return float(np.sum(probs[mask] * np.log(probs[mask] * d)) / np.log(d))


def expressibility_uniform_kl(
    arch: CircuitArchitecture,
    encode_fn: Callable[[np.ndarray], np.ndarray],
    features: np.ndarray,
    n_samples: int = 200,
    rng: np.random.Generator | None = None,
) -> float:
    """Mean normalised KL-to-uniform of output distributions.

    Each draw uses fresh uniform circuit angles and a fresh input picked
    uniformly from ``features``; ``encode_fn`` maps one input to the
    encoding-angle vector (length n).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    features = np.asarray(features)
    if len(features) == 0:
        raise ValueError("empty dataset")
    rng = np.random.default_rng() if rng is None else rng
    total = 0.0
    for _ in range(n_samples):
        theta = rng.uniform(0.0, TWO_PI, size=arch.n_params)
        x = features[rng.integers(len(features))]
        angles = np.asarray(encode_fn(x), dtype=float)
        psi = run_circuit(arch, theta, angles[None, :])
        total += normalized_uniform_kl(np.abs(psi[0]) ** 2)
    return total / n_samples


def haar_bin_masses(d: int, n_bins: int) -> np.ndarray:
    """Analytic random-state fidelity mass per uniform bin on [0, 1].

    The density (d-1)(1-F)^(d-2) integrates over [a, b] to
    (1-a)^(d-1) - (1-b)^(d-1).
    """
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    comp = (1.0 - edges) ** (d - 1)
    return comp[:-1] - comp[1:]


def fidelity_histogram(fidelities: np.ndarray, n_bins: int) -> np.ndarray:
    """Empirical bin masses; bins are [i/n, (i+1)/n) with the last closed."""
    fidelities = np.asarray(fidelities, dtype=float)
    idx = np.minimum((fidelities * n_bins).astype(int), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return counts / len(fidelities)


def haar_fidelity_kl(fidelities: np.ndarray, d: int, n_bins: int, eps: float = 1e-10) -> float:
    """KL(empirical || analytic) over the fidelity histogram, eps-smoothed."""
    if n_bins < 1:
        raise ValueError("need at least one bin")
    p = fidelity_histogram(fidelities, n_bins) + eps
    p /= p.sum()
    q = haar_bin_masses(d, n_bins)
    return float(np.sum(p * np.log(p / q)))


def sample_pair_fidelities(
    arch: CircuitArchitecture, n_pairs: int, rng: np.random.Generator
) -> np.ndarray:
    """|<psi(a)|psi(b)>|^2 for pairs of independent uniform angle draws.

    Encoding angles are held at zero; the fidelity distribution probes the
    trainable part of the circuit only.
    """
    zero = np.zeros((1, arch.n_qubits))
    fids = np.empty(n_pairs)
    for i in range(n_pairs):
        ta = rng.uniform(0.0, TWO_PI, size=arch.n_params)
        tb = rng.uniform(0.0, TWO_PI, size=arch.n_params)
        psi_a = run_circuit(arch, ta, zero)[0]
        psi_b = run_circuit(arch, tb, zero)[0]
        fids[i] = np.abs(np.vdot(psi_a, psi_b)) ** 2
    return fids


def expressibility_haar_kl(
    arch: CircuitArchitecture,
    n_pairs: int = 1000,
    n_bins: int = 75,
    rng: np.random.Generator | None = None,
) -> float:
    if n_pairs < 100:
        raise ValueError("n_pairs must be >= 100")
    if n_bins < 10:
        raise ValueError("n_bins must be >= 10")
    rng = np.random.default_rng() if rng is None else rng
    fids = sample_pair_fidelities(arch, n_pairs, rng)
    return haar_fidelity_kl(fids, 1 << arch.n_qubits, n_bins)


def scope_components(record: GradientRecord, configuration: str) -> np.ndarray:
    """Pooled gradient components for a configuration's trainable scope."""
    if configuration == "hybrid_full":
        if record.phi_grads is None:
            raise ValueError("full scope needs classical gradient entries")
        return np.concatenate([record.theta_grads, record.phi_grads])
    return record.theta_grads


def gradient_variance(
    model: HybridModel,
    configuration: str,
    x: np.ndarray,
    labels: np.ndarray,
    grad_method: str = "adjoint",
    per_sample: bool = False,
) -> float:
    """Population variance of the pooled loss-gradient components.

    Default semantics: gradient of the batch-mean loss, variance across its
    components.  With ``per_sample=True`` every sample's own gradient is
    computed and all components from all samples are pooled before taking
    the variance.
    """
    if per_sample:
        pools = []
        for i in range(len(labels)):
            _, rec = loss_and_grad(model, x[i : i + 1], labels[i : i + 1], configuration, grad_method)
            pools.append(scope_components(rec, configuration))
        components = np.concatenate(pools)
    else:
        _, rec = loss_and_grad(model, x, labels, configuration, grad_method)
        components = scope_components(rec, configuration)
    if components.size < 2:
        raise ValueError(f"need at least 2 gradient components, got {components.size}")
    return float(np.var(components))


def trainability(variance: float) -> float:
    """-log10 of the gradient variance; lower values train more easily."""
    if variance <= 0.0:
        raise DegenerateVarianceError(f"variance must be positive, got {variance}")
    return float(-np.log10(variance))


def validation_accuracy(model: HybridModel, features: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of argmax-correct predictions (ties go to the lowest class)."""
    labels = np.asarray(labels)
    if len(labels) == 0:
        raise ValueError("empty validation set")
    logits, _ = forward_batch(model, np.asarray(features, dtype=float))
    return float(np.mean(np.argmax(logits, axis=1) == labels))
