"""Seeded mini-batch Adam training under the three configurations.

Configurations decide which parameters move:

    pure_pqc             circuit-only model, circuit angles trained
    hybrid_full          classical and quantum parameters trained jointly
    hybrid_quantum_only  classical layers run in the forward pass but stay
                         bit-for-bit frozen; only circuit angles move

Training never mutates the caller's model; the record carries the trained
copy.  Identical (seed, config, dataset) reproduce identical histories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import LabeledDataset
from .hybridnet import GradientRecord, HybridModel, loss_and_grad
from .metrics import validation_accuracy

CONFIGURATIONS = ("pure_pqc", "hybrid_full", "hybrid_quantum_only")
CONFIGURATION_IDS = {1: "pure_pqc", 2: "hybrid_full", 3: "hybrid_quantum_only"}


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0


def init_adam(n_params: int) -> AdamState:
    return AdamState(m=np.zeros(n_params), v=np.zeros(n_params))


def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; returns fresh parameters."""
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ValueError(
            f"shape mismatch: params {params.shape}, grads {grads.shape}, state {state.m.shape}"
        )
    state.t += 1
    state.m = beta1 * state.m + (1.0 - beta1) * grads
    state.v = beta2 * state.v + (1.0 - beta2) * grads**2
    m_hat = state.m / (1.0 - beta1**state.t)
    v_hat = state.v / (1.0 - beta2**state.t)
    return params - lr * m_hat / (np.sqrt(v_hat) + eps), state


@dataclass
class TrainConfig:
    configuration: str
    learning_rate: float = 0.01
    epochs: int = 15
    batch_size: int = 32
    seed: int = 0
    grad_method: str = "adjoint"

    def __post_init__(self):
        if self.configuration not in CONFIGURATIONS:
            raise ValueError(f"configuration must be one of {CONFIGURATIONS}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0.0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")


@dataclass
class TrainingRecord:
    loss_history: list[float]
    val_accuracy_history: list[float]
    model: HybridModel
    gradient_snapshots: list[GradientRecord] = field(default_factory=list)

    def to_json_lines(self) -> str:
        """One JSON record per epoch."""
        lines = []
        for epoch, (loss, acc) in enumerate(zip(self.loss_history, self.val_accuracy_history)):
            lines.append(json.dumps({"epoch": epoch, "loss": loss, "val_accuracy": acc}, sort_keys=True))
        return "\n".join(lines) + "\n"


def _assemble_grad(record: GradientRecord, configuration: str) -> np.ndarray:
    if configuration == "hybrid_full":
        return np.concatenate([record.theta_grads, record.phi_grads])
    return record.theta_grads


def _read_params(model: HybridModel, configuration: str) -> np.ndarray:
    if configuration == "hybrid_full":
        return np.concatenate([model.theta, model.flat_phi()])
    return model.theta.copy()


def _write_params(model: HybridModel, configuration: str, flat: np.ndarray) -> None:
    p = model.theta.size
    model.theta = flat[:p].copy()
    if configuration == "hybrid_full":
        model.set_flat_phi(flat[p:])


def train(model: HybridModel, dataset: LabeledDataset, config: TrainConfig) -> TrainingRecord:
    """Mini-batch Adam over the train split; per-epoch loss and accuracy."""
    if config.configuration == "pure_pqc":
        if model.preprocessor is not None or model.head is not None:
            raise ValueError("pure_pqc training needs a model without classical layers")
    elif model.preprocessor is None or model.head is None:
        raise ValueError(f"{config.configuration} training needs a hybrid model")

    model = model.copy()
    rng = np.random.default_rng(config.seed)
    params = _read_params(model, config.configuration)
    state = init_adam(params.size)
    x_train, y_train = dataset.train_features, dataset.train_labels
    n_train = len(y_train)

    loss_history: list[float] = []
    acc_history: list[float] = []
    snapshots: list[GradientRecord] = []
    for _ in range(config.epochs):
        order = rng.permutation(n_train)
        loss_sum = 0.0
        record = None
        for start in range(0, n_train, config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, record = loss_and_grad(
                model, x_train[batch], y_train[batch], config.configuration, config.grad_method
            )
            params, state = adam_step(
                params, _assemble_grad(record, config.configuration), state, config.learning_rate
            )
            _write_params(model, config.configuration, params)
            loss_sum += loss * len(batch)
        loss_history.append(loss_sum / n_train)
        acc_history.append(validation_accuracy(model, dataset.val_features, dataset.val_labels))
        snapshots.append(record)
    return TrainingRecord(loss_history, acc_history, model, snapshots)
