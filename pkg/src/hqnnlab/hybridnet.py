"""Hybrid models: quantum circuit forward passes and end-to-end gradients.

Three model shapes share one code path:

    pure   the 2 input features are encoded on qubits 0 and 1 (zero angles
           elsewhere) and the logits are the first two Z expectations
    dense  linear(2 -> n) -> pi*tanh -> circuit -> linear(n -> classes)
    conv   conv -> act -> [pool] -> conv -> act -> [pool] -> flatten
           -> linear(-> n) -> pi*tanh -> circuit -> linear(n -> classes)

Quantum parameters are indexed layer-major: theta[l*n + q] drives the
rotation on qubit q in layer l.  Encoding angles are scaled to (-pi, pi)
by pi*tanh so the full rotation range is reachable.

Gradients of circuit angles come from the exact shift rule,
grad_k = (C(theta + pi/2 e_k) - C(theta - pi/2 e_k)) / 2, implemented in
`quantum_param_grad` / `quantum_input_grad` (2 circuit evaluations per
parameter).  `quantum_adjoint_grads` computes the same values with a
single forward/backward sweep over the gate list and is the default fast
path inside `loss_and_grad`; the test suite pins the two methods to each
other at 1e-10.  Classical layers are differentiated analytically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .archspace import (
    CircuitArchitecture,
    HybridGenome,
    arch_from_json,
    arch_to_json,
    entanglement_pairs,
    genome_from_json,
    genome_to_json,
)
from .qsim import all_z_expectations, entangle, pauli_inner, rotate, z_sign_matrix, ROTATION_GENERATOR

TWO_PI = 2.0 * np.pi


# --------------------------------------------------------------------------
# circuit construction
# --------------------------------------------------------------------------

@lru_cache(maxsize=512)
def circuit_ops(arch: CircuitArchitecture) -> tuple:
    """Flat gate list: ("enc", q) | ("rot", q, k) | ("ent", c, t)."""
    ops: list[tuple] = [("enc", q) for q in range(arch.n_qubits)]
    for layer in range(arch.depth):
        for q in range(arch.n_qubits):
            ops.append(("rot", q, layer * arch.n_qubits + q))
        if arch.n_qubits >= 2:
            for c, t in entanglement_pairs(arch.topology, arch.n_qubits, layer):
                ops.append(("ent", c, t))
    return tuple(ops)


def run_circuit(arch: CircuitArchitecture, theta: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Simulate the circuit for a batch of encoding angles.

    ``angles`` has shape (B, n); returns statevectors of shape (B, 2**n).
    """
    n = arch.n_qubits
    batch = angles.shape[0]
    psi = np.zeros((batch, 1 << n), dtype=np.complex128)
    psi[:, 0] = 1.0
    for op in circuit_ops(arch):
        if op[0] == "enc":
            rotate(psi, arch.encoding_axis, op[1], angles[:, op[1]], n)
        elif op[0] == "rot":
            rotate(psi, arch.rotation_axes[op[1]], op[1], theta[op[2]], n)
        else:
            entangle(psi, arch.entangling_gate, op[1], op[2], n)
    return psi


def quantum_forward(arch: CircuitArchitecture, theta: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Per-qubit Z expectations of the encoded circuit, shape (n,)."""
    theta = np.asarray(theta, dtype=float)
    angles = np.asarray(angles, dtype=float)
    _check_shapes(arch, theta, angles)
    psi = run_circuit(arch, theta, angles[None, :])
    return all_z_expectations(psi, arch.n_qubits)[0]


def _check_shapes(arch: CircuitArchitecture, theta: np.ndarray, angles: np.ndarray) -> None:
    if theta.shape != (arch.n_params,):
        raise ValueError(f"theta has shape {theta.shape}, expected ({arch.n_params},)")
    if angles.shape[-1] != arch.n_qubits:
        raise ValueError(f"angles last dim {angles.shape[-1]} != n_qubits {arch.n_qubits}")


# --------------------------------------------------------------------------
# quantum gradients: shift rule and adjoint sweep
# --------------------------------------------------------------------------

def quantum_param_grad(
    arch: CircuitArchitecture,
    theta: np.ndarray,
    angles: np.ndarray,
    upstream: np.ndarray,
) -> np.ndarray:
    """Shift-rule gradient of sum_q upstream_q <Z_q> w.r.t. every theta_k."""
    theta = np.asarray(theta, dtype=float)
    angles = np.asarray(angles, dtype=float)
    upstream = np.asarray(upstream, dtype=float)
    _check_shapes(arch, theta, angles)
    if upstream.shape != (arch.n_qubits,):
        raise ValueError(f"upstream has shape {upstream.shape}, expected ({arch.n_qubits},)")
    grad = np.zeros(arch.n_params)
    for k in range(arch.n_params):
        shifted = theta.copy()
        shifted[k] = theta[k] + np.pi / 2
        z_plus = quantum_forward(arch, shifted, angles)
        shifted[k] = theta[k] - np.pi / 2
        z_minus = quantum_forward(arch, shifted, angles)
        grad[k] = upstream @ (z_plus - z_minus) / 2.0
    return grad


def quantum_input_grad(
    arch: CircuitArchitecture,
    theta: np.ndarray,
    angles: np.ndarray,
    upstream: np.ndarray,
) -> np.ndarray:
    """Shift-rule gradient w.r.t. the encoding angles, shape (n,)."""
    theta = np.asarray(theta, dtype=float)
    angles = np.asarray(angles, dtype=float)
    upstream = np.asarray(upstream, dtype=float)
    _check_shapes(arch, theta, angles)
    grad = np.zeros(arch.n_qubits)
    for q in range(arch.n_qubits):
        shifted = angles.copy()
        shifted[q] = angles[q] + np.pi / 2
        z_plus = quantum_forward(arch, theta, shifted)
        shifted[q] = angles[q] - np.pi / 2
        z_minus = quantum_forward(arch, theta, shifted)
        grad[q] = upstream @ (z_plus - z_minus) / 2.0
    return grad


def quantum_adjoint_grads(
    arch: CircuitArchitecture,
    theta: np.ndarray,
    angles: np.ndarray,
    upstream: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact angle gradients via one reverse sweep over the gate list.

    ``angles`` and ``upstream`` have shape (B, n).  Returns
    (theta_grad summed over the batch, per-sample encoding-angle grads of
    shape (B, n)).  For each batch row the cost is sum_q upstream_q <Z_q>.

    Uses the standard statevector adjoint recursion: with |psi_k> the state
    after gate k and |lam_k> = G_{k+1}^T... O |psi_N>, the derivative for a
    rotation G = exp(-i t P / 2) is Im(<lam_k| P |psi_k>).
    """
    n = arch.n_qubits
    psi = run_circuit(arch, theta, angles)
    # O = sum_q upstream_q Z_q is diagonal, so lam = O psi is an
    # elementwise product with the per-sample readout sign weights
    lam = psi * (upstream @ z_sign_matrix(n))

    theta_grad = np.zeros(arch.n_params)
    angle_grads = np.zeros_like(angles, dtype=float)
    for op in reversed(circuit_ops(arch)):
        if op[0] == "ent":
            # CNOT and CZ are self-inverse
            entangle(psi, arch.entangling_gate, op[1], op[2], n)
            entangle(lam, arch.entangling_gate, op[1], op[2], n)
        elif op[0] == "rot":
            q, k = op[1], op[2]
            gen = ROTATION_GENERATOR[arch.rotation_axes[q]]
            theta_grad[k] = pauli_inner(lam, psi, gen, q, n).imag.sum()
            rotate(psi, arch.rotation_axes[q], q, -theta[k], n)
            rotate(lam, arch.rotation_axes[q], q, -theta[k], n)
        else:
            q = op[1]
            gen = ROTATION_GENERATOR[arch.encoding_axis]
            angle_grads[:, q] = pauli_inner(lam, psi, gen, q, n).imag
            rotate(psi, arch.encoding_axis, q, -angles[:, q], n)
            rotate(lam, arch.encoding_axis, q, -angles[:, q], n)
    return theta_grad, angle_grads


# --------------------------------------------------------------------------
# classical layers
# --------------------------------------------------------------------------

def _activation(kind: str, x: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "silu":
        return x / (1.0 + np.exp(-x))
    if kind == "tanh":
        return np.tanh(x)
    raise ValueError(f"unknown activation {kind!r}")


def _activation_grad(kind: str, x: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return (x > 0.0).astype(float)
    if kind == "silu":
        s = 1.0 / (1.0 + np.exp(-x))
        return s * (1.0 + x * (1.0 - s))
    if kind == "tanh":
        t = np.tanh(x)
        return 1.0 - t * t
    raise ValueError(f"unknown activation {kind!r}")


def conv2d_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Stride-1 same-padding cross-correlation, x (B,Cin,H,W) -> (B,Cout,H,W)."""
    k = kernel.shape[2]
    pad = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(2, 3))
    return np.einsum("bchwij,ocij->bohw", windows, kernel) + bias[None, :, None, None]


def conv2d_backward(
    x: np.ndarray, kernel: np.ndarray, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (dkernel, dbias, dx) for `conv2d_forward`."""
    k = kernel.shape[2]
    pad = k // 2
    h, w = x.shape[2], x.shape[3]
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(2, 3))
    dkernel = np.einsum("bchwij,bohw->ocij", windows, grad_out)
    dbias = grad_out.sum(axis=(0, 2, 3))
    dxp = np.zeros_like(xp)
    for i in range(k):
        for j in range(k):
            dxp[:, :, i : i + h, j : j + w] += np.einsum(
                "bohw,oc->bchw", grad_out, kernel[:, :, i, j]
            )
    return dkernel, dbias, dxp[:, :, pad : pad + h, pad : pad + w]


def maxpool2_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """2x2 max pool with stride 2 (odd trailing row/col dropped).

    Returns (pooled, argmax indices in [0,4) per output cell).
    """
    b, c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    blocks = (
        x[:, :, : 2 * h2, : 2 * w2]
        .reshape(b, c, h2, 2, w2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(b, c, h2, w2, 4)
    )
    idx = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]
    return out, idx


def maxpool2_backward(grad_out: np.ndarray, idx: np.ndarray, in_shape: tuple) -> np.ndarray:
    b, c, h, w = in_shape
    h2, w2 = h // 2, w // 2
    dblocks = np.zeros((b, c, h2, w2, 4))
    np.put_along_axis(dblocks, idx[..., None], grad_out[..., None], axis=-1)
    dx = np.zeros(in_shape)
    dx[:, :, : 2 * h2, : 2 * w2] = (
        dblocks.reshape(b, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, 2 * h2, 2 * w2)
    )
    return dx


# --------------------------------------------------------------------------
# model definition
# --------------------------------------------------------------------------

@dataclass
class DensePreprocessor:
    weight: np.ndarray  # (n, in_features)
    bias: np.ndarray  # (n,)


@dataclass
class ConvLayerParams:
    kernel: np.ndarray  # (out, in, k, k)
    bias: np.ndarray  # (out,)
    pool: bool


@dataclass
class ConvStack:
    conv1: ConvLayerParams
    conv2: ConvLayerParams
    activation: str
    proj_weight: np.ndarray  # (n, flat)
    proj_bias: np.ndarray  # (n,)


@dataclass
class LinearHead:
    weight: np.ndarray  # (classes, n)
    bias: np.ndarray  # (classes,)


@dataclass
class HybridModel:
    arch: CircuitArchitecture
    theta: np.ndarray
    preprocessor: DensePreprocessor | ConvStack | None = None
    head: LinearHead | None = None
    genome: HybridGenome | None = None
    image_shape: tuple[int, int] | None = None
    init_seed: int | None = None

    @property
    def mode(self) -> str:
        if self.preprocessor is None:
            return "pure"
        if isinstance(self.preprocessor, DensePreprocessor):
            return "dense"
        return "conv"

    def phi_arrays(self) -> list[np.ndarray]:
        """Classical parameter arrays in canonical (flattening) order."""
        arrays: list[np.ndarray] = []
        pre = self.preprocessor
        if isinstance(pre, DensePreprocessor):
            arrays += [pre.weight, pre.bias]
        elif isinstance(pre, ConvStack):
            arrays += [
                pre.conv1.kernel,
                pre.conv1.bias,
                pre.conv2.kernel,
                pre.conv2.bias,
                pre.proj_weight,
                pre.proj_bias,
            ]
        if self.head is not None:
            arrays += [self.head.weight, self.head.bias]
        return arrays

    @property
    def n_phi(self) -> int:
        return sum(a.size for a in self.phi_arrays())

    def flat_phi(self) -> np.ndarray:
        arrays = self.phi_arrays()
        if not arrays:
            return np.zeros(0)
        return np.concatenate([a.ravel() for a in arrays])

    def set_flat_phi(self, flat: np.ndarray) -> None:
        offset = 0
        for a in self.phi_arrays():
            a.ravel()[:] = flat[offset : offset + a.size]
            offset += a.size
        if offset != flat.size:
            raise ValueError(f"flat phi has {flat.size} entries, expected {offset}")

    def copy(self) -> "HybridModel":
        import copy as _copy

        return _copy.deepcopy(self)


@dataclass
class ForwardTrace:
    """Cached per-layer intermediates, enough to run the backward pass."""

    x: np.ndarray
    angles: np.ndarray
    z: np.ndarray
    logits: np.ndarray
    pre_u: np.ndarray | None = None  # pre-tanh projection activations
    conv_cache: dict = field(default_factory=dict)


def _uniform_init(rng: np.random.Generator, shape: tuple, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def build_pure_model(arch: CircuitArchitecture, rng: np.random.Generator) -> HybridModel:
    if arch.n_qubits < 2:
        raise ValueError("pure mode reads Z on qubits 0 and 1; need n_qubits >= 2")
    theta = rng.uniform(0.0, TWO_PI, size=arch.n_params)
    return HybridModel(arch=arch, theta=theta)


def build_dense_model(
    arch: CircuitArchitecture,
    rng: np.random.Generator,
    n_classes: int = 2,
    in_features: int = 2,
) -> HybridModel:
    n = arch.n_qubits
    theta = rng.uniform(0.0, TWO_PI, size=arch.n_params)
    pre = DensePreprocessor(
        weight=_uniform_init(rng, (n, in_features), in_features),
        bias=_uniform_init(rng, (n,), in_features),
    )
    head = LinearHead(
        weight=_uniform_init(rng, (n_classes, n), n),
        bias=_uniform_init(rng, (n_classes,), n),
    )
    return HybridModel(arch=arch, theta=theta, preprocessor=pre, head=head)


def conv_output_shape(genome: HybridGenome, image_shape: tuple[int, int]) -> tuple[int, int, int]:
    h, w = image_shape
    if genome.conv1.pool:
        h, w = h // 2, w // 2
    if genome.conv2.pool:
        h, w = h // 2, w // 2
    if h < 1 or w < 1:
        raise ValueError(f"image {image_shape} too small for the pooling choices")
    return genome.conv2.channels, h, w


def build_conv_model(
    genome: HybridGenome,
    image_shape: tuple[int, int],
    rng: np.random.Generator,
    n_classes: int = 10,
) -> HybridModel:
    arch = genome.quantum
    n = arch.n_qubits
    theta = rng.uniform(0.0, TWO_PI, size=arch.n_params)
    c1, c2 = genome.conv1, genome.conv2
    conv1 = ConvLayerParams(
        kernel=_uniform_init(rng, (c1.channels, 1, c1.kernel, c1.kernel), c1.kernel**2),
        bias=_uniform_init(rng, (c1.channels,), c1.kernel**2),
        pool=c1.pool,
    )
    fan2 = c1.channels * c2.kernel**2
    conv2 = ConvLayerParams(
        kernel=_uniform_init(rng, (c2.channels, c1.channels, c2.kernel, c2.kernel), fan2),
        bias=_uniform_init(rng, (c2.channels,), fan2),
        pool=c2.pool,
    )
    flat = int(np.prod(conv_output_shape(genome, image_shape)))
    stack = ConvStack(
        conv1=conv1,
        conv2=conv2,
        activation=genome.activation,
        proj_weight=_uniform_init(rng, (n, flat), flat),
        proj_bias=_uniform_init(rng, (n,), flat),
    )
    head = LinearHead(
        weight=_uniform_init(rng, (n_classes, n), n),
        bias=_uniform_init(rng, (n_classes,), n),
    )
    return HybridModel(
        arch=arch, theta=theta, preprocessor=stack, head=head,
        genome=genome, image_shape=tuple(image_shape),
    )


# --------------------------------------------------------------------------
# forward passes
# --------------------------------------------------------------------------

def pure_encoding(x: np.ndarray, n_qubits: int) -> np.ndarray:
    """Raw 2-feature inputs on qubits 0 and 1, zero angles elsewhere."""
    x = np.atleast_2d(x)
    angles = np.zeros((x.shape[0], n_qubits))
    angles[:, :2] = x[:, :2]
    return angles


def _conv_stack_forward(stack: ConvStack, x: np.ndarray, cache: dict | None = None) -> np.ndarray:
    """x (B,H,W) -> pre-tanh projection (B,n); optionally fills a cache."""
    h = x[:, None, :, :]
    store = cache is not None
    if store:
        cache["x4"] = h
    pre1 = conv2d_forward(h, stack.conv1.kernel, stack.conv1.bias)
    act1 = _activation(stack.activation, pre1)
    if store:
        cache["pre1"], cache["act1"] = pre1, act1
    h = act1
    if stack.conv1.pool:
        h, idx1 = maxpool2_forward(h)
        if store:
            cache["idx1"], cache["pool1_in_shape"] = idx1, act1.shape
    if store:
        cache["conv2_in"] = h
    pre2 = conv2d_forward(h, stack.conv2.kernel, stack.conv2.bias)
    act2 = _activation(stack.activation, pre2)
    if store:
        cache["pre2"], cache["act2"] = pre2, act2
    h = act2
    if stack.conv2.pool:
        h, idx2 = maxpool2_forward(h)
        if store:
            cache["idx2"], cache["pool2_in_shape"] = idx2, act2.shape
    flat = h.reshape(h.shape[0], -1)
    if store:
        cache["flat"], cache["pooled_shape"] = flat, h.shape
    return flat @ stack.proj_weight.T + stack.proj_bias


def encode_angles(model: HybridModel, x: np.ndarray, cache: dict | None = None) -> tuple:
    """Encoding angles (B, n) for a batch, plus the pre-tanh activations."""
    n = model.arch.n_qubits
    if model.preprocessor is None:
        return pure_encoding(x, n), None
    if isinstance(model.preprocessor, DensePreprocessor):
        pre = np.atleast_2d(x) @ model.preprocessor.weight.T + model.preprocessor.bias
    else:
        pre = _conv_stack_forward(model.preprocessor, np.asarray(x), cache)
    return np.pi * np.tanh(pre), pre


def forward_batch(model: HybridModel, x: np.ndarray) -> tuple[np.ndarray, ForwardTrace]:
    """Logits (B, classes) and the trace needed for the backward pass."""
    x = np.asarray(x, dtype=float)
    conv_cache: dict = {}
    angles, pre_u = encode_angles(model, x, conv_cache)
    psi = run_circuit(model.arch, model.theta, angles)
    z = all_z_expectations(psi, model.arch.n_qubits)
    if model.head is None:
        logits = z[:, :2]
    else:
        logits = z @ model.head.weight.T + model.head.bias
    return logits, ForwardTrace(x=x, angles=angles, z=z, logits=logits, pre_u=pre_u, conv_cache=conv_cache)


def forward(model: HybridModel, x: np.ndarray) -> tuple[np.ndarray, ForwardTrace]:
    """Single-sample forward: returns (logits (classes,), trace)."""
    xb = np.asarray(x, dtype=float)[None, ...]
    logits, trace = forward_batch(model, xb)
    return logits[0], trace


# --------------------------------------------------------------------------
# loss and gradients
# --------------------------------------------------------------------------

@dataclass
class GradientRecord:
    """Flat batch-mean loss gradients, split by parameter scope."""

    theta_grads: np.ndarray
    phi_grads: np.ndarray | None = None


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample loss and softmax probabilities, log-sum-exp stabilised."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    expv = np.exp(shifted)
    total = expv.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(total)
    losses = -log_probs[np.arange(len(labels)), labels]
    return losses, expv / total


def batch_loss(model: HybridModel, x: np.ndarray, labels: np.ndarray) -> float:
    logits, _ = forward_batch(model, x)
    losses, _ = softmax_cross_entropy(logits, np.asarray(labels))
    return float(losses.mean())


def loss_and_grad(
    model: HybridModel,
    x: np.ndarray,
    labels: np.ndarray,
    configuration: str,
    grad_method: str = "adjoint",
) -> tuple[float, GradientRecord]:
    """Mean cross-entropy over the batch plus gradients for the configuration.

    Under "hybrid_quantum_only" the classical layers run in the forward pass
    and in the chain rule to theta, but no classical gradient entries are
    produced.  Under "pure_pqc" the model has no classical layers at all.
    """
    labels = np.asarray(labels)
    if len(labels) == 0:
        raise ValueError("empty batch")
    n_classes = 2 if model.head is None else model.head.bias.shape[0]
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError(f"labels outside [0, {n_classes})")
    _check_configuration(model, configuration)

    batch = len(labels)
    logits, trace = forward_batch(model, x)
    losses, probs = softmax_cross_entropy(logits, labels)
    g_logits = probs.copy()
    g_logits[np.arange(batch), labels] -= 1.0
    g_logits /= batch

    head_grads: list[np.ndarray] = []
    if model.head is None:
        dz = np.zeros_like(trace.z)
        dz[:, :2] = g_logits
    else:
        dz = g_logits @ model.head.weight
        head_grads = [g_logits.T @ trace.z, g_logits.sum(axis=0)]

    want_phi = configuration == "hybrid_full"
    if grad_method == "adjoint":
        theta_grad, dangles = quantum_adjoint_grads(model.arch, model.theta, trace.angles, dz)
    elif grad_method == "shift":
        theta_grad = np.zeros(model.arch.n_params)
        dangles = np.zeros_like(trace.angles)
        for b in range(batch):
            theta_grad += quantum_param_grad(model.arch, model.theta, trace.angles[b], dz[b])
            if want_phi:
                dangles[b] = quantum_input_grad(model.arch, model.theta, trace.angles[b], dz[b])
    else:
        raise ValueError(f"unknown grad_method {grad_method!r}")

    if not want_phi:
        return float(losses.mean()), GradientRecord(theta_grads=theta_grad)

    phi_parts = _classical_backward(model, trace, dangles) + head_grads
    return float(losses.mean()), GradientRecord(
        theta_grads=theta_grad,
        phi_grads=np.concatenate([g.ravel() for g in phi_parts]) if phi_parts else np.zeros(0),
    )


def _classical_backward(model: HybridModel, trace: ForwardTrace, dangles: np.ndarray) -> list[np.ndarray]:
    """Gradients for the preprocessor arrays, in `phi_arrays` order."""
    pre = model.preprocessor
    if pre is None:
        return []
    # angles = pi * tanh(u)
    du = dangles * np.pi * (1.0 - np.tanh(trace.pre_u) ** 2)
    if isinstance(pre, DensePreprocessor):
        return [du.T @ trace.x, du.sum(axis=0)]

    cache = trace.conv_cache
    dproj_w = du.T @ cache["flat"]
    dproj_b = du.sum(axis=0)
    dflat = du @ pre.proj_weight
    dh = dflat.reshape(cache["pooled_shape"])
    if pre.conv2.pool:
        dh = maxpool2_backward(dh, cache["idx2"], cache["pool2_in_shape"])
    dpre2 = dh * _activation_grad(pre.activation, cache["pre2"])
    dk2, db2, dh = conv2d_backward(cache["conv2_in"], pre.conv2.kernel, dpre2)
    if pre.conv1.pool:
        dh = maxpool2_backward(dh, cache["idx1"], cache["pool1_in_shape"])
    dpre1 = dh * _activation_grad(pre.activation, cache["pre1"])
    dk1, db1, _ = conv2d_backward(cache["x4"], pre.conv1.kernel, dpre1)
    return [dk1, db1, dk2, db2, dproj_w, dproj_b]


def _check_configuration(model: HybridModel, configuration: str) -> None:
    if configuration == "pure_pqc":
        if model.preprocessor is not None or model.head is not None:
            raise ValueError("pure_pqc requires a model without classical layers")
    elif configuration in ("hybrid_full", "hybrid_quantum_only"):
        if model.preprocessor is None or model.head is None:
            raise ValueError(f"{configuration} requires classical pre- and post-processing layers")
    else:
        raise ValueError(f"unknown configuration {configuration!r}")


# --------------------------------------------------------------------------
# checkpoints
# --------------------------------------------------------------------------

def model_to_json(model: HybridModel) -> dict:
    obj = {
        "mode": model.mode,
        "arch": arch_to_json(model.arch),
        "theta": model.theta.tolist(),
        "phi": model.flat_phi().tolist(),
        "init_seed": model.init_seed,
    }
    if model.head is not None:
        obj["n_classes"] = int(model.head.bias.shape[0])
    if model.mode == "conv":
        obj["genome"] = genome_to_json(model.genome)
        obj["image_shape"] = list(model.image_shape)
    return obj


def model_from_json(obj: dict) -> HybridModel:
    arch = arch_from_json(obj["arch"])
    rng = np.random.default_rng(0)  # placeholder values, overwritten below
    if obj["mode"] == "pure":
        model = build_pure_model(arch, rng)
    elif obj["mode"] == "dense":
        model = build_dense_model(arch, rng, n_classes=obj.get("n_classes", 2))
    else:
        genome = genome_from_json(obj["genome"])
        model = build_conv_model(
            genome, tuple(obj["image_shape"]), rng, n_classes=obj.get("n_classes", 10)
        )
    model.theta = np.asarray(obj["theta"], dtype=float)
    flat = np.asarray(obj["phi"], dtype=float)
    if flat.size:
        model.set_flat_phi(flat)
    model.init_seed = obj.get("init_seed")
    return model
