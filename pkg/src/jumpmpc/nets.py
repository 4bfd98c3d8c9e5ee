"""Small fully-connected Tanh networks with reverse-mode gradients.

Three networks make up a residual model: an acceleration-offset net and a
force-gain net for the contact phase, and an acceleration-offset net for
the flight phase. All take the same 7-vector input

    [p_x, p_z, phi, r1_x, r1_z, r2_x, r2_z]

(body pose plus foot positions relative to the CoM; velocities are
deliberately not inputs). Offset nets emit 3 values, the gain net emits 12
values reshaped row-major to a 3x4 matrix that multiplies the 4-vector of
foot forces.

Everything here is plain numpy so gradients stay exact, deterministic and
cheap to verify against finite differences. Weights are stored (out, in);
batched evaluation works on (n, in) arrays.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

RESIDUAL_INPUT_DIM = 7
H_OUTPUT_DIM = 3
G_OUTPUT_DIM = 12

MAGIC = b"JMPM1\n"


@dataclass(frozen=True)
class MlpSpec:
    """Layer sizes, input first; Tanh on hidden layers, linear output."""

    layer_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2 or any(s <= 0 for s in sizes):
            raise ValueError(f"need >= 2 positive layer sizes, got {sizes}")

    @property
    def n_in(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_out(self) -> int:
        return self.layer_sizes[-1]


@dataclass
class MlpParams:
    spec: MlpSpec
    weights: list[np.ndarray]  # weights[i]: (layer_sizes[i+1], layer_sizes[i])
    biases: list[np.ndarray]

    def copy(self) -> "MlpParams":
        return MlpParams(self.spec, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def scale(self, factor: float) -> None:
        for w in self.weights:
            w *= factor
        for b in self.biases:
            b *= factor


def init_params(spec: MlpSpec, seed: int) -> MlpParams:
    """Scaled-uniform fan-in initialization; biases zero; deterministic."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        bound = 1.0 / np.sqrt(n_in)
        weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    return MlpParams(spec, weights, biases)


def zero_params(spec: MlpSpec) -> MlpParams:
    weights = [np.zeros((o, i)) for i, o in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:])]
    biases = [np.zeros(o) for o in spec.layer_sizes[1:]]
    return MlpParams(spec, weights, biases)


def forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on a single input vector."""
    return forward_batch(params, np.asarray(x, float).reshape(1, -1))[0]


def forward_batch(params: MlpParams, inputs: np.ndarray) -> np.ndarray:
    """Evaluate a whole (n, n_in) batch in one set of BLAS calls."""
    X = np.asarray(inputs, float)
    if X.ndim == 1:
        raise ValueError("forward_batch expects a 2-D (n, n_in) array")
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    a = X
    last = len(params.weights) - 1
    for i, (W, b) in enumerate(zip(params.weights, params.biases)):
        a = a @ W.T + b
        if i != last:
            np.tanh(a, out=a)
    return a


def forward_batch_cached(params: MlpParams, inputs: np.ndarray):
    """Batched forward pass that keeps layer activations for backward."""
    X = np.asarray(inputs, float)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    acts = [X]
    a = X
    last = len(params.weights) - 1
    for i, (W, b) in enumerate(zip(params.weights, params.biases)):
        a = a @ W.T + b
        if i != last:
            np.tanh(a, out=a)
        acts.append(a)
    return a, acts


@dataclass
class MlpGrads:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @staticmethod
    def zeros_like(params: MlpParams) -> "MlpGrads":
        return MlpGrads([np.zeros_like(w) for w in params.weights],
                        [np.zeros_like(b) for b in params.biases])

    def add_(self, other: "MlpGrads") -> None:
        for a, b in zip(self.weights, other.weights):
            a += b
        for a, b in zip(self.biases, other.biases):
            a += b


def backward_batch(params: MlpParams, acts: list[np.ndarray], upstream: np.ndarray,
                   grads: MlpGrads | None = None):
    """Reverse-mode pass for a cached batched forward.

    Accumulates parameter gradients (summed over the batch) into `grads`
    and returns (grads, input_gradients) with input_gradients shaped like
    the input batch.
    """
    if grads is None:
        grads = MlpGrads.zeros_like(params)
    delta = np.asarray(upstream, float)
    last = len(params.weights) - 1
    for i in range(last, -1, -1):
        grads.weights[i] += delta.T @ acts[i]
        grads.biases[i] += delta.sum(axis=0)
        if i > 0:
            delta = delta @ params.weights[i]
            delta *= (1.0 - acts[i] * acts[i])  # tanh' via the activation
    input_grad = delta @ params.weights[0] if last >= 0 else delta
    return grads, input_grad


def backward(params: MlpParams, x: np.ndarray, upstream: np.ndarray):
    """Exact gradients of forward() w.r.t. parameters and the input."""
    _, acts = forward_batch_cached(params, np.asarray(x, float).reshape(1, -1))
    grads, dX = backward_batch(params, acts, np.asarray(upstream, float).reshape(1, -1))
    return grads, dX[0]


def reshape_G(flat: np.ndarray) -> np.ndarray:
    """Row-major 12-vector -> 3x4 force-gain matrix."""
    flat = np.asarray(flat, float)
    if flat.shape != (G_OUTPUT_DIM,):
        raise ValueError(f"expected a 12-vector, got shape {flat.shape}")
    return flat.reshape(3, 4)


def flatten_G(G: np.ndarray) -> np.ndarray:
    G = np.asarray(G, float)
    if G.shape != (3, 4):
        raise ValueError(f"expected a 3x4 matrix, got shape {G.shape}")
    return G.reshape(G_OUTPUT_DIM)


# default architectures for the three residual networks
H_CONTACT_SPEC = MlpSpec((7, 400, 400, 3))
G_CONTACT_SPEC = MlpSpec((7, 1000, 1000, 12))
H_FLIGHT_SPEC = MlpSpec((7, 400, 400, 3))


@dataclass
class ResidualModel:
    """Per-phase residual networks plus provenance metadata.

    The force-gain network exists for the contact phase only; during
    flight the commanded force is zero so a gain term would be inert.
    """

    h_contact: MlpParams
    G_contact: MlpParams
    h_flight: MlpParams
    fingerprint: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, p, nout in (("h_contact", self.h_contact, H_OUTPUT_DIM),
                              ("G_contact", self.G_contact, G_OUTPUT_DIM),
                              ("h_flight", self.h_flight, H_OUTPUT_DIM)):
            if p.spec.n_in != RESIDUAL_INPUT_DIM or p.spec.n_out != nout:
                raise ValueError(
                    f"{name} must map {RESIDUAL_INPUT_DIM} -> {nout}, got {p.spec.layer_sizes}")

    @staticmethod
    def initialized(seed: int,
                    h_contact_spec: MlpSpec = H_CONTACT_SPEC,
                    G_contact_spec: MlpSpec = G_CONTACT_SPEC,
                    h_flight_spec: MlpSpec = H_FLIGHT_SPEC) -> "ResidualModel":
        ss = np.random.SeedSequence(seed)
        s1, s2, s3 = (int(c.generate_state(1)[0]) for c in ss.spawn(3))
        return ResidualModel(init_params(h_contact_spec, s1),
                             init_params(G_contact_spec, s2),
                             init_params(h_flight_spec, s3))

    @staticmethod
    def zeros(h_contact_spec: MlpSpec = H_CONTACT_SPEC,
              G_contact_spec: MlpSpec = G_CONTACT_SPEC,
              h_flight_spec: MlpSpec = H_FLIGHT_SPEC) -> "ResidualModel":
        return ResidualModel(zero_params(h_contact_spec),
                             zero_params(G_contact_spec),
                             zero_params(h_flight_spec))

    def networks(self):
        return (("h_contact", self.h_contact), ("G_contact", self.G_contact),
                ("h_flight", self.h_flight))


def residual_input(x: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Network input from a state 7-vector and a foot 4-vector."""
    x = np.asarray(x, float)
    r = np.asarray(r, float)
    return np.concatenate([x[:3], r])


def residual_input_batch(X: np.ndarray, R: np.ndarray) -> np.ndarray:
    return np.concatenate([np.asarray(X, float)[:, :3], np.asarray(R, float)], axis=1)


def fingerprint_of(payload: dict) -> str:
    """Stable digest of a JSON-serializable training configuration."""
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def save_model(model: ResidualModel, path) -> None:
    """Write a self-describing binary model file.

    Layout: the magic line, an 8-byte big-endian header length, a JSON
    header (layer sizes per network, fingerprint, meta, and the array
    index in order), then the raw little-endian float64 bytes of every
    weight matrix (row-major) and bias vector in the indexed order. The
    format is deliberately timestamp-free so identical models produce
    byte-identical files.
    """
    header: dict = {
        "format": "jumpmpc-residual-model-v1",
        "fingerprint": model.fingerprint,
        "meta": model.meta,
        "networks": {},
        "arrays": [],
    }
    chunks = []
    for name, params in model.networks():
        header["networks"][name] = list(params.spec.layer_sizes)
        for i, (w, b) in enumerate(zip(params.weights, params.biases)):
            for kind, arr in (("W", w), ("b", b)):
                header["arrays"].append({"name": f"{name}/{kind}{i}", "shape": list(arr.shape)})
                chunks.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    head = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(len(head).to_bytes(8, "big"))
        f.write(head)
        for c in chunks:
            f.write(c)


def load_model(path) -> ResidualModel:
    with open(path, "rb") as f:
        if f.read(len(MAGIC)) != MAGIC:
            raise ValueError(f"{path}: not a jumpmpc model file")
        head_len = int.from_bytes(f.read(8), "big")
        header = json.loads(f.read(head_len).decode())
        arrays = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            n = int(np.prod(shape)) if shape else 1
            buf = f.read(8 * n)
            arrays[entry["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()

    def build(name):
        spec = MlpSpec(tuple(header["networks"][name]))
        n_layers = len(spec.layer_sizes) - 1
        weights = [arrays[f"{name}/W{i}"] for i in range(n_layers)]
        biases = [arrays[f"{name}/b{i}"] for i in range(n_layers)]
        return MlpParams(spec, weights, biases)

    return ResidualModel(build("h_contact"), build("G_contact"), build("h_flight"),
                         fingerprint=header.get("fingerprint", ""),
                         meta=header.get("meta", {}))
