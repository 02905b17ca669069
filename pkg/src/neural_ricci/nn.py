"""Minimal feedforward engine: dense / conv / average-pool layers, traced
forward passes, reverse-mode gradients, and seeded SGD training.

All curvature-facing math runs in float64. Layer outputs are flat vectors;
convolutional feature maps use C-order (channel, row, col) flattening so the
neuron ordering matches the unrolled sparse linear maps in `unroll_conv`.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NumericOverflowError, TrainingError

ACTIVATIONS = ("relu", "tanh")


# ---------------------------------------------------------------------------
# layer / model specs
# ---------------------------------------------------------------------------

@dataclass
class LayerSpec:
    """One layer: dense, conv2d, or avgpool2d (a fixed linear map, no params).

    weight: dense (out, in); conv2d (c_out, c_in, kh, kw); avgpool2d None.
    in_shape: (c, h, w) for conv2d/avgpool2d, None for dense.
    """

    kind: str
    weight: np.ndarray | None = None
    bias: np.ndarray | None = None
    stride: int = 1
    in_shape: tuple[int, int, int] | None = None
    pool: int = 2

    def __post_init__(self):
        if self.kind not in ("dense", "conv2d", "avgpool2d"):
            raise InvalidInputError(f"unknown layer kind {self.kind!r}")
        if self.weight is not None:
            self.weight = np.asarray(self.weight, dtype=np.float64)
        if self.bias is not None:
            self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.kind in ("conv2d", "avgpool2d"):
            if self.in_shape is None:
                raise InvalidInputError(f"{self.kind} layer needs in_shape")
            self.in_shape = tuple(int(v) for v in self.in_shape)

    # -- geometry -----------------------------------------------------------

    @property
    def out_shape(self) -> tuple[int, int, int] | None:
        if self.kind == "conv2d":
            c_out, _, kh, kw = self.weight.shape
            _, h, w = self.in_shape
            oh = (h - kh) // self.stride + 1
            ow = (w - kw) // self.stride + 1
            return (c_out, oh, ow)
        if self.kind == "avgpool2d":
            c, h, w = self.in_shape
            k = self.pool
            return (c, (h - k) // k + 1, (w - k) // k + 1)
        return None

    @property
    def in_size(self) -> int:
        if self.kind == "dense":
            return self.weight.shape[1]
        c, h, w = self.in_shape
        return c * h * w

    @property
    def out_size(self) -> int:
        if self.kind == "dense":
            return self.weight.shape[0]
        c, h, w = self.out_shape
        return c * h * w

    @property
    def n_weight_params(self) -> int:
        return 0 if self.weight is None else self.weight.size

    @property
    def trainable(self) -> bool:
        return self.kind != "avgpool2d"

    def validate(self):
        if self.kind == "dense":
            if self.weight.ndim != 2:
                raise InvalidInputError("dense weight must be 2-D")
            if self.bias.shape != (self.weight.shape[0],):
                raise InvalidInputError("dense bias shape mismatch")
        elif self.kind == "conv2d":
            if self.weight.ndim != 4:
                raise InvalidInputError("conv2d kernel must be 4-D")
            if self.weight.shape[1] != self.in_shape[0]:
                raise InvalidInputError("conv2d in-channel mismatch")
            if self.bias.shape != (self.weight.shape[0],):
                raise InvalidInputError("conv2d bias shape mismatch")
            _, oh, ow = self.out_shape
            if oh < 1 or ow < 1:
                raise InvalidInputError("conv2d geometry yields empty output")
        else:
            _, oh, ow = self.out_shape
            if oh < 1 or ow < 1:
                raise InvalidInputError("avgpool2d geometry yields empty output")
        for arr in (self.weight, self.bias):
            if arr is not None and not np.all(np.isfinite(arr)):
                raise InvalidInputError("layer parameters must be finite")

    def copy(self) -> "LayerSpec":
        return LayerSpec(
            kind=self.kind,
            weight=None if self.weight is None else self.weight.copy(),
            bias=None if self.bias is None else self.bias.copy(),
            stride=self.stride,
            in_shape=self.in_shape,
            pool=self.pool,
        )


@dataclass
class ModelSpec:
    """A layered feedforward classifier. Hidden layers 1..L-1 are followed by
    the model activation; the final layer emits raw logits."""

    layers: list[LayerSpec]
    activation: str
    input_dims: int
    output_dims: int
    seed: int | None = None

    def validate(self):
        if self.activation not in ACTIVATIONS:
            raise InvalidInputError(f"activation must be one of {ACTIVATIONS}")
        if not self.layers:
            raise InvalidInputError("model needs at least one layer")
        size = self.input_dims
        for i, layer in enumerate(self.layers):
            layer.validate()
            if layer.in_size != size:
                raise InvalidInputError(
                    f"layer {i} expects {layer.in_size} inputs, got {size}")
            size = layer.out_size
        if size != self.output_dims:
            raise InvalidInputError(
                f"final layer emits {size} values, output_dims={self.output_dims}")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.input_dims] + [l.out_size for l in self.layers]

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    # -- global weight-parameter ids (biases are never ranked or pruned) -----

    @property
    def param_offsets(self) -> list[int]:
        offs, total = [], 0
        for layer in self.layers:
            offs.append(total)
            total += layer.n_weight_params
        return offs

    @property
    def n_weight_params(self) -> int:
        return sum(l.n_weight_params for l in self.layers)

    def weights_flat(self) -> np.ndarray:
        parts = [l.weight.ravel() for l in self.layers if l.weight is not None]
        return np.concatenate(parts) if parts else np.zeros(0)

    def with_weights_flat(self, flat: np.ndarray) -> "ModelSpec":
        """New model with all weight parameters replaced from a flat vector."""
        if flat.shape != (self.n_weight_params,):
            raise InvalidInputError("flat weight vector has wrong length")
        out = self.copy()
        pos = 0
        for layer in out.layers:
            if layer.weight is None:
                continue
            n = layer.weight.size
            layer.weight = flat[pos:pos + n].reshape(layer.weight.shape).copy()
            pos += n
        return out

    def copy(self) -> "ModelSpec":
        return ModelSpec(
            layers=[l.copy() for l in self.layers],
            activation=self.activation,
            input_dims=self.input_dims,
            output_dims=self.output_dims,
            seed=self.seed,
        )

    def model_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.activation.encode())
        h.update(str(self.layer_sizes).encode())
        for layer in self.layers:
            h.update(layer.kind.encode())
            if layer.weight is not None:
                h.update(np.ascontiguousarray(layer.weight).tobytes())
                h.update(np.ascontiguousarray(layer.bias).tobytes())
        return h.hexdigest()


@dataclass
class ActivationTrace:
    """Per-layer logits and activations for one example; layer 0 is the raw
    input. For the output layer the activation equals the logits."""

    input: np.ndarray
    logits: list[np.ndarray]
    activations: list[np.ndarray]

    def layer_activations(self, layer: int) -> np.ndarray:
        """Activations of graph layer `layer` (0 = input)."""
        return self.input if layer == 0 else self.activations[layer - 1]

    def layer_logits(self, layer: int) -> np.ndarray:
        """Logits of graph layer `layer` (layer >= 1)."""
        if layer == 0:
            raise InvalidInputError("input layer has no logits")
        return self.logits[layer - 1]


@dataclass
class GradientSet:
    """Gradients of a scalar loss, shaped like the model parameters
    (None entries for parameter-free layers)."""

    weights: list[np.ndarray | None]
    biases: list[np.ndarray | None]


# ---------------------------------------------------------------------------
# layer application (batched, X is (N, in_size))
# ---------------------------------------------------------------------------

def _conv_gather_idx(layer: LayerSpec) -> np.ndarray:
    """(oh*ow, c_in*kh*kw) indices into the flat input for im2col."""
    c_in, h, w = layer.in_shape
    _, _, kh, kw = layer.weight.shape
    _, oh, ow = layer.out_shape
    s = layer.stride
    oy, ox = np.meshgrid(np.arange(oh), np.arange(ow), indexing="ij")
    ic, ky, kx = np.meshgrid(np.arange(c_in), np.arange(kh), np.arange(kw),
                             indexing="ij")
    rows = (oy * s)[:, :, None, None, None] + ky[None, None]
    cols = (ox * s)[:, :, None, None, None] + kx[None, None]
    chan = np.broadcast_to(ic[None, None], rows.shape)
    idx = chan * (h * w) + rows * w + cols
    return idx.reshape(oh * ow, c_in * kh * kw)


def _pool_gather_idx(layer: LayerSpec) -> np.ndarray:
    """(c*oh*ow, k*k) indices into the flat input for average pooling."""
    c, h, w = layer.in_shape
    k = layer.pool
    _, oh, ow = layer.out_shape
    ch, oy, ox = np.meshgrid(np.arange(c), np.arange(oh), np.arange(ow),
                             indexing="ij")
    ky, kx = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    rows = (oy * k)[..., None, None] + ky[None, None, None]
    cols = (ox * k)[..., None, None] + kx[None, None, None]
    chan = np.broadcast_to(ch[..., None, None], rows.shape)
    idx = chan * (h * w) + rows * w + cols
    return idx.reshape(c * oh * ow, k * k)


def _layer_apply(layer: LayerSpec, X: np.ndarray, cache: dict | None = None):
    """Linear map of one layer on a batch. If `cache` is given, stores what
    the backward pass needs."""
    if layer.kind == "dense":
        Z = X @ layer.weight.T + layer.bias
        if cache is not None:
            cache["x"] = X
        return Z
    if layer.kind == "conv2d":
        idx = _conv_gather_idx(layer)
        cols = X[:, idx]                                # (N, P, Q)
        kmat = layer.weight.reshape(layer.weight.shape[0], -1)
        out = cols @ kmat.T                             # (N, P, c_out)
        out = out.transpose(0, 2, 1) + layer.bias[None, :, None]
        if cache is not None:
            cache["cols"], cache["idx"] = cols, idx
        return out.reshape(X.shape[0], -1)
    # avgpool2d
    idx = _pool_gather_idx(layer)
    if cache is not None:
        cache["idx"] = idx
    return X[:, idx].mean(axis=2)


def _layer_backward(layer: LayerSpec, cache: dict, dZ: np.ndarray):
    """Returns (dX, dW, db) for one layer given upstream dZ (N, out_size)."""
    if layer.kind == "dense":
        X = cache["x"]
        dW = dZ.T @ X
        db = dZ.sum(axis=0)
        dX = dZ @ layer.weight
        return dX, dW, db
    if layer.kind == "conv2d":
        cols, idx = cache["cols"], cache["idx"]
        c_out = layer.weight.shape[0]
        N = dZ.shape[0]
        dout = dZ.reshape(N, c_out, -1)                 # (N, c_out, P)
        kmat = layer.weight.reshape(c_out, -1)
        dK = np.einsum("ncp,npq->cq", dout, cols).reshape(layer.weight.shape)
        db = dout.sum(axis=(0, 2))
        dcols = np.einsum("ncp,cq->npq", dout, kmat)
        dX = np.zeros((N, layer.in_size))
        np.add.at(dX, (np.arange(N)[:, None, None], idx[None]), dcols)
        return dX, dK, db
    idx = cache["idx"]
    k2 = layer.pool * layer.pool
    N = dZ.shape[0]
    dX = np.zeros((N, layer.in_size))
    contrib = np.repeat(dZ[:, :, None] / k2, k2, axis=2)
    np.add.at(dX, (np.arange(N)[:, None, None], idx[None]), contrib)
    return dX, None, None


def _activate(act: str, Z: np.ndarray) -> np.ndarray:
    return np.maximum(Z, 0.0) if act == "relu" else np.tanh(Z)


def _activate_grad(act: str, Z: np.ndarray) -> np.ndarray:
    if act == "relu":
        return (Z > 0).astype(np.float64)
    t = np.tanh(Z)
    return 1.0 - t * t


# ---------------------------------------------------------------------------
# forward passes
# ---------------------------------------------------------------------------

def forward(model: ModelSpec, x: np.ndarray) -> tuple[np.ndarray, ActivationTrace]:
    """Run one example through the model, recording every logit/activation.

    Raises InvalidInputError on shape mismatch and NumericOverflowError if
    any intermediate is non-finite.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape != (model.input_dims,):
        raise InvalidInputError(
            f"input has {x.size} entries, model expects {model.input_dims}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("input contains non-finite values")
    logits, acts = [], []
    a = x[None, :]
    L = model.n_layers
    for i, layer in enumerate(model.layers):
        z = _layer_apply(layer, a)
        if not np.all(np.isfinite(z)):
            raise NumericOverflowError(f"non-finite logits at layer {i + 1}")
        a = _activate(model.activation, z) if i < L - 1 else z
        logits.append(z[0].copy())
        acts.append(a[0].copy())
    trace = ActivationTrace(input=x.copy(), logits=logits, activations=acts)
    return logits[-1].copy(), trace


def forward_batch(model: ModelSpec, X: np.ndarray) -> np.ndarray:
    """Batched logits, no trace. X is (N, input_dims)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.input_dims:
        raise InvalidInputError("batch shape mismatch")
    a = X
    L = model.n_layers
    for i, layer in enumerate(model.layers):
        z = _layer_apply(layer, a)
        a = _activate(model.activation, z) if i < L - 1 else z
    return a


def predict(model: ModelSpec, X: np.ndarray) -> np.ndarray:
    return np.argmax(forward_batch(model, X), axis=1)


def accuracy(model: ModelSpec, X: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(predict(model, X) == np.asarray(y)))


# ---------------------------------------------------------------------------
# loss and gradients
# ---------------------------------------------------------------------------

def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean softmax cross-entropy over a batch."""
    z = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    return float(np.mean(lse - z[np.arange(len(labels)), labels]))


def grad_loss(model: ModelSpec, X: np.ndarray, y: np.ndarray
              ) -> tuple[float, GradientSet]:
    """Mean cross-entropy over the batch and its gradient for every parameter."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) == 0:
        raise InvalidInputError("batch must be non-empty and 2-D")
    if y.shape != (len(X),):
        raise InvalidInputError("labels must match batch size")
    if y.min() < 0 or y.max() >= model.output_dims:
        raise InvalidInputError("label out of range")

    L = model.n_layers
    caches, zs = [], []
    a = X
    for i, layer in enumerate(model.layers):
        cache = {}
        z = _layer_apply(layer, a, cache)
        caches.append(cache)
        zs.append(z)
        a = _activate(model.activation, z) if i < L - 1 else z

    loss = cross_entropy(a, y)
    N = len(X)
    d = _softmax(a)
    d[np.arange(N), y] -= 1.0
    d /= N

    dWs: list[np.ndarray | None] = [None] * L
    dbs: list[np.ndarray | None] = [None] * L
    for i in range(L - 1, -1, -1):
        if i < L - 1:
            d = d * _activate_grad(model.activation, zs[i])
        dX, dW, db = _layer_backward(model.layers[i], caches[i], d)
        dWs[i], dbs[i] = dW, db
        d = dX
    return loss, GradientSet(weights=dWs, biases=dbs)


def grad_logit_sum(model: ModelSpec, X: np.ndarray
                   ) -> tuple[float, GradientSet]:
    """Sum of all final-layer logits over the batch and its gradient.

    Backs the data-free saliency pass: callers run it on an absolute-value
    copy of the model with an all-ones input.
    """
    X = np.asarray(X, dtype=np.float64)
    L = model.n_layers
    caches, zs = [], []
    a = X
    for i, layer in enumerate(model.layers):
        cache = {}
        z = _layer_apply(layer, a, cache)
        caches.append(cache)
        zs.append(z)
        a = _activate(model.activation, z) if i < L - 1 else z
    value = float(a.sum())
    d = np.ones_like(a)
    dWs: list[np.ndarray | None] = [None] * L
    dbs: list[np.ndarray | None] = [None] * L
    for i in range(L - 1, -1, -1):
        if i < L - 1:
            d = d * _activate_grad(model.activation, zs[i])
        dX, dW, db = _layer_backward(model.layers[i], caches[i], d)
        dWs[i], dbs[i] = dW, db
        d = dX
    return value, GradientSet(weights=dWs, biases=dbs)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    lr: float = 0.1
    epochs: int = 10
    batch_size: int = 64
    weight_decay: float = 0.0
    seed: int = 0


@dataclass
class TrainResult:
    model: ModelSpec
    epoch_losses: list[float] = field(default_factory=list)


def train_sgd(model: ModelSpec, X: np.ndarray, y: np.ndarray,
              config: TrainConfig) -> TrainResult:
    """Minibatch SGD on mean cross-entropy (+ L2 weight decay on weights).

    Deterministic given config.seed. Raises TrainingError (with the epoch)
    if the loss goes non-finite.
    """
    if config.weight_decay < 0:
        raise InvalidInputError("weight decay must be >= 0")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    m = model.copy()
    rng = np.random.default_rng(config.seed)
    n = len(X)
    losses = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total, batches = 0.0, 0
        for start in range(0, n, config.batch_size):
            sel = order[start:start + config.batch_size]
            loss, grads = grad_loss(m, X[sel], y[sel])
            if not np.isfinite(loss):
                raise TrainingError(
                    f"training diverged at epoch {epoch}", epoch=epoch)
            total += loss
            batches += 1
            for layer, dW, db in zip(m.layers, grads.weights, grads.biases):
                if dW is None:
                    continue
                step = dW if config.weight_decay == 0.0 else \
                    dW + config.weight_decay * layer.weight
                layer.weight = layer.weight - config.lr * step
                layer.bias = layer.bias - config.lr * db
        losses.append(total / max(batches, 1))
    return TrainResult(model=m, epoch_losses=losses)


# ---------------------------------------------------------------------------
# convolution unrolling
# ---------------------------------------------------------------------------

@dataclass
class UnrolledMap:
    """A sparse linear map equivalent to a conv/pool layer. Each nonzero entry
    is annotated with the kernel parameter index it replicates (-1 for fixed
    coefficients)."""

    in_size: int
    out_size: int
    out_idx: np.ndarray
    in_idx: np.ndarray
    values: np.ndarray
    param_idx: np.ndarray

    def to_dense(self) -> np.ndarray:
        M = np.zeros((self.out_size, self.in_size))
        M[self.out_idx, self.in_idx] = self.values
        return M

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        X = x[None, :] if single else x
        out = np.zeros((X.shape[0], self.out_size))
        np.add.at(out, (slice(None), self.out_idx),
                  X[:, self.in_idx] * self.values)
        return out[0] if single else out


def unroll_conv(layer: LayerSpec, in_shape: tuple[int, int, int] | None = None
                ) -> UnrolledMap:
    """Unroll a conv2d layer into its equivalent sparse linear map.

    Every kernel parameter appears once per output spatial position; the
    annotation maps each sparse entry back to the flat kernel index.
    """
    if layer.kind != "conv2d":
        raise InvalidInputError("unroll_conv expects a conv2d layer")
    if in_shape is not None and tuple(in_shape) != layer.in_shape:
        raise InvalidInputError("in_shape disagrees with layer geometry")
    c_in, h, w = layer.in_shape
    c_out, _, kh, kw = layer.weight.shape
    _, oh, ow = layer.out_shape
    if oh < 1 or ow < 1:
        raise InvalidInputError("conv2d geometry yields empty output")
    s = layer.stride
    oc, oy, ox, ic, ky, kx = np.meshgrid(
        np.arange(c_out), np.arange(oh), np.arange(ow),
        np.arange(c_in), np.arange(kh), np.arange(kw), indexing="ij")
    out_idx = (oc * oh + oy) * ow + ox
    in_idx = ic * (h * w) + (oy * s + ky) * w + (ox * s + kx)
    param_idx = ((oc * c_in + ic) * kh + ky) * kw + kx
    values = layer.weight[oc, ic, ky, kx]
    return UnrolledMap(
        in_size=c_in * h * w, out_size=c_out * oh * ow,
        out_idx=out_idx.ravel().astype(np.int64),
        in_idx=in_idx.ravel().astype(np.int64),
        values=values.ravel().astype(np.float64),
        param_idx=param_idx.ravel().astype(np.int64))


def unroll_pool(layer: LayerSpec) -> UnrolledMap:
    """Average pooling as a fixed sparse linear map (param_idx = -1)."""
    if layer.kind != "avgpool2d":
        raise InvalidInputError("unroll_pool expects an avgpool2d layer")
    c, h, w = layer.in_shape
    k = layer.pool
    _, oh, ow = layer.out_shape
    ch, oy, ox, ky, kx = np.meshgrid(
        np.arange(c), np.arange(oh), np.arange(ow),
        np.arange(k), np.arange(k), indexing="ij")
    out_idx = (ch * oh + oy) * ow + ox
    in_idx = ch * (h * w) + (oy * k + ky) * w + (ox * k + kx)
    n = out_idx.size
    return UnrolledMap(
        in_size=c * h * w, out_size=c * oh * ow,
        out_idx=out_idx.ravel().astype(np.int64),
        in_idx=in_idx.ravel().astype(np.int64),
        values=np.full(n, 1.0 / (k * k)),
        param_idx=np.full(n, -1, dtype=np.int64))


# ---------------------------------------------------------------------------
# architecture builders
# ---------------------------------------------------------------------------

def _he_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


def build_mlp(sizes=(784, 128, 64, 10), activation="relu", seed=0) -> ModelSpec:
    """Dense MLP with He-style uniform init and zero biases."""
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        layers.append(LayerSpec(
            kind="dense",
            weight=_he_uniform(rng, (fan_out, fan_in), fan_in),
            bias=np.zeros(fan_out)))
    model = ModelSpec(layers=layers, activation=activation,
                      input_dims=sizes[0], output_dims=sizes[-1], seed=seed)
    model.validate()
    return model


def build_lenet(activation="relu", seed=0, in_shape=(1, 28, 28)) -> ModelSpec:
    """LeNet-lite: conv 8@5x5 -> pool -> conv 16@5x5 -> pool -> dense 64 ->
    dense 10. Pooling is stride-2 averaging (a fixed linear map)."""
    rng = np.random.default_rng(seed)
    c, h, w = in_shape
    layers = []

    k1 = _he_uniform(rng, (8, c, 5, 5), c * 25)
    conv1 = LayerSpec(kind="conv2d", weight=k1, bias=np.zeros(8),
                      stride=1, in_shape=in_shape)
    layers.append(conv1)
    pool1 = LayerSpec(kind="avgpool2d", in_shape=conv1.out_shape, pool=2)
    layers.append(pool1)

    k2 = _he_uniform(rng, (16, 8, 5, 5), 8 * 25)
    conv2 = LayerSpec(kind="conv2d", weight=k2, bias=np.zeros(16),
                      stride=1, in_shape=pool1.out_shape)
    layers.append(conv2)
    pool2 = LayerSpec(kind="avgpool2d", in_shape=conv2.out_shape, pool=2)
    layers.append(pool2)

    flat = pool2.out_size
    layers.append(LayerSpec(kind="dense",
                            weight=_he_uniform(rng, (64, flat), flat),
                            bias=np.zeros(64)))
    layers.append(LayerSpec(kind="dense",
                            weight=_he_uniform(rng, (10, 64), 64),
                            bias=np.zeros(10)))
    model = ModelSpec(layers=layers, activation=activation,
                      input_dims=c * h * w, output_dims=10, seed=seed)
    model.validate()
    return model
