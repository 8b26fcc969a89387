"""MLP construction for the six network roles, Adam, and persistence.

Layer stacks (N assets, historical length h, future length f, latent dim m;
LR = leaky-relu slope, DP = dropout rate):

* conditioner / encoder:  N*h -> 512 LR(0.2) -> 512 LR(0.2) -> DP(0.4) -> 16
* decoder:                16 -> 512 LR(0.2) -> 512 LR(0.2) -> DP(0.4) -> N*h
* simulator:              m+16 -> 128 -> 256 -> 512 -> 1024 (all LR(0.2))
                          -> N*f tanh
* hybrid_simulator:       the simulator stack followed by a fixed x100 output
                          scaling (the proposed-center regime shifts targets
                          outside tanh range)
* discriminator:          N*(h+f) -> 512 LR(0.2) -> 512 LR(0.2) -> DP(0.4)
                          -> 512 LR(0.2) -> 1
* proposer:               N*(h+1) -> 512 LR(0.2) -> 512 LR(0.2) -> DP(0.4)
                          -> N  (one surrogate mean per asset)

Weights initialize uniform in (-1/sqrt(fan_in), +1/sqrt(fan_in)), biases to
zero.  Dropout draws a fresh mask per forward in train mode and is the
identity at inference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import NumericFault, ValidationError

ROLES = ("conditioner", "encoder", "decoder", "simulator", "hybrid_simulator",
         "discriminator", "proposer")

LEAKY_SLOPE = 0.2
DROPOUT_RATE = 0.4
CODE_WIDTH = 16
HYBRID_OUTPUT_SCALE = 100.0

ARCHIVE_MAGIC = b"GFARCH1\n"
ARCHIVE_VERSION = 1


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # affine | leaky_relu | tanh | dropout | scale
    in_dim: int = 0
    out_dim: int = 0
    param: float = 0.0

    def __post_init__(self):
        if self.kind == "affine" and (self.in_dim <= 0 or self.out_dim <= 0):
            raise ValidationError(f"affine layer needs positive dims, got {self}")
        if self.kind == "dropout" and not 0.0 <= self.param < 1.0:
            raise ValidationError(f"dropout rate must be in [0,1), got {self.param}")
        if self.kind == "scale" and (not np.isfinite(self.param) or self.param == 0.0):
            raise ValidationError(f"scale factor must be finite and nonzero, got {self.param}")


class MlpNetwork:
    """A layer stack plus its affine parameters, ordered [W0, b0, W1, b1, ...]."""

    def __init__(self, role: str, layers: list[LayerSpec]):
        self.role = role
        self.layers = list(layers)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        previous_out = None
        for spec in self.layers:
            if spec.kind != "affine":
                continue
            if previous_out is not None and spec.in_dim != previous_out:
                raise ValidationError(
                    f"{role}: affine chain broken, {previous_out} -> {spec.in_dim}")
            previous_out = spec.out_dim
            self.weights.append(np.zeros((spec.out_dim, spec.in_dim)))
            self.biases.append(np.zeros(spec.out_dim))

    @property
    def input_width(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_width(self) -> int:
        for spec in reversed(self.layers):
            if spec.kind == "affine":
                return spec.out_dim
        raise ValidationError(f"{self.role}: no affine layer")

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def set_parameters(self, params) -> None:
        params = list(params)
        if len(params) != 2 * len(self.weights):
            raise ValidationError(
                f"{self.role}: expected {2 * len(self.weights)} parameter arrays, got {len(params)}")
        for i in range(len(self.weights)):
            w, b = params[2 * i], params[2 * i + 1]
            if w.shape != self.weights[i].shape or b.shape != self.biases[i].shape:
                raise ValidationError(f"{self.role}: parameter shape mismatch at affine {i}")
            self.weights[i] = np.asarray(w, dtype=np.float64)
            self.biases[i] = np.asarray(b, dtype=np.float64)

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def n_dropout_layers(self) -> int:
        return sum(1 for spec in self.layers if spec.kind == "dropout")


def _affine(i, o):
    return LayerSpec("affine", in_dim=i, out_dim=o)


def _leaky():
    return LayerSpec("leaky_relu", param=LEAKY_SLOPE)


def build_network(role: str, n_assets: int, h: int, f: int, m: int,
                  output_scale: float | None = None) -> MlpNetwork:
    """Build the layer stack for one role.

    ``output_scale`` only applies to simulator roles; it defaults to 1 for
    ``simulator`` and to 100 for ``hybrid_simulator``.
    """
    if min(n_assets, h, f, m) <= 0:
        raise ValidationError(f"dimensions must be positive, got N={n_assets} h={h} f={f} m={m}")
    drop = LayerSpec("dropout", param=DROPOUT_RATE)
    if role in ("conditioner", "encoder"):
        layers = [_affine(n_assets * h, 512), _leaky(),
                  _affine(512, 512), _leaky(), drop,
                  _affine(512, CODE_WIDTH)]
    elif role == "decoder":
        layers = [_affine(CODE_WIDTH, 512), _leaky(),
                  _affine(512, 512), _leaky(), drop,
                  _affine(512, n_assets * h)]
    elif role in ("simulator", "hybrid_simulator"):
        layers = [_affine(m + CODE_WIDTH, 128), _leaky(),
                  _affine(128, 256), _leaky(),
                  _affine(256, 512), _leaky(),
                  _affine(512, 1024), _leaky(),
                  _affine(1024, n_assets * f), LayerSpec("tanh")]
        if output_scale is None:
            output_scale = HYBRID_OUTPUT_SCALE if role == "hybrid_simulator" else 1.0
        if output_scale != 1.0:
            layers.append(LayerSpec("scale", param=float(output_scale)))
    elif role == "discriminator":
        layers = [_affine(n_assets * (h + f), 512), _leaky(),
                  _affine(512, 512), _leaky(), drop,
                  _affine(512, 512), _leaky(),
                  _affine(512, 1)]
    elif role == "proposer":
        layers = [_affine(n_assets * (h + 1), 512), _leaky(),
                  _affine(512, 512), _leaky(), drop,
                  _affine(512, n_assets)]
    else:
        raise ValidationError(f"unknown network role {role!r}; expected one of {ROLES}")
    return MlpNetwork(role, layers)


def init_parameters(net: MlpNetwork, rng: np.random.Generator) -> MlpNetwork:
    """Uniform fan-in weight init, zero biases; deterministic per rng state."""
    for i, spec in enumerate(s for s in net.layers if s.kind == "affine"):
        bound = 1.0 / np.sqrt(spec.in_dim)
        net.weights[i] = rng.uniform(-bound, bound, size=(spec.out_dim, spec.in_dim))
        net.biases[i] = np.zeros(spec.out_dim)
    return net


def sample_dropout_masks(net: MlpNetwork, rng: np.random.Generator,
                         batch: int | None = None) -> list[np.ndarray]:
    """Pre-sample one 0/1 keep-mask per dropout layer (frozen-mask forward)."""
    masks = []
    width = None
    for spec in net.layers:
        if spec.kind == "affine":
            width = spec.out_dim
        elif spec.kind == "dropout":
            shape = (width,) if batch is None else (batch, width)
            masks.append((rng.random(shape) >= spec.param).astype(np.float64))
    return masks


def forward(net: MlpNetwork, x, mode: str = "infer", rng: np.random.Generator | None = None,
            params: list[Tensor] | None = None,
            dropout_masks: list[np.ndarray] | None = None) -> Tensor:
    """Run the stack.

    ``params`` may supply the affine parameters as gradient-tracked tensors
    (ordered as :meth:`MlpNetwork.parameters`); otherwise the network's own
    arrays are used as constants.  In train mode dropout masks come from
    ``dropout_masks`` when given, else are sampled from ``rng``; in infer
    mode dropout is the identity.
    """
    if mode not in ("train", "infer"):
        raise ValidationError(f"mode must be 'train' or 'infer', got {mode!r}")
    out = ad.as_tensor(x)
    if out.shape[-1] != net.input_width:
        raise ValidationError(
            f"{net.role}: input width {out.shape[-1]} != expected {net.input_width}")
    if params is not None and len(params) != 2 * len(net.weights):
        raise ValidationError(f"{net.role}: wrong number of parameter tensors")

    affine_i = 0
    dropout_i = 0
    for spec in net.layers:
        if spec.kind == "affine":
            if params is None:
                w, b = Tensor(net.weights[affine_i]), Tensor(net.biases[affine_i])
            else:
                w, b = params[2 * affine_i], params[2 * affine_i + 1]
            out = ad.affine(out, w, b)
            affine_i += 1
        elif spec.kind == "leaky_relu":
            out = ad.leaky_relu(out, spec.param)
        elif spec.kind == "tanh":
            out = ad.tanh(out)
        elif spec.kind == "scale":
            out = ad.scalar_multiply(out, spec.param)
        elif spec.kind == "dropout":
            if mode == "infer":
                continue
            if dropout_masks is not None:
                mask = dropout_masks[dropout_i]
            elif rng is not None:
                mask = (rng.random(out.shape) >= spec.param).astype(np.float64)
            else:
                raise ValidationError("train-mode forward needs rng or dropout_masks")
            out = ad.dropout(out, spec.param, mask)
            dropout_i += 1
    return out


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    """Bias-corrected Adam accumulators for one parameter list."""

    lr: float = 2e-5
    beta1: float = 0.5
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: list[np.ndarray] = field(default_factory=list)
    second_moment: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_parameters(cls, params, lr: float = 2e-5, beta1: float = 0.5,
                       beta2: float = 0.999, epsilon: float = 1e-8) -> "AdamState":
        return cls(lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon,
                   first_moment=[np.zeros_like(p) for p in params],
                   second_moment=[np.zeros_like(p) for p in params])


def adam_step(params, grads, state: AdamState) -> tuple[list[np.ndarray], AdamState]:
    """One Adam update; aborts (raising) on any non-finite gradient."""
    params = list(params)
    grads = [g.values if isinstance(g, Tensor) else np.asarray(g, dtype=np.float64)
             for g in grads]
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ValidationError("adam_step: parameter/gradient/state length mismatch")
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise ValidationError(f"adam_step: shape mismatch at index {i}: {p.shape} vs {g.shape}")
        if not np.isfinite(g).all():
            raise NumericFault(f"adam_step: non-finite gradient at index {i} (shape {g.shape})")
    state.step_count += 1
    t = state.step_count
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    updated = []
    for i, (p, g) in enumerate(zip(params, grads)):
        m = state.first_moment[i]
        v = state.second_moment[i]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        denom = np.sqrt(v / c2)
        denom += state.epsilon
        step = m / c1
        step /= denom
        step *= state.lr
        updated.append(p - step)
    return updated, state


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_networks(path, components: dict[str, MlpNetwork], meta: dict) -> None:
    """Write named networks plus metadata to a flat binary archive.

    Layout (documented in docs/formats.md): magic, 8-byte little-endian
    header length, a sorted-key JSON header describing layers and array
    offsets, then contiguous little-endian float64 array data.  The encoding
    is fully deterministic, so identical contents give identical bytes.
    """
    header_entries = []
    blobs = []
    offset = 0
    for name in sorted(components):
        net = components[name]
        arrays = []
        for i, p in enumerate(net.parameters()):
            data = np.ascontiguousarray(p, dtype="<f8").tobytes()
            arrays.append({"index": i, "shape": list(p.shape), "offset": offset,
                           "nbytes": len(data)})
            blobs.append(data)
            offset += len(data)
        header_entries.append({
            "name": name,
            "role": net.role,
            "layers": [[s.kind, s.in_dim, s.out_dim, s.param] for s in net.layers],
            "arrays": arrays,
        })
    header = json.dumps({"version": ARCHIVE_VERSION, "meta": meta,
                         "components": header_entries},
                        sort_keys=True, separators=(",", ":")).encode()
    with Path(path).open("wb") as handle:
        handle.write(ARCHIVE_MAGIC)
        handle.write(len(header).to_bytes(8, "little"))
        handle.write(header)
        for blob in blobs:
            handle.write(blob)


def load_networks(path) -> tuple[dict[str, MlpNetwork], dict]:
    """Read an archive written by :func:`save_networks` (bit-exact round trip)."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"archive not found: {path}")
    raw = path.read_bytes()
    if raw[:len(ARCHIVE_MAGIC)] != ARCHIVE_MAGIC:
        raise ValidationError(f"{path}: not a ganfolio archive")
    cursor = len(ARCHIVE_MAGIC)
    header_len = int.from_bytes(raw[cursor:cursor + 8], "little")
    cursor += 8
    header = json.loads(raw[cursor:cursor + header_len])
    if header.get("version") != ARCHIVE_VERSION:
        raise ValidationError(f"{path}: unsupported archive version {header.get('version')}")
    data_start = cursor + header_len
    components = {}
    for entry in header["components"]:
        layers = [LayerSpec(kind, int(i), int(o), float(p))
                  for kind, i, o, p in entry["layers"]]
        net = MlpNetwork(entry["role"], layers)
        params = []
        for spec in entry["arrays"]:
            start = data_start + spec["offset"]
            arr = np.frombuffer(raw[start:start + spec["nbytes"]], dtype="<f8")
            params.append(arr.reshape(spec["shape"]).astype(np.float64))
        net.set_parameters(params)
        components[entry["name"]] = net
    return components, header["meta"]
