"""Small fully connected regression net, written directly against numpy.

Four hidden linear layers with batch normalization and ReLU, one linear
output, mean-squared-error loss, Adam updates. Everything runs in float64 so
analytic gradients can be checked against central finite differences tightly.
Checkpoints are a single JSON header line followed by the parameters as a
little-endian float32 blob.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

BN_EPS = 1e-5
BN_MOMENTUM = 0.1
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
CHECKPOINT_MAGIC = "valuemlp-checkpoint"


def _he_init(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0


class ValueMLP:
    """in_dim -> [hidden + BN + ReLU] * depth -> 1."""

    def __init__(self, in_dim: int, hidden: int = 128, depth: int = 4, seed: int = 0):
        self.in_dim = in_dim
        self.hidden = hidden
        self.depth = depth
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.params: dict[str, np.ndarray] = {}
        self.running: dict[str, np.ndarray] = {}
        sizes = [in_dim] + [hidden] * depth
        for i in range(depth):
            self.params[f"W{i}"] = _he_init(rng, sizes[i], sizes[i + 1])
            self.params[f"b{i}"] = np.zeros(sizes[i + 1])
            self.params[f"gamma{i}"] = np.ones(sizes[i + 1])
            self.params[f"beta{i}"] = np.zeros(sizes[i + 1])
            self.running[f"mean{i}"] = np.zeros(sizes[i + 1])
            self.running[f"var{i}"] = np.ones(sizes[i + 1])
        self.params["Wout"] = _he_init(rng, hidden, 1)
        self.params["bout"] = np.zeros(1)
        self.adam = AdamState()

    # ---------------------------------------------------------------- forward

    def forward(self, x: np.ndarray, training: bool) -> tuple[np.ndarray, dict]:
        """Returns predictions (N,) and the cache needed for backward.

        Training mode normalizes with batch statistics and records the
        statistics in the cache; running statistics are only changed by
        ``commit_batch_stats``.
        """
        cache: dict = {"x": x, "training": training, "layers": []}
        h = x
        for i in range(self.depth):
            z = h @ self.params[f"W{i}"] + self.params[f"b{i}"]
            if training:
                mu = z.mean(axis=0)
                var = z.var(axis=0)
            else:
                mu = self.running[f"mean{i}"]
                var = self.running[f"var{i}"]
            xhat = (z - mu) / np.sqrt(var + BN_EPS)
            bn = self.params[f"gamma{i}"] * xhat + self.params[f"beta{i}"]
            a = np.maximum(bn, 0.0)
            cache["layers"].append(
                {"h_in": h, "z": z, "mu": mu, "var": var, "xhat": xhat, "a": a}
            )
            h = a
        y = (h @ self.params["Wout"] + self.params["bout"]).ravel()
        cache["h_last"] = h
        return y, cache

    def predict(self, x: np.ndarray) -> np.ndarray:
        y, _ = self.forward(np.atleast_2d(x), training=False)
        return y

    def commit_batch_stats(self, cache: dict) -> None:
        for i, layer in enumerate(cache["layers"]):
            self.running[f"mean{i}"] *= 1.0 - BN_MOMENTUM
            self.running[f"mean{i}"] += BN_MOMENTUM * layer["mu"]
            self.running[f"var{i}"] *= 1.0 - BN_MOMENTUM
            self.running[f"var{i}"] += BN_MOMENTUM * layer["var"]

    # --------------------------------------------------------------- backward

    def loss(self, x: np.ndarray, target: np.ndarray, training: bool = True):
        y, cache = self.forward(x, training)
        diff = y - target
        return float(np.mean(diff**2)), y, cache

    def loss_and_grads(
        self, x: np.ndarray, target: np.ndarray
    ) -> tuple[float, dict[str, np.ndarray], dict]:
        n = x.shape[0]
        loss, y, cache = self.loss(x, target, training=True)
        grads: dict[str, np.ndarray] = {}
        dy = (2.0 / n) * (y - target)
        h_last = cache["h_last"]
        grads["Wout"] = h_last.T @ dy[:, None]
        grads["bout"] = np.array([dy.sum()])
        dh = dy[:, None] @ self.params["Wout"].T
        for i in reversed(range(self.depth)):
            layer = cache["layers"][i]
            da = dh * (layer["a"] > 0.0)
            grads[f"gamma{i}"] = (da * layer["xhat"]).sum(axis=0)
            grads[f"beta{i}"] = da.sum(axis=0)
            dxhat = da * self.params[f"gamma{i}"]
            inv = 1.0 / np.sqrt(layer["var"] + BN_EPS)
            dz = inv * (
                dxhat
                - dxhat.mean(axis=0)
                - layer["xhat"] * (dxhat * layer["xhat"]).mean(axis=0)
            )
            grads[f"W{i}"] = layer["h_in"].T @ dz
            grads[f"b{i}"] = dz.sum(axis=0)
            dh = dz @ self.params[f"W{i}"].T
        return loss, grads, cache

    def adam_step(self, grads: dict[str, np.ndarray], lr: float = 1e-3) -> None:
        st = self.adam
        st.t += 1
        for name, g in grads.items():
            if name not in st.m:
                st.m[name] = np.zeros_like(g)
                st.v[name] = np.zeros_like(g)
            st.m[name] = ADAM_BETA1 * st.m[name] + (1 - ADAM_BETA1) * g
            st.v[name] = ADAM_BETA2 * st.v[name] + (1 - ADAM_BETA2) * g * g
            mhat = st.m[name] / (1 - ADAM_BETA1**st.t)
            vhat = st.v[name] / (1 - ADAM_BETA2**st.t)
            self.params[name] -= lr * mhat / (np.sqrt(vhat) + ADAM_EPS)

    def train_step(self, x: np.ndarray, target: np.ndarray, lr: float = 1e-3) -> float:
        loss, grads, cache = self.loss_and_grads(x, target)
        self.commit_batch_stats(cache)
        self.adam_step(grads, lr)
        return loss

    # ------------------------------------------------------- flat param views

    def param_names(self) -> list[str]:
        return sorted(self.params)

    def get_flat(self) -> np.ndarray:
        return np.concatenate([self.params[k].ravel() for k in self.param_names()])

    def set_flat(self, flat: np.ndarray) -> None:
        pos = 0
        for k in self.param_names():
            size = self.params[k].size
            self.params[k] = flat[pos : pos + size].reshape(self.params[k].shape).copy()
            pos += size
        if pos != flat.size:
            raise ValueError("flat parameter vector has the wrong length")

    def grads_flat(self, grads: dict[str, np.ndarray]) -> np.ndarray:
        return np.concatenate([grads[k].ravel() for k in self.param_names()])

    # ------------------------------------------------------------ persistence

    def save(self, path: str) -> None:
        header = {
            "magic": CHECKPOINT_MAGIC,
            "in_dim": self.in_dim,
            "hidden": self.hidden,
            "depth": self.depth,
            "seed": self.seed,
            "params": [
                [k, list(self.params[k].shape)] for k in self.param_names()
            ],
            "running": [
                [k, list(self.running[k].shape)] for k in sorted(self.running)
            ],
        }
        blob = np.concatenate(
            [self.params[k].ravel() for k in self.param_names()]
            + [self.running[k].ravel() for k in sorted(self.running)]
        ).astype("<f4")
        with open(path, "wb") as f:
            f.write(json.dumps(header, separators=(",", ":")).encode() + b"\n")
            f.write(blob.tobytes())

    @classmethod
    def load(cls, path: str) -> "ValueMLP":
        with open(path, "rb") as f:
            header = json.loads(f.readline().decode())
            blob = np.frombuffer(f.read(), dtype="<f4").astype(np.float64)
        if header.get("magic") != CHECKPOINT_MAGIC:
            raise ValueError(f"{path} is not a value-net checkpoint")
        net = cls(header["in_dim"], header["hidden"], header["depth"], header["seed"])
        pos = 0
        for k, shape in header["params"]:
            size = int(np.prod(shape)) if shape else 1
            net.params[k] = blob[pos : pos + size].reshape(shape).copy()
            pos += size
        for k, shape in header["running"]:
            size = int(np.prod(shape)) if shape else 1
            net.running[k] = blob[pos : pos + size].reshape(shape).copy()
            pos += size
        if pos != blob.size:
            raise ValueError("checkpoint blob length mismatch")
        return net


def gradient_check(
    net: ValueMLP,
    x: np.ndarray,
    target: np.ndarray,
    samples_per_tensor: int = 12,
    seed: int = 0,
    h_scale: float = 1e-6,
    skip_below: float = 1e-8,
) -> float:
    """Maximum relative error between analytic and central-difference grads.

    Probes a random subset of coordinates in every parameter tensor (weights,
    biases and both batch-norm parameters of every layer).
    """
    rng = np.random.default_rng(seed)
    _, grads, _ = net.loss_and_grads(x, target)
    analytic = net.grads_flat(grads)
    flat = net.get_flat()
    offsets = {}
    pos = 0
    for k in net.param_names():
        offsets[k] = pos
        pos += net.params[k].size
    worst = 0.0
    for k in net.param_names():
        size = net.params[k].size
        take = min(samples_per_tensor, size)
        for j in rng.choice(size, size=take, replace=False):
            idx = offsets[k] + int(j)
            h = h_scale * (1.0 + abs(flat[idx]))
            bumped = flat.copy()
            bumped[idx] = flat[idx] + h
            net.set_flat(bumped)
            up, _, _ = net.loss(x, target, training=True)
            bumped[idx] = flat[idx] - h
            net.set_flat(bumped)
            down, _, _ = net.loss(x, target, training=True)
            numeric = (up - down) / (2 * h)
            denom = max(abs(analytic[idx]), abs(numeric))
            if denom < skip_below:
                continue
            worst = max(worst, abs(analytic[idx] - numeric) / denom)
    net.set_flat(flat)
    return worst
