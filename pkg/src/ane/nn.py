"""Minimal dense-network kernel with hand-written backpropagation.

Everything runs in float64. Layers follow one protocol: ``forward(x, train,
update_running)`` caches whatever the matching ``backward(grad)`` needs and
``backward`` returns the gradient with respect to the layer input while
storing parameter gradients on the layer. Optimizer state lives outside the
layers so several objectives can update the same parameters independently.
"""

from __future__ import annotations

import numpy as np


class GradientError(RuntimeError):
    """Non-finite gradient encountered; training must abort."""


def sigmoid(x):
    """Logistic function, overflow-safe for arguments of any magnitude."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def log_sigmoid(x):
    """log(sigmoid(x)) computed as -softplus(-x); never overflows."""
    x = np.asarray(x, dtype=np.float64)
    return np.minimum(x, 0.0) - np.log1p(np.exp(-np.abs(x)))


def glorot_uniform(rng, out_dim, in_dim):
    limit = np.sqrt(6.0 / (in_dim + out_dim))
    return rng.uniform(-limit, limit, size=(out_dim, in_dim))


class DenseLayer:
    """Affine map x -> x W^T + b with weights of shape (out_dim, in_dim)."""

    def __init__(self, in_dim, out_dim, rng):
        self.weights = glorot_uniform(rng, out_dim, in_dim)
        self.bias = np.zeros(out_dim, dtype=np.float64)
        self.grad_weights = np.zeros_like(self.weights)
        self.grad_bias = np.zeros_like(self.bias)
        self._input = None

    def forward(self, x, train=True, update_running=True):
        if x.shape[1] != self.weights.shape[1]:
            raise ValueError(
                f"input dim {x.shape[1]} does not match layer in_dim {self.weights.shape[1]}"
            )
        self._input = x
        return x @ self.weights.T + self.bias

    def backward(self, grad):
        self.grad_weights = grad.T @ self._input
        self.grad_bias = grad.sum(axis=0)
        return grad @ self.weights

    def parameters(self):
        return [self.weights, self.bias]

    def gradients(self):
        return [self.grad_weights, self.grad_bias]

    def state_arrays(self):
        return {"weights": self.weights, "bias": self.bias}


class LeakyRelu:
    """y = x for x > 0 else slope * x."""

    def __init__(self, slope=0.2):
        self.slope = slope
        self._scale = None

    def forward(self, x, train=True, update_running=True):
        self._scale = np.where(x > 0, 1.0, self.slope)
        return x * self._scale

    def backward(self, grad):
        return grad * self._scale

    def parameters(self):
        return []

    def gradients(self):
        return []

    def state_arrays(self):
        return {}


class BatchNorm:
    """Per-feature batch normalization with learned scale and shift.

    Train mode normalizes by batch statistics (biased variance) and tracks an
    exponential moving average for inference; the backward pass differentiates
    through the batch statistics, not around them. ``update_running=False``
    keeps the running statistics untouched, which phases that must not modify
    a network rely on.

    ``eps`` only guards the variance-zero case. Everything here is float64,
    so it is kept tiny: normalized outputs then have variance within ~eps/var
    of 1 even for features whose batch variance drops to 1e-8.
    """

    def __init__(self, dim, momentum=0.9, eps=1e-12):
        self.gamma = np.ones(dim, dtype=np.float64)
        self.shift = np.zeros(dim, dtype=np.float64)
        self.running_mean = np.zeros(dim, dtype=np.float64)
        self.running_var = np.ones(dim, dtype=np.float64)
        self.momentum = momentum
        self.eps = eps
        self.grad_gamma = np.zeros_like(self.gamma)
        self.grad_shift = np.zeros_like(self.shift)
        self._norm = None
        self._inv_std = None
        # diagnostics from the most recent train-mode forward
        self.last_norm_mean_abs = 0.0
        self.last_norm_var_err = 0.0

    def forward(self, x, train=True, update_running=True):
        if train:
            if x.shape[0] < 2:
                raise ValueError("batch norm in train mode needs batch size >= 2")
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            inv_std = 1.0 / np.sqrt(var + self.eps)
            norm = (x - mean) * inv_std
            self._norm = norm
            self._inv_std = inv_std
            self.last_norm_mean_abs = float(np.abs(norm.mean(axis=0)).max())
            self.last_norm_var_err = float(np.abs(norm.var(axis=0) - 1.0).max())
            if update_running:
                m = self.momentum
                self.running_mean = m * self.running_mean + (1.0 - m) * mean
                self.running_var = m * self.running_var + (1.0 - m) * var
            return self.gamma * norm + self.shift
        norm = (x - self.running_mean) / np.sqrt(self.running_var + self.eps)
        return self.gamma * norm + self.shift

    def backward(self, grad):
        norm, inv_std = self._norm, self._inv_std
        b = grad.shape[0]
        self.grad_gamma = (grad * norm).sum(axis=0)
        self.grad_shift = grad.sum(axis=0)
        dnorm = grad * self.gamma
        return (inv_std / b) * (
            b * dnorm - dnorm.sum(axis=0) - norm * (dnorm * norm).sum(axis=0)
        )

    def parameters(self):
        return [self.gamma, self.shift]

    def gradients(self):
        return [self.grad_gamma, self.grad_shift]

    def state_arrays(self):
        return {
            "gamma": self.gamma,
            "shift": self.shift,
            "running_mean": self.running_mean,
            "running_var": self.running_var,
        }


class Mlp:
    """Ordered stack of layers sharing the forward/backward protocol."""

    def __init__(self, layers):
        self.layers = list(layers)

    def forward(self, x, train=True, update_running=True):
        out = np.asarray(x, dtype=np.float64)
        for layer in self.layers:
            out = layer.forward(out, train=train, update_running=update_running)
        return out

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]

    def gradients(self):
        return [g for layer in self.layers for g in layer.gradients()]

    def num_parameters(self):
        return sum(p.size for p in self.parameters())

    def state_arrays(self):
        out = {}
        for i, layer in enumerate(self.layers):
            for name, arr in layer.state_arrays().items():
                out[f"layer{i:02d}.{name}"] = arr
        return out

    def bn_layers(self):
        return [layer for layer in self.layers if isinstance(layer, BatchNorm)]


class RmsProp:
    """RMSProp over a fixed parameter list; one accumulator per array."""

    def __init__(self, params, lr=0.001, rho=0.9, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.rho = rho
        self.eps = eps
        self.acc = [np.zeros_like(p) for p in self.params]

    def step(self, grads):
        if len(grads) != len(self.params):
            raise ValueError(f"expected {len(self.params)} gradients, got {len(grads)}")
        for p, g, a in zip(self.params, grads, self.acc):
            if p.shape != g.shape:
                raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
            if not np.isfinite(g).all():
                raise GradientError(
                    f"non-finite gradient for parameter of shape {p.shape}; aborting"
                )
            a *= self.rho
            a += (1.0 - self.rho) * g * g
            p -= self.lr * g / np.sqrt(a + self.eps)


CHECKPOINT_FORMAT = "ane-mlp-v1"


def save_checkpoint(network, path):
    """Write all network state (parameters, batch-norm running statistics) to
    a shape-tagged binary file; the roundtrip is bit-exact."""
    np.savez(path, __format__=CHECKPOINT_FORMAT, **network.state_arrays())


def load_checkpoint(network, path):
    """Restore state saved by :func:`save_checkpoint` into ``network`` in place."""
    with np.load(path) as data:
        fmt = str(data["__format__"])
        if fmt != CHECKPOINT_FORMAT:
            raise ValueError(f"{path}: unsupported checkpoint format {fmt!r}")
        state = network.state_arrays()
        missing = set(state) - set(data.files)
        if missing:
            raise ValueError(f"{path}: checkpoint is missing arrays {sorted(missing)}")
        for name, arr in state.items():
            saved = data[name]
            if saved.shape != arr.shape:
                raise ValueError(
                    f"{path}: array {name} has shape {saved.shape}, expected {arr.shape}"
                )
            arr[...] = saved


def clip_global_norm(grads, max_norm):
    """Scale the gradient list in place so its global L2 norm is <= max_norm."""
    total = np.sqrt(sum(float((g * g).sum()) for g in grads))
    if total > max_norm and total > 0:
        scale = max_norm / total
        for g in grads:
            g *= scale
    return total


def gradient_check(networks, loss_fn, h=1e-5, atol=1e-7):
    """Worst relative error between analytic and central-difference gradients.

    ``networks`` is one Mlp or a sequence of them; ``loss_fn()`` must return
    the scalar loss for the current parameters and leave matching analytic
    gradients on the layers (so it runs forward and backward on a fixed
    batch, with ``update_running=False`` anywhere batch norm is involved).
    Entry pairs whose absolute difference is below ``atol`` count as exact,
    which keeps round-off noise on true-zero gradients from dominating.
    """
    if isinstance(networks, Mlp):
        networks = [networks]
    params = [p for net in networks for p in net.parameters()]

    loss_fn()
    analytic = [g.copy() for net in networks for g in net.gradients()]

    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.reshape(-1)
        aflat = a.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            plus = loss_fn()
            flat[k] = orig - h
            minus = loss_fn()
            flat[k] = orig
            numeric = (plus - minus) / (2.0 * h)
            diff = abs(numeric - aflat[k])
            if diff > atol:
                worst = max(worst, diff / max(abs(numeric), abs(aflat[k])))
    return worst
