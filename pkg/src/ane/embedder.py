"""Embedding models and the two-phase joint training loop.

Four model kinds share one trainer:

* ``idw``  - random-walk skip-gram with parameterized generators: a target
  generator G and a context generator F map feature rows to vectors, trained
  with negative sampling on walk co-occurrence pairs.
* ``aidw`` - idw plus an adversarial phase that pushes the distribution of
  G's outputs toward a chosen prior via a GAN-style discriminator.
* ``dae``  - denoising autoencoder on feature rows; the encoder plays the
  role of G.
* ``adae`` - dae plus the same adversarial phase on the encoder outputs.

Each training cycle runs ``structure_steps`` minibatch updates of the
structure objective, then (for adversarial models) ``disc_steps``
discriminator updates followed by ``gen_steps`` generator updates. The
generator G is a single shared parameter bundle: the structure phase and the
adversarial phase update the same network.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import nn
from .nn import BatchNorm, DenseLayer, LeakyRelu, Mlp, RmsProp, log_sigmoid, sigmoid
from .proximity import PpmiConfig, ppmi_features
from .walker import WalkConfig, iter_batches, negative_sampler, positive_pairs, random_walks

MODEL_KINDS = ("idw", "aidw", "dae", "adae")

# discriminator probabilities are clamped here before taking logs
PROB_CLAMP = 1e-12


class TrainingDiverged(RuntimeError):
    """A loss became non-finite; the run is unusable."""


@dataclass(frozen=True)
class Prior:
    """Source of 'real' samples for the adversarial phase.

    ``uniform`` draws each coordinate from U[-1, 1]; ``gaussian`` from N(0, 1).
    """

    kind: str = "uniform"

    def __post_init__(self):
        if self.kind not in ("uniform", "gaussian"):
            raise ValueError(f"unknown prior kind {self.kind!r}")

    def sample(self, rng, count, dim):
        if self.kind == "uniform":
            return rng.uniform(-1.0, 1.0, size=(count, dim))
        return rng.standard_normal(size=(count, dim))


@dataclass(frozen=True)
class TrainConfig:
    """Everything a training run depends on besides the graph itself."""

    model: str = "aidw"
    dim: int = 128
    negatives: int = 5
    epochs: int = 5
    batch_size: int = 256
    adv_batch_size: int = 128
    structure_steps: int = 1
    disc_steps: int = 1
    gen_steps: int = 1
    structure_lr: float = 0.001
    disc_lr: float = 0.001
    gen_lr: float = 0.001
    prior: str = "uniform"
    dae_corruption: float = 0.2
    grad_clip: float = 5.0
    bn_before_activation: bool = False
    walks_per_node: int = 10
    walk_length: int = 80
    context_size: int = 10
    ppmi_steps: int = 4
    ppmi_beta: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ValueError(f"model must be one of {MODEL_KINDS}, got {self.model!r}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.negatives < 1:
            raise ValueError(f"negatives must be >= 1, got {self.negatives}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if min(self.batch_size, self.adv_batch_size) < 1:
            raise ValueError("batch sizes must be >= 1")
        if min(self.structure_steps, self.disc_steps, self.gen_steps) < 0:
            raise ValueError("step counts must be >= 0")
        if not 0.0 <= self.dae_corruption < 1.0:
            raise ValueError(f"dae_corruption must be in [0, 1), got {self.dae_corruption}")

    @property
    def adversarial(self):
        return self.model in ("aidw", "adae")

    def digest(self):
        """Stable hash of the resolved configuration, for provenance."""
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class CycleRecord:
    cycle: int
    structure_loss: float
    disc_loss: float  # nan when the adversarial phase is disabled
    gen_loss: float
    wall_ms: float
    bn_mean_abs: float  # worst |mean| of normalized batch-norm outputs this cycle
    bn_var_err: float  # worst |var - 1| likewise


@dataclass
class TrainingLog:
    records: list = field(default_factory=list)

    def append(self, record):
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def save(self, path):
        """Line-delimited log. Wall time is deliberately not written so runs
        with equal seeds produce byte-identical files."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# cycle structure_loss disc_loss gen_loss\n")
            for r in self.records:
                fh.write(
                    f"{r.cycle} {r.structure_loss:.17g} {r.disc_loss:.17g} {r.gen_loss:.17g}\n"
                )


@dataclass
class EmbeddingMatrix:
    """Learned node representations plus provenance."""

    vectors: np.ndarray  # (N, d)
    ids: list
    model: str = ""
    seed: int = 0
    config_digest: str = ""

    @property
    def num_nodes(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]


def build_generator(in_dim, out_dim, rng, leak=0.2, bn_before_activation=False):
    """Single dense layer with leaky ReLU and batch norm on the output."""
    dense = DenseLayer(in_dim, out_dim, rng)
    if bn_before_activation:
        return Mlp([dense, BatchNorm(out_dim), LeakyRelu(leak)])
    return Mlp([dense, LeakyRelu(leak), BatchNorm(out_dim)])


def build_discriminator(in_dim, rng, hidden=512, leak=0.2):
    """Hidden structure 512-512-1; sigmoid is applied by the loss functions."""
    return Mlp(
        [
            DenseLayer(in_dim, hidden, rng),
            LeakyRelu(leak),
            BatchNorm(hidden),
            DenseLayer(hidden, hidden, rng),
            LeakyRelu(leak),
            BatchNorm(hidden),
            DenseLayer(hidden, 1, rng),
        ]
    )


def build_decoder(in_dim, out_dim, rng):
    """Linear reconstruction head for the autoencoder models."""
    return Mlp([DenseLayer(in_dim, out_dim, rng)])


def _scatter_add_rows(out, idx, vals):
    """out[idx[k]] += vals[k] with repeated indices accumulated."""
    if idx.size == 0:
        return
    order = np.argsort(idx, kind="stable")
    sorted_idx = idx[order]
    sorted_vals = vals[order]
    starts = np.concatenate(([0], np.nonzero(np.diff(sorted_idx))[0] + 1))
    sums = np.add.reduceat(sorted_vals, starts, axis=0)
    out[sorted_idx[starts]] += sums


def sgns_loss_from_scores(pos_scores, neg_scores):
    """Negative-sampling objective on raw dot-product scores.

    Per pair: -log sigma(s_pos) - sum_k log sigma(-s_neg_k), averaged over the
    batch. Returns the loss and its gradients with respect to both score
    arrays.
    """
    b = pos_scores.shape[0]
    loss = -(log_sigmoid(pos_scores).sum() + log_sigmoid(-neg_scores).sum()) / b
    grad_pos = -(1.0 - sigmoid(pos_scores)) / b
    grad_neg = sigmoid(neg_scores) / b
    return loss, grad_pos, grad_neg


def idw_batch_loss(gen_g, gen_f, batch, features, train=True):
    """Structure loss for one pair batch; leaves gradients on both generators.

    Each generator runs once on the batch's unique node rows (so batch-norm
    statistics are over distinct nodes) and per-pair gradients are scattered
    back onto those rows.
    """
    tgt_nodes, tgt_pos = np.unique(batch.targets, return_inverse=True)
    ctx_flat = np.concatenate([batch.contexts, batch.negatives.ravel()])
    ctx_nodes, ctx_pos = np.unique(ctx_flat, return_inverse=True)

    u_rows = gen_g.forward(features[tgt_nodes], train=train)
    v_rows = gen_f.forward(features[ctx_nodes], train=train)

    b, k = batch.negatives.shape
    u = u_rows[tgt_pos]
    pos_idx = ctx_pos[:b]
    neg_idx = ctx_pos[b:].reshape(b, k)
    v_pos = v_rows[pos_idx]
    v_neg = v_rows[neg_idx]

    pos_scores = (u * v_pos).sum(axis=1)
    neg_scores = np.einsum("bd,bkd->bk", u, v_neg)
    loss, grad_pos, grad_neg = sgns_loss_from_scores(pos_scores, neg_scores)

    grad_u = grad_pos[:, None] * v_pos + np.einsum("bk,bkd->bd", grad_neg, v_neg)
    grad_u_rows = np.zeros_like(u_rows)
    _scatter_add_rows(grad_u_rows, tgt_pos, grad_u)

    grad_v_rows = np.zeros_like(v_rows)
    _scatter_add_rows(grad_v_rows, pos_idx, grad_pos[:, None] * u)
    _scatter_add_rows(
        grad_v_rows,
        neg_idx.ravel(),
        (grad_neg[:, :, None] * u[:, None, :]).reshape(b * k, -1),
    )

    gen_g.backward(grad_u_rows)
    gen_f.backward(grad_v_rows)
    return loss


def _clamped_probs(logits):
    p = sigmoid(logits)
    clamped = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    inside = (p > PROB_CLAMP) & (p < 1.0 - PROB_CLAMP)
    return p, clamped, inside


def discriminator_loss(disc, real_z, fake_u):
    """Discriminator objective on one real and one fake batch.

    Real and fake samples go through the network as separate batches, so
    batch-norm statistics are computed per side. Fake embeddings are treated
    as constants: no gradient reaches the generator here. Gradients for the
    discriminator parameters accumulate over both passes.
    """
    if real_z.shape[0] != fake_u.shape[0]:
        raise ValueError(
            f"real and fake batches must match: {real_z.shape[0]} vs {fake_u.shape[0]}"
        )
    b = real_z.shape[0]

    logits_real = disc.forward(real_z, train=True)
    p_real, pc_real, in_real = _clamped_probs(logits_real)
    loss_real = -np.log(pc_real).mean()
    grad_real = np.where(in_real, -(1.0 - p_real), 0.0) / b
    disc.backward(grad_real)
    stash = [g.copy() for g in disc.gradients()]

    logits_fake = disc.forward(fake_u, train=True)
    p_fake, pc_fake, in_fake = _clamped_probs(logits_fake)
    loss_fake = -np.log1p(-pc_fake).mean()
    grad_fake = np.where(in_fake, p_fake, 0.0) / b
    disc.backward(grad_fake)
    for g, s in zip(disc.gradients(), stash):
        g += s

    return loss_real + loss_fake


def generator_adversarial_loss(gen_g, disc, x_rows):
    """Generator payoff step: make embeddings score as prior samples.

    The discriminator is evaluated with batch statistics but its running
    statistics are frozen, and its parameter gradients are simply never
    applied, so this step can only change the generator.
    """
    u = gen_g.forward(x_rows, train=True)
    logits = disc.forward(u, train=True, update_running=False)
    p, pc, inside = _clamped_probs(logits)
    loss = -np.log(pc).mean()
    grad_logits = np.where(inside, -(1.0 - p), 0.0) / x_rows.shape[0]
    grad_u = disc.backward(grad_logits)
    gen_g.backward(grad_u)
    return loss


def dae_batch_loss(encoder, decoder, rows, corruption, rng, train=True):
    """Denoising reconstruction loss on a batch of clean feature rows.

    A fixed fraction of entries in each row is masked to zero, the corrupted
    row is encoded and decoded, and the result is scored against the clean
    row with mean squared error over all entries.
    """
    if not 0.0 <= corruption < 1.0:
        raise ValueError(f"corruption must be in [0, 1), got {corruption}")
    x = rows
    corrupted = x
    n_mask = int(round(corruption * x.shape[1]))
    if n_mask > 0:
        corrupted = x.copy()
        scores = rng.random(x.shape)
        kill = np.argpartition(scores, n_mask - 1, axis=1)[:, :n_mask]
        corrupted[np.arange(x.shape[0])[:, None], kill] = 0.0

    hidden = encoder.forward(corrupted, train=train)
    recon = decoder.forward(hidden, train=train)
    diff = recon - x
    loss = float((diff * diff).mean())
    grad_recon = 2.0 * diff / diff.size
    grad_hidden = decoder.backward(grad_recon)
    encoder.backward(grad_hidden)
    return loss


class Trainer:
    """Owns the networks, optimizers and RNG streams for one training run.

    Randomness is split into independent streams so that disabling the
    adversarial phase does not shift the structure phase: an adversarial
    model with zero disc/gen steps reproduces its plain counterpart bit for
    bit under the same seed.
    """

    def __init__(self, graph, config, features=None):
        self.graph = graph
        self.config = config

        streams = np.random.SeedSequence(config.seed).spawn(7)
        (
            self.rng_init,
            self.rng_disc_init,
            self.rng_walks,
            self.rng_batches,
            self.rng_prior,
            self.rng_noise,
            self.rng_adv_rows,
        ) = (np.random.default_rng(s) for s in streams)

        if features is None:
            ppmi = ppmi_features(graph, PpmiConfig(config.ppmi_steps, config.ppmi_beta))
            features = ppmi.matrix
        if features.shape[0] != graph.num_nodes:
            raise ValueError(
                f"feature rows ({features.shape[0]}) != graph nodes ({graph.num_nodes})"
            )
        self.features = features
        in_dim = features.shape[1]

        if config.model in ("idw", "aidw"):
            self.gen_g = build_generator(
                in_dim, config.dim, self.rng_init, bn_before_activation=config.bn_before_activation
            )
            self.gen_f = build_generator(
                in_dim, config.dim, self.rng_init, bn_before_activation=config.bn_before_activation
            )
            self.decoder = None
            structure_nets = [self.gen_g, self.gen_f]
        else:
            self.gen_g = build_generator(
                in_dim, config.dim, self.rng_init, bn_before_activation=config.bn_before_activation
            )
            self.gen_f = None
            self.decoder = build_decoder(config.dim, in_dim, self.rng_init)
            structure_nets = [self.gen_g, self.decoder]
        self.structure_nets = structure_nets

        self.disc = None
        if config.adversarial:
            self.disc = build_discriminator(config.dim, self.rng_disc_init)
            self.prior = Prior(config.prior)
            self.disc_opt = RmsProp(self.disc.parameters(), lr=config.disc_lr)
            self.gen_adv_opt = RmsProp(self.gen_g.parameters(), lr=config.gen_lr)

        self.structure_opt = RmsProp(
            [p for net in structure_nets for p in net.parameters()], lr=config.structure_lr
        )

        if config.model in ("idw", "aidw"):
            walk_cfg = WalkConfig(
                walks_per_node=config.walks_per_node,
                walk_length=config.walk_length,
                context_size=config.context_size,
                seed=config.seed,
            )
            corpus = random_walks(graph, walk_cfg, self.rng_walks)
            self.pair_targets, self.pair_contexts = positive_pairs(corpus, config.context_size)
            if self.pair_targets.size == 0:
                raise ValueError(
                    "walk corpus produced no positive pairs; increase context_size"
                )
            self.neg_table = negative_sampler(graph)

        self.log = TrainingLog()

    # -- single steps ------------------------------------------------------

    def _structure_step(self, batch):
        cfg = self.config
        if cfg.model in ("idw", "aidw"):
            loss = idw_batch_loss(self.gen_g, self.gen_f, batch, self.features)
        else:
            loss = dae_batch_loss(
                self.gen_g, self.decoder, self.features[batch], cfg.dae_corruption, self.rng_noise
            )
        self._check_finite(loss, "structure")
        grads = [g for net in self.structure_nets for g in net.gradients()]
        self.structure_opt.step(grads)
        return loss

    def _disc_step(self):
        cfg = self.config
        real = self.prior.sample(self.rng_prior, cfg.adv_batch_size, cfg.dim)
        rows = self.rng_adv_rows.integers(self.graph.num_nodes, size=cfg.adv_batch_size)
        fake = self.gen_g.forward(self.features[rows], train=True, update_running=False)
        loss = discriminator_loss(self.disc, real, fake)
        self._check_finite(loss, "discriminator")
        grads = self.disc.gradients()
        nn.clip_global_norm(grads, cfg.grad_clip)
        self.disc_opt.step(grads)
        return loss

    def _gen_step(self):
        cfg = self.config
        rows = self.rng_adv_rows.integers(self.graph.num_nodes, size=cfg.adv_batch_size)
        loss = generator_adversarial_loss(self.gen_g, self.disc, self.features[rows])
        self._check_finite(loss, "generator")
        grads = self.gen_g.gradients()
        nn.clip_global_norm(grads, cfg.grad_clip)
        self.gen_adv_opt.step(grads)
        return loss

    @staticmethod
    def _check_finite(loss, phase):
        if not np.isfinite(loss):
            raise TrainingDiverged(f"{phase} loss became {loss!r}")

    # -- epoch streams -----------------------------------------------------

    def _structure_batches(self):
        cfg = self.config
        if cfg.model in ("idw", "aidw"):
            return iter_batches(
                self.pair_targets,
                self.pair_contexts,
                self.neg_table,
                cfg.negatives,
                cfg.batch_size,
                self.rng_batches,
            )
        order = self.rng_batches.permutation(self.graph.num_nodes)
        return (
            order[start : start + cfg.batch_size]
            for start in range(0, order.size, cfg.batch_size)
        )

    def _bn_stats(self, nets):
        mean_abs = 0.0
        var_err = 0.0
        for net in nets:
            for layer in net.bn_layers():
                mean_abs = max(mean_abs, layer.last_norm_mean_abs)
                var_err = max(var_err, layer.last_norm_var_err)
        return mean_abs, var_err

    def run(self):
        """Train to completion and return (embeddings, training log).

        An epoch is one pass over the structure stream (positive pairs, or
        feature rows for the autoencoder models); its length still defines
        the cycle count when ``structure_steps`` is 0 and only the
        adversarial phase runs.
        """
        cfg = self.config
        if cfg.model in ("idw", "aidw"):
            n_items = self.pair_targets.size
        else:
            n_items = self.graph.num_nodes
        n_batches = -(-n_items // cfg.batch_size)
        if cfg.structure_steps > 0:
            cycles_per_epoch = -(-n_batches // cfg.structure_steps)
        else:
            cycles_per_epoch = n_batches

        cycle = 0
        for _ in range(cfg.epochs):
            batches = self._structure_batches() if cfg.structure_steps > 0 else None
            for _ in range(cycles_per_epoch):
                started = time.perf_counter()
                bn_mean = 0.0
                bn_var = 0.0
                structure_losses = []
                if batches is not None:
                    for _ in range(cfg.structure_steps):
                        batch = next(batches, None)
                        if batch is None:
                            break
                        structure_losses.append(self._structure_step(batch))
                        stats = self._bn_stats(self.structure_nets)
                        bn_mean = max(bn_mean, stats[0])
                        bn_var = max(bn_var, stats[1])

                disc_loss = float("nan")
                gen_loss = float("nan")
                if cfg.adversarial:
                    disc_losses = [self._disc_step() for _ in range(cfg.disc_steps)]
                    gen_losses = [self._gen_step() for _ in range(cfg.gen_steps)]
                    if disc_losses or gen_losses:
                        stats = self._bn_stats([self.disc, self.gen_g])
                        bn_mean = max(bn_mean, stats[0])
                        bn_var = max(bn_var, stats[1])
                    if disc_losses:
                        disc_loss = float(np.mean(disc_losses))
                    if gen_losses:
                        gen_loss = float(np.mean(gen_losses))

                structure_loss = (
                    float(np.mean(structure_losses)) if structure_losses else float("nan")
                )
                self.log.append(
                    CycleRecord(
                        cycle=cycle,
                        structure_loss=structure_loss,
                        disc_loss=disc_loss,
                        gen_loss=gen_loss,
                        wall_ms=(time.perf_counter() - started) * 1e3,
                        bn_mean_abs=bn_mean,
                        bn_var_err=bn_var,
                    )
                )
                cycle += 1
        return self.embeddings(), self.log

    def embeddings(self):
        """Current node representations in inference mode (running statistics),
        so the result does not depend on batch composition."""
        vectors = self.gen_g.forward(self.features, train=False)
        return EmbeddingMatrix(
            vectors=vectors,
            ids=list(self.graph.ids),
            model=self.config.model,
            seed=self.config.seed,
            config_digest=self.config.digest(),
        )

    def save_checkpoints(self, directory):
        """One neural-kernel checkpoint file per network."""
        import os

        names = {"generator": self.gen_g}
        if self.gen_f is not None:
            names["context_generator"] = self.gen_f
        if self.decoder is not None:
            names["decoder"] = self.decoder
        if self.disc is not None:
            names["discriminator"] = self.disc
        for name, net in names.items():
            nn.save_checkpoint(net, os.path.join(directory, f"{name}.npz"))


def train(graph, config, features=None):
    """Run the full two-phase training procedure.

    Returns ``(EmbeddingMatrix, TrainingLog)``. ``features`` defaults to the
    shifted-PPMI matrix built from the graph with the config's settings.
    """
    return Trainer(graph, config, features=features).run()


def export_embeddings(embedding, path):
    """Write embeddings as text: ``N d`` header, then one node per line with
    its external id and coordinates at 17 significant digits."""
    vecs = embedding.vectors
    if not np.isfinite(vecs).all():
        raise ValueError("embedding matrix contains non-finite values")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{vecs.shape[0]} {vecs.shape[1]}\n")
        for node_id, row in zip(embedding.ids, vecs):
            fh.write(str(node_id) + " " + " ".join(f"{v:.17g}" for v in row) + "\n")


def load_embeddings(path):
    """Reload a file written by :func:`export_embeddings`."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected 'N d' header, got {header!r}")
        n, d = int(header[0]), int(header[1])
        ids = []
        vectors = np.empty((n, d), dtype=np.float64)
        for i in range(n):
            parts = fh.readline().split()
            if len(parts) != d + 1:
                raise ValueError(f"{path}: line {i + 2} has {len(parts)} fields, expected {d + 1}")
            ids.append(parts[0])
            vectors[i] = [float(tok) for tok in parts[1:]]
    return EmbeddingMatrix(vectors=vectors, ids=ids)
