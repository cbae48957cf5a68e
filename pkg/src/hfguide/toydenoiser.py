"""Trainable conditional denoiser and its diffusion-loss training loop.

The network predicts the noise in an 8x8x4 latent of a 32x32 image. Three
convolution stages run at latent resolution with the noise level embedded
by a 2-layer MLP on log(sigma); the degraded-image latent is concatenated
to the noisy latent channel-wise, and text conditioning enters only
through the dual cross-attention block over the 64 latent positions.
Inputs are scaled by 1/sqrt(sigma^2 + s_data^2) so the eps-prediction
contract holds at every noise level.

Training minimizes E||eps - eps_hat||^2 with each conditioning branch
(image latent, instruction tokens, auxiliary tokens) independently
replaced by its null embedding with the configured dropout probability.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import tape
from .conditioning import MAX_TOKENS, NULL_TOKEN_ID, VOCAB_SIZE
from .errors import InvalidArgumentError
from .rng import Prng
from .weights_io import load_tensors, save_tensors

D_MODEL = 32
S_DATA = 0.5
LATENT_SHAPE = (8, 8, 4)


def _init_weights(seed):
    prng = Prng(np.random.SeedSequence(seed, spawn_key=(0xd0e,)))

    def conv(kh, kw, cin, cout):
        return prng.gaussian((kh, kw, cin, cout)) / math.sqrt(kh * kw * cin)

    def lin(nin, nout):
        return prng.gaussian((nin, nout)) / math.sqrt(nin)

    d = D_MODEL
    w = {
        "embed": 0.02 * prng.gaussian((VOCAB_SIZE, d)),
        "conv1_w": conv(3, 3, 8, d), "conv1_b": np.zeros(d),
        "conv2_w": conv(3, 3, d, d), "conv2_b": np.zeros(d),
        "conv3_w": conv(3, 3, d, d), "conv3_b": np.zeros(d),
        "out_w": conv(3, 3, d, 4), "out_b": np.zeros(4),
        "semb_w1": lin(1, d), "semb_b1": np.zeros(d),
        "semb_w2": lin(d, d), "semb_b2": np.zeros(d),
    }
    for layer in ("1", "2"):
        for name in ("wq", "wk", "wv", "wo"):
            w[f"{name}{layer}"] = lin(d, d)
    w["gate1"] = np.array(1.0)
    w["gate2"] = np.array(0.0)  # auxiliary adapter starts silent
    return w


class ToyDenoiser:
    """Weight container plus the denoiser contract (predict_eps)."""

    def __init__(self, weights):
        self.weights = weights

    @classmethod
    def init(cls, seed=0):
        return cls(_init_weights(seed))

    def save(self, path, meta=None):
        save_tensors(path, self.weights, meta={"kind": "toy-denoiser", **(meta or {})})

    @classmethod
    def load(cls, path):
        tensors, meta = load_tensors(path)
        if meta.get("kind") != "toy-denoiser":
            raise InvalidArgumentError(f"{path!r} does not hold toy-denoiser weights")
        return cls(tensors)

    # -- conditioning plumbing -------------------------------------------
    @staticmethod
    def _prompt_ids(embedding, dropped):
        if dropped or embedding is None or embedding.null:
            return np.full(MAX_TOKENS, NULL_TOKEN_ID, dtype=np.int64)
        return embedding.token_ids

    def _cond_parts(self, cond):
        if cond is None:
            instr = aux = np.full(MAX_TOKENS, NULL_TOKEN_ID, dtype=np.int64)
            latent = np.zeros(LATENT_SHAPE)
        else:
            instr = self._prompt_ids(cond.instruction, cond.drop_instruction)
            aux = self._prompt_ids(cond.auxiliary, cond.drop_auxiliary)
            if cond.drop_image or cond.image_latent is None:
                latent = np.zeros(LATENT_SHAPE)
            else:
                latent = np.asarray(cond.image_latent, dtype=np.float64)
        return instr, aux, latent

    # -- forward ----------------------------------------------------------
    def _forward_nodes(self, wn, z, sigma, cond):
        instr_ids, aux_ids, latent = self._cond_parts(cond)
        c_in = 1.0 / math.sqrt(sigma ** 2 + S_DATA ** 2)
        z = tape.as_node(z)
        x = tape.concat([tape.scale(z, c_in), tape.constant(latent)], axis=2)

        ls = tape.constant(np.array([[math.log(sigma)]]))
        h = tape.relu(tape.add(tape.matmul(ls, wn["semb_w1"]), wn["semb_b1"]))
        semb = tape.reshape(tape.add(tape.matmul(h, wn["semb_w2"]), wn["semb_b2"]),
                            (1, 1, D_MODEL))

        def block(inp, cw, cb):
            return tape.relu(tape.add(tape.add(tape.conv2d(inp, cw, "replicate"), cb), semb))

        h1 = block(x, wn["conv1_w"], wn["conv1_b"])
        h2 = block(h1, wn["conv2_w"], wn["conv2_b"])

        tok = tape.reshape(h2, (64, D_MODEL))
        instr_e = tape.gather(wn["embed"], instr_ids)
        aux_e = tape.gather(wn["embed"], aux_ids)
        from .conditioning import DualAttentionParams, dual_cross_attention_nodes
        params = DualAttentionParams(
            wq1=wn["wq1"], wk1=wn["wk1"], wv1=wn["wv1"], wo1=wn["wo1"], gate1=wn["gate1"],
            wq2=wn["wq2"], wk2=wn["wk2"], wv2=wn["wv2"], wo2=wn["wo2"], gate2=wn["gate2"])
        tok = dual_cross_attention_nodes(tok, instr_e, aux_e, params)
        h3 = tape.reshape(tok, (8, 8, D_MODEL))

        h4 = block(h3, wn["conv3_w"], wn["conv3_b"])
        return tape.add(tape.conv2d(h4, wn["out_w"], "replicate"), wn["out_b"])

    def predict_eps(self, z, sigma, cond):
        wn = {k: tape.constant(v) for k, v in self.weights.items()}
        return self._forward_nodes(wn, tape.constant(z), sigma, cond).value


@dataclass
class TrainConfig:
    iters: int = 1200
    batch: int = 8
    lr: float = 2e-3
    dropout_p: float = 0.075
    seed: int = 0
    sigma_min: float = 0.02
    sigma_max: float = 10.0
    rho: float = 7.0
    t_steps: int = 16
    log_every: int = 50
    lr_final_frac: float = 0.1  # linear lr decay endpoint as a fraction of lr


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, grads):
        self.t += 1
        b1t = 1 - self.b1 ** self.t
        b2t = 1 - self.b2 ** self.t
        for k, g in grads.items():
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            self.params[k] -= self.lr * (self.m[k] / b1t) / (np.sqrt(self.v[k] / b2t) + self.eps)


def draw_drop_flags(prng, p):
    """Independent Bernoulli(p) drops for (image, instruction, auxiliary)."""
    return tuple(bool(prng.uniform() < p) for _ in range(3))


def train_toy(examples, config, model=None, drop_prng=None):
    """Diffusion-loss training over prepared examples.

    `examples` is a sequence of dicts with keys: target_latent, input_latent,
    instruction_ids, auxiliary_ids (see data preparation in forge/cli).
    Returns (ToyDenoiser, loss_curve) where loss_curve is [(iter, loss), ...].
    """
    if not examples:
        raise InvalidArgumentError("empty training set")
    from .schedule import build_edm_schedule
    from .conditioning import PromptEmbedding, ConditioningBundle

    sched = build_edm_schedule(config.t_steps, config.sigma_min, config.sigma_max, config.rho)
    model = model or ToyDenoiser.init(config.seed)
    prng = Prng(np.random.SeedSequence(config.seed, spawn_key=(0x7a1,)))
    drop_prng = drop_prng or prng
    opt = Adam(model.weights, config.lr)
    curve = []

    def embedding_from_ids(ids):
        # tokens field unused by the model; ids drive the learned table.
        return PromptEmbedding(tokens=np.zeros((MAX_TOKENS, 1)),
                               null=bool(np.all(ids == NULL_TOKEN_ID)), token_ids=ids)

    for it in range(config.iters):
        frac = it / max(config.iters - 1, 1)
        opt.lr = config.lr * (1.0 - (1.0 - config.lr_final_frac) * frac)
        wn = {k: tape.param(v) for k, v in model.weights.items()}
        losses = []
        for _ in range(config.batch):
            ex = examples[prng.integers(0, len(examples))]
            t = prng.integers(1, sched.T + 1)
            sigma = float(sched.sigmas[t])
            eps = prng.gaussian(LATENT_SHAPE)
            z_t = ex["target_latent"] + sigma * eps
            drop_img, drop_instr, drop_aux = draw_drop_flags(drop_prng, config.dropout_p)
            cond = ConditioningBundle(
                instruction=embedding_from_ids(ex["instruction_ids"]),
                auxiliary=embedding_from_ids(ex["auxiliary_ids"]),
                image_latent=ex["input_latent"],
                drop_image=drop_img, drop_instruction=drop_instr, drop_auxiliary=drop_aux)
            eps_hat = model._forward_nodes(wn, tape.constant(z_t), sigma, cond)
            diff = eps_hat - tape.constant(eps)
            losses.append(tape.scale(tape.asum(tape.mul(diff, diff)), 1.0 / eps.size))
        total = losses[0]
        for term in losses[1:]:
            total = tape.add(total, term)
        total = tape.scale(total, 1.0 / len(losses))
        total.backward()
        opt.step({k: n.grad for k, n in wn.items()})
        loss_val = float(total.value)
        if it == 0 or (it + 1) % config.log_every == 0 or it == config.iters - 1:
            curve.append((it, loss_val))
    return model, curve


def write_loss_curve(path, curve):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["iteration", "loss"])
        w.writerows(curve)
