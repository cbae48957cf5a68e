"""Auxiliary prompt assembly, toy tokenization, dual cross-attention.

The auxiliary text provider stands in for a vision-language model: it
answers the two fixed query strings with a semantic caption and a defect
description. The shipped implementation is a canned lookup keyed by the
forge's task tag; real-VLM integration is a plug-in point, not shipped.

Tokenization is a hash-bucket stand-in for a text tower: lowercased
whitespace tokens hashed into 4096 buckets, truncated/padded to 16
positions. Bucket 0 is the dedicated learned null/pad token; an empty text
maps entirely to it and sets the null flag.
"""
from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from . import tape
from .errors import InvalidArgumentError

QUERY_SEMANTIC = "Describe this image and its style in a very detailed manner"
QUERY_DEFECT = "Introduce the drawback of the image"

VOCAB_SIZE = 4096
MAX_TOKENS = 16
NULL_TOKEN_ID = 0


def build_auxiliary_prompt(semantic, defect):
    """Semantic response followed by defect response, single-space separated."""
    parts = [p for p in (semantic, defect) if p]
    return " ".join(parts)


class AuxiliaryProvider(Protocol):
    def query(self, image, query_text) -> str: ...


class CannedAuxiliaryProvider:
    """Deterministic provider: task tag -> (semantic caption, defect description)."""

    def __init__(self, table, task):
        if task not in table:
            raise InvalidArgumentError(f"no canned auxiliary text for task {task!r}")
        self._semantic, self._defect = table[task]
        self.task = task

    def query(self, image, query_text):
        if query_text == QUERY_SEMANTIC:
            return self._semantic
        if query_text == QUERY_DEFECT:
            return self._defect
        raise InvalidArgumentError(f"unrecognized query: {query_text!r}")


def load_provider_table(path):
    """Task tag -> [semantic, defect] pairs from a JSON file."""
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    table = {}
    for task, pair in raw.items():
        if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
            raise InvalidArgumentError(f"provider table entry for {task!r} must be a pair")
        table[task] = (str(pair[0]), str(pair[1]))
    return table


def auxiliary_prompt_for(provider, image=None):
    return build_auxiliary_prompt(provider.query(image, QUERY_SEMANTIC),
                                  provider.query(image, QUERY_DEFECT))


@dataclass
class PromptEmbedding:
    tokens: np.ndarray  # (MAX_TOKENS, d)
    null: bool
    token_ids: np.ndarray = field(default=None, repr=False)


def token_ids(text, max_len=MAX_TOKENS):
    """Deterministic hash-bucket ids, truncated/padded to max_len."""
    words = text.lower().split()
    ids = [(zlib.crc32(w.encode("utf-8")) % (VOCAB_SIZE - 1)) + 1 for w in words]
    ids = ids[:max_len]
    ids += [NULL_TOKEN_ID] * (max_len - len(ids))
    return np.asarray(ids, dtype=np.int64)


def tokenize_embed(text, table):
    """Embed text with a (VOCAB_SIZE, d) table; empty text -> null embedding."""
    table = np.asarray(table, dtype=np.float64)
    if table.shape[0] != VOCAB_SIZE:
        raise InvalidArgumentError(f"embedding table must have {VOCAB_SIZE} rows")
    ids = token_ids(text)
    null = not text.strip()
    return PromptEmbedding(tokens=table[ids], null=null, token_ids=ids)


def null_embedding(table):
    return tokenize_embed("", table)


@dataclass
class DualAttentionParams:
    """Two structurally identical cross-attention layers plus residual gates.

    The instruction layer's gate starts at 1; the auxiliary layer's gate is
    zero-initialized so adding the adapter never perturbs the model.
    """
    wq1: np.ndarray
    wk1: np.ndarray
    wv1: np.ndarray
    wo1: np.ndarray
    gate1: float
    wq2: np.ndarray
    wk2: np.ndarray
    wv2: np.ndarray
    wo2: np.ndarray
    gate2: float

    @classmethod
    def init(cls, d, prng, gate1=1.0, gate2=0.0):
        def w():
            return prng.gaussian((d, d)) / np.sqrt(d)
        return cls(wq1=w(), wk1=w(), wv1=w(), wo1=w(), gate1=gate1,
                   wq2=w(), wk2=w(), wv2=w(), wo2=w(), gate2=gate2)


def _attend(x, tok, wq, wk, wv, wo):
    """One cross-attention readout on tape nodes; rows of A are stochastic."""
    d = x.shape[-1]
    q = tape.matmul(x, wq)
    k = tape.matmul(tok, wk)
    v = tape.matmul(tok, wv)
    scores = tape.scale(tape.matmul(q, tape.transpose(k)), 1.0 / np.sqrt(d))
    attn = tape.softmax(scores, axis=-1)
    return tape.matmul(tape.matmul(attn, v), wo)


def attention_weights(x, tok, wq, wk):
    """Row-stochastic attention matrix (numpy, diagnostics/tests)."""
    d = np.shape(x)[-1]
    scores = (np.asarray(x) @ wq) @ (np.asarray(tok) @ wk).T / np.sqrt(d)
    scores -= scores.max(axis=-1, keepdims=True)
    e = np.exp(scores)
    return e / e.sum(axis=-1, keepdims=True)


def dual_cross_attention_nodes(x, instr_tok, aux_tok, p):
    """Tape version: x' = x + g1*Attn(x; instr); x'' = x' + g2*Attn(x'; aux)."""
    if x.shape[-1] != tape.as_node(instr_tok).shape[-1]:
        raise InvalidArgumentError("embedding dimension mismatch")

    def gated(a, g):
        return tape.mul(a, g) if isinstance(g, tape.Node) else tape.scale(a, float(g))

    a1 = _attend(x, instr_tok, p.wq1, p.wk1, p.wv1, p.wo1)
    x1 = tape.add(x, gated(a1, p.gate1))
    a2 = _attend(x1, aux_tok, p.wq2, p.wk2, p.wv2, p.wo2)
    return tape.add(x1, gated(a2, p.gate2))


def dual_cross_attention(x, instr, aux, params):
    """Numpy entry point over PromptEmbeddings; see dual_cross_attention_nodes."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidArgumentError("token tensor must be (n, d)")
    if x.shape[1] != instr.tokens.shape[1] or x.shape[1] != aux.tokens.shape[1]:
        raise InvalidArgumentError("embedding dimension mismatch")
    node_params = DualAttentionParams(
        wq1=tape.constant(params.wq1), wk1=tape.constant(params.wk1),
        wv1=tape.constant(params.wv1), wo1=tape.constant(params.wo1),
        gate1=float(params.gate1),
        wq2=tape.constant(params.wq2), wk2=tape.constant(params.wk2),
        wv2=tape.constant(params.wv2), wo2=tape.constant(params.wo2),
        gate2=float(params.gate2))
    out = dual_cross_attention_nodes(tape.constant(x),
                                     tape.constant(instr.tokens),
                                     tape.constant(aux.tokens), node_params)
    return out.value


def single_cross_attention(x, prompt, wq, wk, wv, wo, gate=1.0):
    """Single-layer reference used by the zero-gate equivalence tests."""
    out = _attend(tape.constant(np.asarray(x, dtype=np.float64)),
                  tape.constant(prompt.tokens),
                  tape.constant(wq), tape.constant(wk),
                  tape.constant(wv), tape.constant(wo))
    return np.asarray(x, dtype=np.float64) + float(gate) * out.value


@dataclass
class ConditioningBundle:
    """Instruction/auxiliary embeddings plus the input-image latent.

    Drop flags implement the classifier-free-guidance branches: a dropped
    branch carries the null embedding (text) or a zeroed latent (image).
    """
    instruction: PromptEmbedding
    auxiliary: PromptEmbedding
    image_latent: np.ndarray | None
    drop_image: bool = False
    drop_instruction: bool = False
    drop_auxiliary: bool = False

    def variant(self, *, drop_image=None, drop_text=None):
        """CFG variant with branch drops overridden (aux rides with instruction)."""
        return ConditioningBundle(
            instruction=self.instruction,
            auxiliary=self.auxiliary,
            image_latent=self.image_latent,
            drop_image=self.drop_image if drop_image is None else drop_image,
            drop_instruction=self.drop_instruction if drop_text is None else drop_text,
            drop_auxiliary=self.drop_auxiliary if drop_text is None else drop_text,
        )
