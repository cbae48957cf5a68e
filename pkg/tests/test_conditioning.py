import json

import numpy as np
import pytest

from hfguide import conditioning as cond
from hfguide import templates
from hfguide.conditioning import (CannedAuxiliaryProvider, DualAttentionParams,
                                  PromptEmbedding, attention_weights,
                                  auxiliary_prompt_for, build_auxiliary_prompt,
                                  dual_cross_attention, load_provider_table,
                                  null_embedding, single_cross_attention,
                                  token_ids, tokenize_embed)
from hfguide.errors import InvalidArgumentError
from hfguide.rng import Prng

D = 8


def make_table(seed=0):
    return Prng(seed).gaussian((cond.VOCAB_SIZE, D)) * 0.1


def test_prompt_assembly_examples():
    assert build_auxiliary_prompt(
        "a snowy street at dusk",
        "the image is obscured by falling snow",
    ) == "a snowy street at dusk the image is obscured by falling snow"
    assert build_auxiliary_prompt("", "d") == "d"
    assert build_auxiliary_prompt("s", "") == "s"


def test_provider_query_routing():
    provider = CannedAuxiliaryProvider({"snow": ("scene text", "defect text")}, "snow")
    assert provider.query(None, cond.QUERY_SEMANTIC) == "scene text"
    assert provider.query(None, cond.QUERY_DEFECT) == "defect text"
    assert auxiliary_prompt_for(provider) == "scene text defect text"
    with pytest.raises(InvalidArgumentError):
        provider.query(None, "What color is it?")
    with pytest.raises(InvalidArgumentError):
        CannedAuxiliaryProvider({}, "snow")


def test_provider_table_file_roundtrip(tmp_path):
    path = tmp_path / "table.json"
    path.write_text(json.dumps({"haze": ["a misty valley", "thick haze"]}))
    table = load_provider_table(str(path))
    assert table["haze"] == ("a misty valley", "thick haze")
    path.write_text(json.dumps({"haze": ["only one"]}))
    with pytest.raises(InvalidArgumentError):
        load_provider_table(str(path))


def test_tokenize_deterministic():
    table = make_table()
    a = tokenize_embed("Remove the snow from this photo", table)
    b = tokenize_embed("Remove the snow from this photo", table)
    assert np.array_equal(a.tokens, b.tokens)
    assert np.array_equal(a.token_ids, b.token_ids)
    assert not a.null


def test_empty_text_is_null():
    table = make_table()
    emb = tokenize_embed("", table)
    assert emb.null
    assert np.all(emb.token_ids == cond.NULL_TOKEN_ID)
    assert np.array_equal(emb.tokens, null_embedding(table).tokens)
    assert tokenize_embed("   ", table).null


def test_token_shape_and_truncation():
    table = make_table()
    long_text = " ".join(f"word{i}" for i in range(40))
    emb = tokenize_embed(long_text, table)
    assert emb.tokens.shape == (cond.MAX_TOKENS, D)
    # nonempty words never map to the null bucket
    assert np.all(emb.token_ids != cond.NULL_TOKEN_ID)


def test_collision_rate_on_template_pools():
    texts = sorted({t for pool in templates.TASK_PROMPTS.values() for t in pool})
    sigs = [tuple(token_ids(t)) for t in texts]
    collisions = len(sigs) - len(set(sigs))
    assert collisions / len(sigs) < 0.05


def test_zero_gate_equals_single_attention():
    prng = Prng(5)
    params = DualAttentionParams.init(D, prng, gate1=0.7, gate2=0.0)
    x = prng.gaussian((10, D))
    table = make_table()
    instr = tokenize_embed("sharpen the edges", table)
    aux = tokenize_embed("a blurry photo of a bridge", table)
    got = dual_cross_attention(x, instr, aux, params)
    want = single_cross_attention(x, instr, params.wq1, params.wk1,
                                  params.wv1, params.wo1, gate=0.7)
    assert np.array_equal(got, want)


def test_one_key_softmax_adds_value_projection():
    prng = Prng(6)
    params = DualAttentionParams.init(D, prng, gate1=1.0, gate2=0.0)
    v = prng.gaussian((1, D))
    instr = PromptEmbedding(tokens=v, null=False)
    aux = PromptEmbedding(tokens=np.zeros((1, D)), null=True)
    x = prng.gaussian((5, D))
    out = dual_cross_attention(x, instr, aux, params)
    add = (v @ params.wv1) @ params.wo1
    assert np.max(np.abs(out - (x + add))) < 1e-12


def test_permutation_invariance():
    prng = Prng(7)
    params = DualAttentionParams.init(D, prng, gate1=1.0, gate2=0.8)
    table = make_table()
    x = prng.gaussian((6, D))
    instr = tokenize_embed("brighten this dark image please now", table)
    aux = tokenize_embed("a dim indoor scene with heavy shadow", table)
    base = dual_cross_attention(x, instr, aux, params)
    perm = Prng(8)._gen.permutation(cond.MAX_TOKENS)
    instr_p = PromptEmbedding(tokens=instr.tokens[perm], null=False)
    aux_p = PromptEmbedding(tokens=aux.tokens[perm], null=False)
    assert np.max(np.abs(dual_cross_attention(x, instr_p, aux_p, params) - base)) < 1e-12


def test_attention_rows_sum_to_one():
    prng = Prng(9)
    params = DualAttentionParams.init(D, prng)
    x = prng.gaussian((12, D))
    tok = prng.gaussian((16, D))
    attn = attention_weights(x, tok, params.wq1, params.wk1)
    assert np.max(np.abs(attn.sum(axis=-1) - 1.0)) < 1e-9
    assert np.all(attn >= 0)


def test_dimension_mismatch_rejected():
    prng = Prng(10)
    params = DualAttentionParams.init(D, prng)
    instr = PromptEmbedding(tokens=np.zeros((4, D)), null=False)
    bad_aux = PromptEmbedding(tokens=np.zeros((4, D + 1)), null=False)
    with pytest.raises(InvalidArgumentError):
        dual_cross_attention(np.zeros((3, D)), instr, bad_aux, params)
    with pytest.raises(InvalidArgumentError):
        tokenize_embed("x", np.zeros((10, D)))


def test_bundle_variant_drops_aux_with_instruction():
    table = make_table()
    bundle = cond.ConditioningBundle(
        instruction=tokenize_embed("fix it", table),
        auxiliary=tokenize_embed("a photo", table),
        image_latent=np.zeros((8, 8, 4)))
    v = bundle.variant(drop_text=True)
    assert v.drop_instruction and v.drop_auxiliary and not v.drop_image
    w = bundle.variant(drop_image=True)
    assert w.drop_image and not w.drop_instruction
