# This file is part of memwall
#
# Copyright (C) 2023 The memwall authors
#
# This software is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This software is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this software.  If not, see <https://www.gnu.org/licenses/>.

"""Tests for model descriptions, presets and model documents."""

import pytest

from memwall.model_spec import (
    TransformerConfig,
    Workload,
    dump_config,
    load_config,
    param_count,
)
from memwall.presets import preset, preset_names
from memwall.errors import (
    DocumentError,
    DocumentSyntaxError,
    DuplicateField,
    InvalidCharacter,
    InvalidDimension,
    InvalidFieldValue,
    MissingField,
    UnknownField,
    UnknownPreset,
    ValidationError,
)

BERT_BASE_DOCUMENT = """
# BERT-Base without an explicit FFN width.
{
  "name": "bert-base",
  "num_layers": 12,
  "hidden_dim": 768,
  "num_heads": 12,
  "vocab_size": 30522,
  "max_positions": 512,
  "arch_class": "encoder"
}
"""


def test_load_config_defaults_ffn_dim():
    config = load_config(BERT_BASE_DOCUMENT)
    assert config.num_layers == 12
    assert config.ffn_dim == 3072
    assert config == preset("bert-base")


def test_load_config_rejects_indivisible_heads():
    with pytest.raises(ValidationError):
        load_config(BERT_BASE_DOCUMENT.replace("768", "770"))


@pytest.mark.parametrize("source", ["", "   \n# only a comment\n"])
def test_load_config_empty_document(source):
    with pytest.raises(DocumentSyntaxError):
        load_config(source)


def test_load_config_empty_object_misses_fields():
    with pytest.raises(MissingField):
        load_config("{}")


def test_unknown_field_is_named_with_its_line():
    source = BERT_BASE_DOCUMENT.replace('"num_heads"', '"num_head"')
    with pytest.raises(UnknownField) as error:
        load_config(source)
    assert error.value.field == "num_head"
    assert error.value.lineno == 7
    assert "num_head" in str(error.value)


def test_duplicate_field():
    source = BERT_BASE_DOCUMENT.replace(
        '"num_heads": 12,', '"num_heads": 12, "num_heads": 12,'
    )
    with pytest.raises(DuplicateField):
        load_config(source)


@pytest.mark.parametrize(
    "old,new",
    [
        ('"num_layers": 12', '"num_layers": 12.5'),
        ('"num_layers": 12', '"num_layers": "12"'),
        ('"num_layers": 12', '"num_layers": true'),
        ('"name": "bert-base"', '"name": 7'),
    ],
)
def test_wrong_value_types_name_the_field(old, new):
    with pytest.raises(InvalidFieldValue) as error:
        load_config(BERT_BASE_DOCUMENT.replace(old, new))
    assert error.value.field in old


def test_nested_values_are_rejected():
    with pytest.raises(InvalidCharacter):
        load_config(BERT_BASE_DOCUMENT.replace("12,", "[12],", 1))


def test_missing_comma_is_a_syntax_error():
    with pytest.raises(DocumentError):
        load_config(
            BERT_BASE_DOCUMENT.replace('"num_layers": 12,', '"num_layers": 12')
        )


def test_null_ffn_dim_means_default():
    source = BERT_BASE_DOCUMENT.replace(
        '"num_heads": 12,', '"num_heads": 12, "ffn_dim": null,'
    )
    assert load_config(source).ffn_dim == 3072


def test_zero_layers_is_invalid():
    with pytest.raises(InvalidDimension):
        load_config(
            BERT_BASE_DOCUMENT.replace('"num_layers": 12', '"num_layers": 0')
        )


def test_invalid_arch_class():
    with pytest.raises(ValidationError):
        TransformerConfig("x", 1, 4, 2, arch_class="seq2seq")


@pytest.mark.parametrize("name", ["bert-base", "bert-large", "gpt2"])
def test_dump_then_load_is_identity(name):
    config = preset(name)
    assert load_config(dump_config(config)) == config


def test_round_trip_keeps_explicit_ffn_dim():
    config = TransformerConfig(
        "odd", 3, 48, 6, ffn_dim=100, vocab_size=7, max_positions=9
    )
    assert load_config(dump_config(config)) == config


def test_param_count_unit_case():
    config = TransformerConfig("unit", 1, 1, 1, ffn_dim=4)
    assert param_count(config) == 12


def test_param_count_bert_base():
    config = preset("bert-base")
    assert param_count(config) == 84_934_656
    assert param_count(config, include_embeddings=True) == (
        84_934_656 + 30522 * 768 + 512 * 768
    )


@pytest.mark.parametrize(
    "name,published",
    [("bert-base", 110e6), ("bert-large", 340e6), ("gpt2", 124e6)],
)
def test_presets_match_published_sizes(name, published):
    count = param_count(preset(name), include_embeddings=True)
    assert abs(count - published) / published <= 0.05


def test_gpt2_and_bert_base_share_the_stack():
    gpt2, bert = preset("gpt2"), preset("bert-base")
    assert (gpt2.num_layers, gpt2.hidden_dim, gpt2.num_heads) == (
        bert.num_layers,
        bert.hidden_dim,
        bert.num_heads,
    )
    assert gpt2.arch_class == "decoder"
    assert bert.arch_class == "encoder"
    assert param_count(gpt2) == param_count(bert)


def test_unknown_preset():
    assert set(preset_names()) == {"bert-base", "bert-large", "gpt2"}
    with pytest.raises(UnknownPreset):
        preset("t5")


@pytest.mark.parametrize(
    "field", ["num_layers", "hidden_dim", "ffn_dim", "vocab_size"]
)
def test_param_count_is_monotone(field):
    base = dict(
        name="m",
        num_layers=2,
        hidden_dim=8,
        num_heads=2,
        ffn_dim=32,
        vocab_size=10,
        max_positions=4,
    )
    grown = dict(base, **{field: base[field] * 2})
    for embeddings in (False, True):
        assert param_count(
            TransformerConfig(**grown), embeddings
        ) >= param_count(TransformerConfig(**base), embeddings)


def test_workload_defaults_and_precision():
    workload = Workload(128)
    assert workload.batch == 1
    assert workload.precision == "int8"
    assert workload.bytes_per_elem == 1
    assert Workload(1, precision="fp16").bytes_per_elem == 2
    assert Workload(1, precision="fp32").bytes_per_elem == 4


@pytest.mark.parametrize(
    "args,kwargs",
    [((0,), {}), ((1,), {"batch": 0}), ((1,), {"precision": "int4"})],
)
def test_workload_invariants(args, kwargs):
    with pytest.raises(ValidationError):
        Workload(*args, **kwargs)
