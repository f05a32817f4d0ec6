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

"""Published configurations of the case-study models."""

from memwall.model_spec import TransformerConfig
from memwall.errors import UnknownPreset


__presets = {
    "bert-base": {
        "num_layers": 12,
        "hidden_dim": 768,
        "num_heads": 12,
        "vocab_size": 30522,
        "max_positions": 512,
        "arch_class": "encoder",
    },
    "bert-large": {
        "num_layers": 24,
        "hidden_dim": 1024,
        "num_heads": 16,
        "vocab_size": 30522,
        "max_positions": 512,
        "arch_class": "encoder",
    },
    "gpt2": {
        "num_layers": 12,
        "hidden_dim": 768,
        "num_heads": 12,
        "vocab_size": 50257,
        "max_positions": 1024,
        "arch_class": "decoder",
    },
}


def preset_names():
    """Return the names of the known presets."""
    return tuple(__presets)


def preset(name):
    """Return the published configuration of a case-study model."""
    data = __presets.get(name)
    if data is None:
        raise UnknownPreset(name)
    return TransformerConfig(name, **data)
