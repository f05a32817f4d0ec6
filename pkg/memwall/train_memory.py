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

"""Training memory footprint and activation checkpointing trade-off."""

import math
from collections import namedtuple
from fractions import Fraction

from memwall.model_spec import check_count, param_count
from memwall.cost_model import encoder_forward_cost
from memwall.errors import DomainError, ValidationError

# Extra per-parameter state tensors kept by each optimizer.
OPTIMIZER_STATE = {"sgd": 0, "sgd_momentum": 1, "adam": 2}

# Linear-path tensors a layer retains for its backward pass: the inputs
# and outputs of the six projections plus residual/normalization values.
C_LIN = 14

# Fraction of weights prunable without accuracy loss, by sparsity pattern.
PRUNING_SPARSITY = {"structured": 0.3, "unstructured": 0.8}

# Backward costs two forward passes, so training costs three.
TRAINING_FORWARD_MULTIPLE = 3


class OptimizerKind(namedtuple("OptimizerKind", "kind state_multiplier")):
    """An optimizer and the number of state tensors per parameter."""

    def __new__(cls, kind, state_multiplier=None):
        """Validate and initialize the namedtuple."""
        if kind not in OPTIMIZER_STATE:
            raise ValidationError(f"Unknown optimizer:{kind!r}")
        expected = OPTIMIZER_STATE[kind]
        if state_multiplier is not None and state_multiplier != expected:
            raise ValidationError(
                f"{kind} keeps {expected} state tensors, not "
                f"{state_multiplier}"
            )
        return super().__new__(cls, kind, expected)


class MemoryFootprint(
    namedtuple(
        "MemoryFootprint",
        "weights gradients optimizer_state activations total",
    )
):
    """Bytes needed to train a model, by component."""

    def __new__(cls, weights, gradients, optimizer_state, activations):
        """Initialize the namedtuple, deriving the total."""
        return super().__new__(
            cls,
            weights,
            gradients,
            optimizer_state,
            activations,
            weights + gradients + optimizer_state + activations,
        )


TradeoffPoint = namedtuple(
    "TradeoffPoint", "every_k checkpointed_bytes recompute_overhead"
)


def _check_c_lin(c_lin):
    if isinstance(c_lin, bool) or not isinstance(c_lin, int) or c_lin < 1:
        raise DomainError(f"c_lin must be a positive integer:{c_lin!r}")


def boundary_bytes(config, workload):
    """Bytes of the hidden state passed between two layers."""
    return (
        workload.batch
        * workload.seq_len
        * config.hidden_dim
        * workload.bytes_per_elem
    )


def layer_activation_bytes(config, workload, c_lin=C_LIN):
    """Bytes one layer keeps for its backward pass."""
    _check_c_lin(c_lin)
    batch, seq_len = workload.batch, workload.seq_len
    return (
        c_lin * batch * seq_len * config.hidden_dim
        + batch * config.num_heads * seq_len * seq_len
    ) * workload.bytes_per_elem


def activation_bytes(config, workload, c_lin=C_LIN):
    """Activation memory when every layer keeps all its tensors."""
    return config.num_layers * layer_activation_bytes(
        config, workload, c_lin
    ) + boundary_bytes(config, workload)


def _check_every_k(config, every_k):
    if isinstance(every_k, bool) or not isinstance(every_k, int):
        raise DomainError(f"every_k must be an integer:{every_k!r}")
    if not 1 <= every_k <= config.num_layers:
        raise DomainError(
            f"every_k must be in [1, {config.num_layers}]:{every_k}"
        )


def checkpointed_bytes(config, workload, every_k, c_lin=C_LIN):
    """Activation memory when only every k-th layer boundary is stored.

    The stored boundaries stay resident while one segment of every_k
    layers is rematerialized in full during the backward pass.
    """
    _check_every_k(config, every_k)
    segments = math.ceil(config.num_layers / every_k)
    return segments * boundary_bytes(
        config, workload
    ) + every_k * layer_activation_bytes(config, workload, c_lin)


def recompute_overhead(config, every_k):
    """Extra FLOPs of rematerialization relative to a training step.

    At most one more forward pass over (k-1)/k of the layers, against a
    baseline of forward plus backward.
    """
    _check_every_k(config, every_k)
    return (every_k - 1) / (TRAINING_FORWARD_MULTIPLE * every_k)


def recompute_flops(config, workload, every_k):
    """Forward FLOPs spent again because of rematerialization."""
    _check_every_k(config, every_k)
    forward = encoder_forward_cost(config, workload).total_flops
    return forward * (every_k - 1) // every_k


def checkpoint_tradeoff(config, workload, c_lin=C_LIN):
    """Memory against recompute for every valid checkpoint interval."""
    return [
        TradeoffPoint(
            every_k,
            checkpointed_bytes(config, workload, every_k, c_lin),
            recompute_overhead(config, every_k),
        )
        for every_k in range(1, config.num_layers + 1)
    ]


# pylint: disable=too-many-arguments
def footprint(
    config,
    workload,
    opt,
    param_bytes=4,
    state_bytes=4,
    c_lin=C_LIN,
):
    """Memory needed to train a model with the given optimizer."""
    check_count("param_bytes", param_bytes)
    check_count("state_bytes", state_bytes, minimum=0)
    params = param_count(config, include_embeddings=True)
    return MemoryFootprint(
        params * param_bytes,
        params * param_bytes,
        params * state_bytes * opt.state_multiplier,
        activation_bytes(config, workload, c_lin),
    )


def quantized_weight_bytes(config, bits):
    """Bytes of the model weights stored at the given bit width."""
    _check_bits(bits)
    bits_total = param_count(config, include_embeddings=True) * bits
    return -(-bits_total // 8)


def _check_bits(bits):
    check_count("bits", bits)
    if bits > 64:
        raise DomainError(f"Unsupported bit width:{bits}")


def pruned_weight_bytes(config, sparsity, bits=32):
    """Bytes of the weights left after pruning a fraction of them.

    The surviving parameters are rounded up to whole parameters, then
    to whole bytes. Index overhead of sparse formats is not counted.
    """
    _check_bits(bits)
    if isinstance(sparsity, bool) or not isinstance(sparsity, (int, float)):
        raise DomainError(f"sparsity must be a number:{sparsity!r}")
    if not 0 <= sparsity < 1:
        raise DomainError(f"sparsity must be in [0, 1):{sparsity}")
    params = param_count(config, include_embeddings=True)
    kept = math.ceil(params * (1 - Fraction(str(sparsity))))
    return -(-kept * bits // 8)


def compression_ratio(reference_bits, bits):
    """Footprint reduction of storing weights at bits instead of reference."""
    check_count("reference_bits", reference_bits)
    check_count("bits", bits)
    return reference_bits / bits
