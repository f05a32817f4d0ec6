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

"""FLOP and memory-operation (MOP) accounting for Transformer inference.

Every kernel reads each input tensor once and writes each output tensor
once from/to main memory; no reuse across kernels is modeled. FLOPs count
the multiplication and the addition of a MAC separately.
"""

import logging
from collections import namedtuple

from memwall.model_spec import check_count
from memwall.errors import CountOverflow, DomainError, InvalidState

INT64_MAX = 2**63 - 1

# FLOPs per element of the elementwise kernels (only counted on request).
ELEMENTWISE_FLOPS = {
    "softmax": 5,
    "layernorm": 5,
    "gelu": 8,
    "residual_add": 1,
}


def _checked(name, value):
    if value < 0:
        raise DomainError(f"Negative count:{name}={value}")
    if value > INT64_MAX:
        raise CountOverflow(name, value)
    return value


class KernelCost(
    namedtuple("KernelCost", "kernel_name flops mops weight_mops")
):
    """FLOPs and bytes moved by a kernel.

    ``weight_mops`` is the share of ``mops`` spent reading weights.
    """

    def __new__(cls, kernel_name, flops, mops, weight_mops=0):
        """Validate and initialize the namedtuple."""
        return super().__new__(
            cls,
            kernel_name,
            _checked(f"{kernel_name}.flops", flops),
            _checked(f"{kernel_name}.mops", mops),
            _checked(f"{kernel_name}.weight_mops", weight_mops),
        )

    @property
    def arithmetic_intensity(self):
        """Return FLOPs per byte."""
        if not self.mops:
            raise DomainError(f"Kernel {self.kernel_name} moves no bytes")
        return self.flops / self.mops

    def scaled(self, factor):
        """Return the cost of running this kernel factor times."""
        return KernelCost(
            self.kernel_name,
            self.flops * factor,
            self.mops * factor,
            self.weight_mops * factor,
        )

    def renamed(self, kernel_name):
        """Return the same cost under another name."""
        return KernelCost(
            kernel_name, self.flops, self.mops, self.weight_mops
        )

    def plus(self, other):
        """Add the cost of another kernel."""
        return KernelCost(
            self.kernel_name,
            self.flops + other.flops,
            self.mops + other.mops,
            self.weight_mops + other.weight_mops,
        )


class CostBreakdown(
    namedtuple(
        "CostBreakdown", "kernels total_flops total_mops total_weight_mops"
    )
):
    """Per-kernel and total cost of a pass; totals are kernel sums."""

    @classmethod
    def from_kernels(cls, kernels):
        """Build a breakdown, summing kernels that share a name."""
        merged = {}
        for kernel in kernels:
            if kernel.kernel_name in merged:
                merged[kernel.kernel_name] = merged[kernel.kernel_name].plus(
                    kernel
                )
            else:
                merged[kernel.kernel_name] = kernel
        kernels = tuple(merged.values())
        return cls(
            kernels,
            _checked("total_flops", sum(k.flops for k in kernels)),
            _checked("total_mops", sum(k.mops for k in kernels)),
            _checked("total_weight_mops", sum(k.weight_mops for k in kernels)),
        )

    @property
    def arithmetic_intensity(self):
        """Return total FLOPs per total byte."""
        return arithmetic_intensity(self)

    def kernel(self, kernel_name):
        """Return the named kernel, or None."""
        for kernel in self.kernels:
            if kernel.kernel_name == kernel_name:
                return kernel
        return None


def merge(breakdowns):
    """Kernel-wise sum of several breakdowns, in first-seen order."""
    return CostBreakdown.from_kernels(
        kernel for breakdown in breakdowns for kernel in breakdown.kernels
    )


def arithmetic_intensity(cost):
    """Return total_flops / total_mops."""
    if not cost.total_mops:
        raise DomainError("Arithmetic intensity of a pass moving no bytes")
    return cost.total_flops / cost.total_mops


# pylint: disable=too-many-arguments
def matmul_cost(m, k, n, bytes_per_elem, kernel_name="matmul", weight=False):
    """Cost of an (m x k) @ (k x n) product.

    With ``weight`` set, the (k x n) operand is a weight matrix.
    """
    for name, value in (("m", m), ("k", k), ("n", n), ("b", bytes_per_elem)):
        check_count(name, value)
    return KernelCost(
        kernel_name,
        2 * m * k * n,
        (m * k + k * n + m * n) * bytes_per_elem,
        k * n * bytes_per_elem if weight else 0,
    )


def elementwise_cost(
    n_elems,
    flops_per_elem,
    reads,
    writes,
    bytes_per_elem,
    kernel_name="elementwise",
):
    """Cost of a kernel touching every element of its tensors once."""
    check_count("n_elems", n_elems)
    return KernelCost(
        kernel_name,
        n_elems * flops_per_elem,
        n_elems * (reads + writes) * bytes_per_elem,
    )


def _linear_kernels(config, rows, b):
    """Projections and FFN of one layer over ``rows`` token vectors."""
    d, ffn = config.hidden_dim, config.ffn_dim
    return [
        matmul_cost(rows, d, d, b, "qkv_projection", weight=True).scaled(3),
        matmul_cost(rows, d, d, b, "output_projection", weight=True),
        matmul_cost(rows, d, ffn, b, "ffn_up", weight=True),
        matmul_cost(rows, ffn, d, b, "ffn_down", weight=True),
    ]


def _attention_kernels(config, batch, queries, keys, b):
    """Per-head score and value products, folded over heads and batch."""
    heads = batch * config.num_heads
    head_dim = config.head_dim
    return [
        matmul_cost(queries, head_dim, keys, b, "attention_scores").scaled(
            heads
        ),
        matmul_cost(queries, keys, head_dim, b, "attention_values").scaled(
            heads
        ),
    ]


def _elementwise_kernels(config, batch, queries, keys, b):
    """Softmax, normalization, activation and residual kernels."""
    rows = batch * queries
    d = config.hidden_dim
    return [
        elementwise_cost(
            batch * config.num_heads * queries * keys,
            ELEMENTWISE_FLOPS["softmax"],
            1,
            1,
            b,
            "softmax",
        ),
        elementwise_cost(
            rows * d, ELEMENTWISE_FLOPS["layernorm"], 1, 1, b, "layernorm"
        ).scaled(2),
        elementwise_cost(
            rows * config.ffn_dim, ELEMENTWISE_FLOPS["gelu"], 1, 1, b, "gelu"
        ),
        elementwise_cost(
            rows * d,
            ELEMENTWISE_FLOPS["residual_add"],
            2,
            1,
            b,
            "residual_add",
        ).scaled(2),
    ]


def _embedding_kernel(config, rows, b):
    """Token plus position lookup for ``rows`` tokens."""
    lookup = elementwise_cost(rows * config.hidden_dim, 1, 2, 1, b)
    table_reads = 2 * rows * config.hidden_dim * b
    return KernelCost("embedding", lookup.flops, lookup.mops, table_reads)


def _stack(config, layer, elementwise, embedding=(), lm_head=()):
    """Repeat one layer's kernels over the stack, then add the ends."""
    layers = config.num_layers
    return CostBreakdown.from_kernels(
        [
            *embedding,
            *(kernel.scaled(layers) for kernel in layer),
            *(kernel.scaled(layers) for kernel in elementwise),
            *lm_head,
        ]
    )


def encoder_forward_cost(config, workload):
    """Cost of one forward pass over all S tokens (matrix-matrix)."""
    batch, seq_len = workload.batch, workload.seq_len
    b = workload.bytes_per_elem
    layer = _linear_kernels(config, batch * seq_len, b)
    layer[1:1] = _attention_kernels(config, batch, seq_len, seq_len, b)
    elementwise = []
    if workload.elementwise:
        elementwise = _elementwise_kernels(config, batch, seq_len, seq_len, b)
    embedding = []
    if workload.include_embeddings:
        embedding = [_embedding_kernel(config, batch * seq_len, b)]
    cost = _stack(config, layer, elementwise, embedding)
    logging.log(
        7,
        "encoder %s S=%d: flops=%d mops=%d",
        config.name,
        seq_len,
        cost.total_flops,
        cost.total_mops,
    )
    return cost


def decoder_step_cost(config, workload, kv_len):
    """Cost of generating one token with kv_len cached entries.

    The cache holds kv_len entries including the current token; all of
    them are read and the new K,V pair is written.
    """
    if isinstance(kv_len, bool) or not isinstance(kv_len, int) or kv_len < 1:
        raise InvalidState(f"Decoder step needs kv_len >= 1, got {kv_len!r}")
    batch, b = workload.batch, workload.bytes_per_elem
    layer = _linear_kernels(config, batch, b)
    layer[1:1] = _attention_kernels(config, batch, 1, kv_len, b)
    cache_write = 2 * kv_cache_row_bytes(config, workload)
    layer.append(KernelCost("kv_cache_write", 0, cache_write))
    elementwise = []
    if workload.elementwise:
        elementwise = _elementwise_kernels(config, batch, 1, kv_len, b)
    embedding, lm_head = [], []
    if workload.include_embeddings:
        embedding = [_embedding_kernel(config, batch, b)]
        lm_head = [
            matmul_cost(
                batch,
                config.hidden_dim,
                config.vocab_size,
                b,
                "lm_head",
                weight=True,
            )
        ]
    return _stack(config, layer, elementwise, embedding, lm_head)


def decoder_generate_cost(config, workload, prompt_len=0):
    """Cost of generating seq_len tokens one at a time.

    Without a prompt, generation starts from one token and an empty
    cache. A prompt is processed first as a matrix-matrix pass whose K,V
    entries are written to the cache.
    """
    check_count("prompt_len", prompt_len, minimum=0)
    passes = []
    if prompt_len:
        prompt = workload.with_seq_len(prompt_len)
        cache_write = KernelCost(
            "kv_cache_write", 0, kv_cache_bytes(config, prompt, prompt_len)
        )
        passes.append(encoder_forward_cost(config, prompt))
        passes.append(CostBreakdown.from_kernels([cache_write]))
    for kv_len in range(prompt_len + 1, prompt_len + workload.seq_len + 1):
        passes.append(decoder_step_cost(config, workload, kv_len))
    cost = merge(passes)
    logging.log(
        7,
        "decoder %s S=%d prompt=%d: flops=%d mops=%d",
        config.name,
        workload.seq_len,
        prompt_len,
        cost.total_flops,
        cost.total_mops,
    )
    return cost


def kv_cache_row_bytes(config, workload):
    """Bytes of one K (or V) entry across the batch, for one layer."""
    return workload.batch * config.hidden_dim * workload.bytes_per_elem


def kv_cache_bytes(config, workload, kv_len):
    """Resident size of a KV cache holding kv_len entries."""
    check_count("kv_len", kv_len, minimum=0)
    return (
        2 * config.num_layers * kv_cache_row_bytes(config, workload) * kv_len
    )


def forward_cost(config, workload, mode=None, prompt_len=0):
    """Dispatch to the encoder or decoder accounting."""
    mode = mode or config.arch_class
    if mode == "encoder":
        return encoder_forward_cost(config, workload)
    if mode == "decoder":
        return decoder_generate_cost(config, workload, prompt_len)
    raise DomainError(f"Invalid mode:{mode!r}")
