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

"""Analyses behind the command line interface.

Each command returns a Report whose rows follow the declared order of
models, devices and sequence lengths.
"""

import errno
import logging
import os
import pkgutil

from memwall import cost_model, roofline, train_memory, trends
from memwall.model_spec import Workload, dump_config, load_config
from memwall.presets import preset, preset_names
from memwall.report import Report, inputs_digest
from memwall.errors import UndecodableInput, ValidationError

BUNDLED_DATA = {"trends": "data/trends.csv", "hardware": "data/hardware.csv"}


def _missing(reference, what):
    return FileNotFoundError(
        errno.ENOENT, f"No such {what}", reference
    )


def read_text(path):
    """Read an input file."""
    with open(path, "rb") as input_file:
        data = input_file.read()
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as error:
        raise UndecodableInput(path, error.start) from error


def load_model(reference):
    """Load a model from a file, or from a preset when no file exists."""
    if os.path.exists(reference):
        text = read_text(reference)
        return load_config(text), text
    if reference in preset_names():
        config = preset(reference)
        return config, dump_config(config)
    raise _missing(reference, "model file or preset")


def _bundled(name):
    return pkgutil.get_data("memwall", BUNDLED_DATA[name]).decode("utf-8")


def _is_document(text):
    """Tell a hardware document from a CSV by its first content line."""
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            return line.startswith("{")
    return False


def load_devices(reference, names=()):
    """Load hardware from a CSV, a document or a bundled device name."""
    if os.path.exists(reference):
        text = read_text(reference)
        if _is_document(text):
            devices = [roofline.load_hardware_document(text)]
        else:
            devices = roofline.load_hardware_csv(text)
    else:
        text = _bundled("hardware")
        devices = roofline.load_hardware_csv(text)
        if reference != "hardware":
            try:
                devices = [roofline.find_device(devices, reference)]
            except LookupError:
                raise _missing(reference, "hardware file or device") from None
    if names:
        devices = [roofline.find_device(devices, name) for name in names]
    return devices, text


def load_trend_rows(reference=None):
    """Load trend observations from a CSV or the bundled data."""
    if reference is None:
        reference = "trends"
    if os.path.exists(reference):
        text = read_text(reference)
    elif reference in BUNDLED_DATA:
        text = _bundled(reference)
    else:
        raise _missing(reference, "trend file")
    return trends.load_trend_csv(text), text


def parse_counts(text, name="seq", minimum=1):
    """Parse a comma separated list of counts not below minimum."""
    values = []
    for item in str(text).split(","):
        try:
            value = int(item.strip())
        except ValueError:
            raise ValidationError(f"--{name}: not a count: {item!r}") from None
        if value < minimum:
            raise ValidationError(f"--{name}: must be >= {minimum}: {value}")
        values.append(value)
    return values


def parse_sparsity(text):
    """Parse a pruned fraction, or the name of a sparsity pattern."""
    if text in train_memory.PRUNING_SPARSITY:
        return train_memory.PRUNING_SPARSITY[text]
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"--prune: not a fraction: {text!r}") from None


def workloads(seqs, batch=1, precision="int8", **flags):
    """Build one workload per sequence length, in the given order."""
    return [Workload(seq_len, batch, precision, **flags) for seq_len in seqs]


# pylint: disable=too-many-arguments,too-many-locals
def cmd_analyze(
    models,
    seqs=(128,),
    batch=1,
    precision="int8",
    mode=None,
    elementwise=False,
    include_embeddings=False,
    per_layer=False,
    prompt_len=0,
    fmt="csv",
):
    """Count FLOPs, MOPs and arithmetic intensity per sequence length."""
    invocation = {
        "models": list(models),
        "seq": list(seqs),
        "batch": batch,
        "precision": precision,
        "mode": mode,
        "elementwise": elementwise,
        "embeddings": include_embeddings,
        "per_layer": per_layer,
        "prompt_len": prompt_len,
    }
    contents = []
    rows = []
    for reference in models:
        config, text = load_model(reference)
        contents.append(text)
        model_mode = mode or config.arch_class
        for workload in workloads(
            seqs,
            batch,
            precision,
            include_embeddings=include_embeddings,
            elementwise=elementwise,
        ):
            cost = cost_model.forward_cost(
                config, workload, model_mode, prompt_len
            )
            key = {
                "model": config.name,
                "mode": model_mode,
                "seq_len": workload.seq_len,
            }
            if per_layer:
                rows.extend(
                    {
                        **key,
                        "kernel": kernel.kernel_name,
                        "flops": kernel.flops,
                        "mops": kernel.mops,
                        "weight_mops": kernel.weight_mops,
                        "arithmetic_intensity": kernel.arithmetic_intensity,
                    }
                    for kernel in cost.kernels
                )
                continue
            cache = 0
            if model_mode == "decoder":
                cache = cost_model.kv_cache_bytes(
                    config, workload, prompt_len + workload.seq_len
                )
            rows.append(
                {
                    **key,
                    "batch": workload.batch,
                    "precision": workload.precision,
                    "total_flops": cost.total_flops,
                    "total_mops": cost.total_mops,
                    "arithmetic_intensity": cost.arithmetic_intensity,
                    "kv_cache_bytes": cache,
                }
            )
    if per_layer:
        columns = (
            "model",
            "mode",
            "seq_len",
            "kernel",
            "flops",
            "mops",
            "weight_mops",
            "arithmetic_intensity",
        )
    else:
        columns = (
            "model",
            "mode",
            "seq_len",
            "batch",
            "precision",
            "total_flops",
            "total_mops",
            "arithmetic_intensity",
            "kv_cache_bytes",
        )
    return Report(
        "analyze",
        inputs_digest(contents, invocation),
        invocation,
        columns,
        rows,
        fmt,
    )


ROOFLINE_COLUMNS = (
    "model",
    "device",
    "mode",
    "seq_len",
    "total_flops",
    "total_mops",
    "arithmetic_intensity",
    "ridge_point",
    "compute_time",
    "memory_time",
    "latency",
    "bound",
    "normalized_latency",
    "max_trainable_params",
    "fits_training",
)


def cmd_roofline(
    models,
    hardware,
    devices=(),
    seqs=(128,),
    batch=1,
    precision="int8",
    mode=None,
    elementwise=False,
    include_embeddings=False,
    prompt_len=0,
    divisor=roofline.DEFAULT_DIVISOR,
    fmt="csv",
):
    """Estimate roofline latency of every model on every device.

    Latencies are normalized to the first model, per device and
    sequence length.
    """
    invocation = {
        "models": list(models),
        "hardware": hardware,
        "devices": list(devices),
        "seq": list(seqs),
        "batch": batch,
        "precision": precision,
        "mode": mode,
        "elementwise": elementwise,
        "embeddings": include_embeddings,
        "prompt_len": prompt_len,
        "divisor": divisor,
    }
    hw_list, hw_text = load_devices(hardware, devices)
    loaded = [load_model(reference) for reference in models]
    contents = [hw_text] + [text for _, text in loaded]
    rows = []
    for hw in hw_list:
        for workload in workloads(
            seqs,
            batch,
            precision,
            include_embeddings=include_embeddings,
            elementwise=elementwise,
        ):
            group = []
            for config, _ in loaded:
                model_mode = mode or config.arch_class
                cost = cost_model.forward_cost(
                    config, workload, model_mode, prompt_len
                )
                group.append(
                    (
                        config,
                        model_mode,
                        cost,
                        roofline.estimate_latency(cost, hw),
                    )
                )
            normalized = roofline.normalized_latency([g[3] for g in group])
            for (config, model_mode, cost, estimate), norm in zip(
                group, normalized
            ):
                rows.append(
                    {
                        "model": config.name,
                        "device": hw.name,
                        "mode": model_mode,
                        "seq_len": workload.seq_len,
                        "total_flops": cost.total_flops,
                        "total_mops": cost.total_mops,
                        "arithmetic_intensity": cost.arithmetic_intensity,
                        "ridge_point": estimate.ridge_intensity,
                        "compute_time": estimate.compute_time,
                        "memory_time": estimate.memory_time,
                        "latency": estimate.latency,
                        "bound": estimate.bound,
                        "normalized_latency": norm,
                        "max_trainable_params": roofline.max_trainable_params(
                            hw, divisor
                        ),
                        "fits_training": roofline.fits_for_training(
                            config, hw, divisor
                        ),
                    }
                )
    return Report(
        "roofline",
        inputs_digest(contents, invocation),
        invocation,
        ROOFLINE_COLUMNS,
        rows,
        fmt,
    )


TREND_REPORT_COLUMNS = (
    "metric",
    "points",
    "rate_per_2yr",
    "r_squared",
    "factor_over_20yr",
    "status",
)


def cmd_trends(
    source=None,
    metric="all",
    year_from=None,
    year_to=None,
    exclude_tags=(),
    fmt="csv",
):
    """Fit the growth rate of every (or one) metric."""
    invocation = {
        "source": source,
        "metric": metric,
        "from": year_from,
        "to": year_to,
        "exclude_tags": sorted(exclude_tags),
    }
    rows, text = load_trend_rows(source)
    rows = trends.filter_rows(rows, year_from, year_to, set(exclude_tags))
    if not rows:
        raise ValidationError("No trend observations left after filtering")
    database = trends.group_series(rows, None if metric == "all" else metric)
    table = []
    for headline in trends.headline_rates(database):
        fit = headline.fit
        table.append(
            {
                "metric": headline.metric_name,
                "points": headline.points,
                "rate_per_2yr": fit.rate_per_2yr if fit else None,
                "r_squared": fit.r_squared if fit else None,
                "factor_over_20yr": (
                    trends.factor_over(fit, 20) if fit else None
                ),
                "status": "ok" if fit else "degenerate",
            }
        )
    return Report(
        "trends",
        inputs_digest([text], invocation),
        invocation,
        TREND_REPORT_COLUMNS,
        table,
        fmt,
    )


def cmd_memory(
    models,
    optimizer="adam",
    param_bytes=4,
    state_bytes=4,
    checkpoint_every=None,
    checkpoint_sweep=False,
    c_lin=train_memory.C_LIN,
    weight_bits=None,
    seqs=(128,),
    batch=1,
    precision="int8",
    fmt="csv",
    sparsity=None,
):
    """Training memory footprint and rematerialization trade-off."""
    invocation = {
        "models": list(models),
        "optimizer": optimizer,
        "param_bytes": param_bytes,
        "state_bytes": state_bytes,
        "checkpoint_every": checkpoint_every,
        "checkpoint_sweep": checkpoint_sweep,
        "c_lin": c_lin,
        "weight_bits": weight_bits,
        "sparsity": sparsity,
        "seq": list(seqs),
        "batch": batch,
        "precision": precision,
    }
    opt = train_memory.OptimizerKind(optimizer)
    contents = []
    rows = []
    for reference in models:
        config, text = load_model(reference)
        contents.append(text)
        for workload in workloads(seqs, batch, precision):
            key = {
                "model": config.name,
                "seq_len": workload.seq_len,
                "batch": workload.batch,
            }
            if checkpoint_sweep:
                full = train_memory.activation_bytes(config, workload, c_lin)
                rows.extend(
                    {
                        **key,
                        "every_k": point.every_k,
                        "activations": full,
                        "checkpointed_activations": point.checkpointed_bytes,
                        "reduction": full / point.checkpointed_bytes,
                        "recompute_overhead": point.recompute_overhead,
                    }
                    for point in train_memory.checkpoint_tradeoff(
                        config, workload, c_lin
                    )
                )
                continue
            usage = train_memory.footprint(
                config, workload, opt, param_bytes, state_bytes, c_lin
            )
            row = {**key, "optimizer": opt.kind, **usage._asdict()}
            if checkpoint_every is not None:
                kept = train_memory.checkpointed_bytes(
                    config, workload, checkpoint_every, c_lin
                )
                row.update(
                    {
                        "every_k": checkpoint_every,
                        "checkpointed_activations": kept,
                        "checkpointed_total": usage.total
                        - usage.activations
                        + kept,
                        "recompute_overhead": train_memory.recompute_overhead(
                            config, checkpoint_every
                        ),
                        "recompute_flops": train_memory.recompute_flops(
                            config, workload, checkpoint_every
                        ),
                    }
                )
            if weight_bits is not None:
                row.update(
                    {
                        "weight_bits": weight_bits,
                        "quantized_weights": (
                            train_memory.quantized_weight_bytes(
                                config, weight_bits
                            )
                        ),
                        "compression_ratio": train_memory.compression_ratio(
                            8 * param_bytes, weight_bits
                        ),
                    }
                )
            if sparsity is not None:
                pruned = train_memory.pruned_weight_bytes(
                    config, sparsity, weight_bits or 8 * param_bytes
                )
                row.update(
                    {
                        "sparsity": sparsity,
                        "pruned_weights": pruned,
                        "pruning_ratio": usage.weights / pruned,
                    }
                )
            rows.append(row)
    logging.log(7, "memory: %d rows", len(rows))
    return Report(
        "memory",
        inputs_digest(contents, invocation),
        invocation,
        _memory_columns(
            checkpoint_sweep, checkpoint_every, weight_bits, sparsity
        ),
        rows,
        fmt,
    )


def _memory_columns(checkpoint_sweep, checkpoint_every, weight_bits, sparsity):
    if checkpoint_sweep:
        return (
            "model",
            "seq_len",
            "batch",
            "every_k",
            "activations",
            "checkpointed_activations",
            "reduction",
            "recompute_overhead",
        )
    columns = [
        "model",
        "optimizer",
        "seq_len",
        "batch",
        "weights",
        "gradients",
        "optimizer_state",
        "activations",
        "total",
    ]
    if checkpoint_every is not None:
        columns.extend(
            [
                "every_k",
                "checkpointed_activations",
                "checkpointed_total",
                "recompute_overhead",
                "recompute_flops",
            ]
        )
    if weight_bits is not None:
        columns.extend(
            ["weight_bits", "quantized_weights", "compression_ratio"]
        )
    if sparsity is not None:
        columns.extend(["sparsity", "pruned_weights", "pruning_ratio"])
    return tuple(columns)
