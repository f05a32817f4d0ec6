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

"""Roofline latency estimates and the memory-wall access-time model."""

import csv
import io
import logging
import math
import pkgutil
from collections import namedtuple
from fractions import Fraction

from memwall.docparser import FieldSpec, read_fields
from memwall.model_spec import param_count
from memwall.errors import (
    DomainError,
    InvalidFieldValue,
    MissingField,
    NoThreshold,
    UnknownDevice,
    UnknownField,
    ValidationError,
)

BALANCED_EPSILON = 0.01
DEFAULT_DIVISOR = 6

COMPUTE_BOUND = "compute_bound"
MEMORY_BOUND = "memory_bound"
BALANCED = "balanced"

HARDWARE_SCHEMA = {
    "name": FieldSpec("text"),
    "year": FieldSpec("real"),
    "peak_flops": FieldSpec("real"),
    "dram_bw": FieldSpec("real"),
    "mem_capacity": FieldSpec("real"),
    "interconnect_bw": FieldSpec("real", required=False),
}


class HardwareSpec(
    namedtuple(
        "HardwareSpec",
        "name year peak_flops dram_bw mem_capacity interconnect_bw",
    )
):
    """Peak compute, memory bandwidth and capacity of a device."""

    # pylint: disable=too-many-arguments
    def __new__(
        cls,
        name,
        year,
        peak_flops,
        dram_bw,
        mem_capacity,
        interconnect_bw=None,
    ):
        """Validate and initialize the namedtuple."""
        for field, value in (
            ("peak_flops", peak_flops),
            ("dram_bw", dram_bw),
            ("mem_capacity", mem_capacity),
        ):
            if not 0 < value < math.inf:
                raise ValidationError(
                    f"{name}: {field} must be positive and finite"
                )
        if interconnect_bw is not None and not 0 < interconnect_bw < math.inf:
            raise ValidationError(
                f"{name}: interconnect_bw must be positive and finite"
            )
        return super().__new__(
            cls, name, year, peak_flops, dram_bw, mem_capacity, interconnect_bw
        )


RooflineEstimate = namedtuple(
    "RooflineEstimate",
    "compute_time memory_time latency bound ridge_intensity",
)


def ridge_point(hw):
    """Return the intensity (FLOPs/byte) where compute meets bandwidth."""
    return hw.peak_flops / hw.dram_bw


def estimate_latency(cost, hw, epsilon=BALANCED_EPSILON):
    """Bound the latency of a pass by the slower of compute and memory."""
    compute_time = cost.total_flops / hw.peak_flops
    memory_time = cost.total_mops / hw.dram_bw
    latency = max(compute_time, memory_time)
    if abs(compute_time - memory_time) <= epsilon * latency:
        bound = BALANCED
    elif memory_time > compute_time:
        bound = MEMORY_BOUND
    else:
        bound = COMPUTE_BOUND
    logging.log(
        7,
        "%s: compute=%g s memory=%g s (%s)",
        hw.name,
        compute_time,
        memory_time,
        bound,
    )
    return RooflineEstimate(
        compute_time, memory_time, latency, bound, ridge_point(hw)
    )


def normalized_latency(estimates, baseline_index=0):
    """Divide every latency by the latency of the baseline estimate."""
    if not 0 <= baseline_index < len(estimates):
        raise IndexError(f"Baseline index out of range:{baseline_index}")
    baseline = estimates[baseline_index].latency
    if not baseline > 0:
        raise DomainError("Baseline latency must be positive")
    return [estimate.latency / baseline for estimate in estimates]


def _exact(value):
    """Read a number as the decimal it was written as."""
    return Fraction(str(value))


def _check_hit_rate(hit_rate):
    if not 0 <= hit_rate <= 1:
        raise DomainError(f"hit_rate outside [0, 1]:{hit_rate}")


def avg_access_time(hit_rate, t_hit, t_miss):
    """Average access time of a cache backed by DRAM, in cycles."""
    _check_hit_rate(hit_rate)
    if not (t_hit > 0 and t_miss > 0):
        raise DomainError("Access times must be positive")
    hit_rate = _exact(hit_rate)
    average = hit_rate * _exact(t_hit) + (1 - hit_rate) * _exact(t_miss)
    return float(average)


def dram_dominance_threshold(hit_rate, t_compute):
    """Miss latency above which DRAM time alone exceeds compute time."""
    _check_hit_rate(hit_rate)
    if hit_rate == 1:
        raise NoThreshold()
    if not t_compute > 0:
        raise DomainError("t_compute must be positive")
    return float(_exact(t_compute) / (1 - _exact(hit_rate)))


def max_trainable_params(hw, divisor=DEFAULT_DIVISOR):
    """Upper bound on the parameters trainable within the device memory."""
    if isinstance(divisor, bool) or not isinstance(divisor, int):
        raise DomainError(f"divisor must be an integer:{divisor!r}")
    if divisor < 1:
        raise DomainError(f"divisor must be >= 1:{divisor}")
    return int(hw.mem_capacity) // divisor


def fits_for_training(config, hw, divisor=DEFAULT_DIVISOR):
    """Tell whether a model is below the trainable-parameter bound."""
    return param_count(config, include_embeddings=True) <= (
        max_trainable_params(hw, divisor)
    )


def load_hardware_document(source):
    """Load a HardwareSpec from a standalone hardware document."""
    return HardwareSpec(**read_fields(source, HARDWARE_SCHEMA))


def _hardware_rows(text):
    """Yield line numbers and cells of the data rows, header first."""
    reader = csv.reader(io.StringIO(text))
    for cells in reader:
        if not cells or cells[0].lstrip().startswith("#"):
            continue
        yield reader.line_num, [cell.strip() for cell in cells]


def _hardware_value(cell, lineno, name, spec):
    if spec.kind == "text":
        return cell
    try:
        value = float(cell)
    except ValueError as error:
        raise InvalidFieldValue(
            lineno, name, cell, "Expected number"
        ) from error
    if not math.isfinite(value):
        raise InvalidFieldValue(lineno, name, cell, "Expected finite number")
    return value


def load_hardware_csv(text):
    """Load HardwareSpec records, one per CSV row."""
    rows = _hardware_rows(text)
    header_line, header = next(rows, (1, []))
    for column in header:
        if column not in HARDWARE_SCHEMA:
            raise UnknownField(header_line, column)
    devices = []
    for lineno, cells in rows:
        row = dict(zip(header, cells))
        values = {}
        for name, spec in HARDWARE_SCHEMA.items():
            cell = row.get(name, "")
            if not cell:
                if spec.required:
                    raise MissingField(lineno, name)
                continue
            values[name] = _hardware_value(cell, lineno, name, spec)
        devices.append(HardwareSpec(**values))
    return devices


def bundled_hardware():
    """Return the devices shipped with memwall."""
    data = pkgutil.get_data("memwall", "data/hardware.csv")
    return load_hardware_csv(data.decode("utf-8"))


def find_device(devices, name):
    """Select a device by name."""
    for device in devices:
        if device.name == name:
            return device
    raise UnknownDevice(name)
