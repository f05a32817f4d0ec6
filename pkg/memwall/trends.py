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

"""Exponential growth rates of hardware and model metrics.

Rates are fitted by ordinary least squares of log2(value) against the
calendar year and presented as a multiplicative factor per two years.
"""

import csv
import io
import logging
import math
import pkgutil
from collections import namedtuple

import numpy as np

from memwall.errors import (
    DegenerateFit,
    TrendFileError,
    UnknownMetric,
    ValidationError,
)

TREND_COLUMNS = ("metric", "year", "value")
WIDE_KEY_COLUMNS = ("name", "year")

TrendRow = namedtuple("TrendRow", "metric year value tag label lineno")

TrendFit = namedtuple(
    "TrendFit", "rate_per_2yr slope_log2_per_year intercept_log2 r_squared"
)

HeadlineRate = namedtuple("HeadlineRate", "metric_name points fit error")


class TrendSeries(namedtuple("TrendSeries", "metric_name points")):
    """Observations (year, value) of a single metric."""

    def __new__(cls, metric_name, points):
        """Validate and initialize the namedtuple."""
        points = tuple((float(year), float(value)) for year, value in points)
        for year, value in points:
            if not value > 0:
                raise ValidationError(
                    f"{metric_name}: non-positive value {value} at {year}"
                )
        return super().__new__(cls, metric_name, points)


def fit_rate(series):
    """Fit the growth rate of a series."""
    years = np.array([year for year, _ in series.points], dtype=float)
    if np.unique(years).size < 2:
        raise DegenerateFit(series.metric_name)
    logs = np.log2(np.array([value for _, value in series.points]))
    center = years.mean()
    slope, level = (float(c) for c in np.polyfit(years - center, logs, 1))
    intercept = level - slope * float(center)
    residuals = logs - (slope * (years - center) + level)
    deviations = logs - logs.mean()
    ss_tot = float(np.dot(deviations, deviations))
    ss_res = float(np.dot(residuals, residuals))
    r_squared = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    fit = TrendFit(
        2.0 ** (2.0 * slope), slope, intercept, min(1.0, max(0.0, r_squared))
    )
    logging.log(7, "%s: %r", series.metric_name, fit)
    return fit


def factor_over(fit, years):
    """Growth factor accumulated over a number of years."""
    return fit.rate_per_2yr ** (years / 2)


def headline_rates(database):
    """Fit every series; degenerate series are reported, not fatal."""
    if not database:
        raise ValidationError("No trend series to fit")
    table = []
    for series in database:
        try:
            table.append(
                HeadlineRate(
                    series.metric_name,
                    len(series.points),
                    fit_rate(series),
                    None,
                )
            )
        except DegenerateFit as error:
            logging.warning("%s", error)
            table.append(
                HeadlineRate(
                    series.metric_name, len(series.points), None, str(error)
                )
            )
    return table


def _number(cell, lineno, column):
    try:
        value = float(cell)
    except ValueError as error:
        raise TrendFileError(
            lineno, f"{column} is not a number: {cell!r}"
        ) from error
    if not math.isfinite(value):
        raise TrendFileError(lineno, f"{column} is not finite: {cell!r}")
    return value


def _long_rows(reader, header):
    index = {column: header.index(column) for column in header}
    for cells in reader:
        if not cells or cells[0].startswith("#"):
            continue
        lineno = reader.line_num
        if len(cells) != len(header):
            raise TrendFileError(
                lineno, f"expected {len(header)} fields, got {len(cells)}"
            )

        def cell(column, cells=cells):
            return cells[index[column]].strip() if column in index else ""

        if not cell("metric"):
            raise TrendFileError(lineno, "empty metric")
        yield TrendRow(
            cell("metric"),
            _number(cell("year"), lineno, "year"),
            _number(cell("value"), lineno, "value"),
            cell("tag"),
            cell("label"),
            lineno,
        )


def _wide_rows(reader, header):
    """Melt a hardware table: one series per numeric column."""
    metrics = [c for c in header if c not in WIDE_KEY_COLUMNS]
    for cells in reader:
        if not cells or cells[0].startswith("#"):
            continue
        lineno = reader.line_num
        if len(cells) != len(header):
            raise TrendFileError(
                lineno, f"expected {len(header)} fields, got {len(cells)}"
            )
        row = dict(zip(header, (c.strip() for c in cells)))
        year = _number(row["year"], lineno, "year")
        for metric in metrics:
            if row[metric]:
                yield TrendRow(
                    metric,
                    year,
                    _number(row[metric], lineno, metric),
                    "",
                    row["name"],
                    lineno,
                )


def load_trend_csv(text):
    """Parse trend observations.

    The long form has a ``metric,year,value`` header and optional ``tag``
    and ``label`` columns. A hardware table (``name,year,...``) is also
    accepted, each numeric column becoming a metric.
    """
    reader = csv.reader(io.StringIO(text))
    header = None
    for cells in reader:
        if cells and not cells[0].startswith("#"):
            header = [c.strip() for c in cells]
            break
    if header is None:
        raise TrendFileError(1, "missing header")
    if all(column in header for column in TREND_COLUMNS):
        rows = list(_long_rows(reader, header))
    elif all(column in header for column in WIDE_KEY_COLUMNS):
        rows = list(_wide_rows(reader, header))
    else:
        raise TrendFileError(
            reader.line_num, f"header must hold {','.join(TREND_COLUMNS)}"
        )
    for row in rows:
        if not row.value > 0:
            raise TrendFileError(row.lineno, f"non-positive value {row.value}")
    return rows


def bundled_trends():
    """Return the observations shipped with memwall."""
    return load_trend_csv(
        pkgutil.get_data("memwall", "data/trends.csv").decode("utf-8")
    )


def filter_rows(rows, year_from=None, year_to=None, exclude_tags=()):
    """Keep rows inside [year_from, year_to] whose tag is not excluded."""
    kept = []
    for row in rows:
        if year_from is not None and row.year < year_from:
            continue
        if year_to is not None and row.year > year_to:
            continue
        if row.tag and row.tag in exclude_tags:
            logging.log(7, "Excluding %s (%s)", row.label, row.tag)
            continue
        kept.append(row)
    return kept


def group_series(rows, metric=None):
    """Group rows into series, in order of first appearance."""
    grouped = {}
    for row in rows:
        grouped.setdefault(row.metric, []).append((row.year, row.value))
    if metric is not None:
        if metric not in grouped:
            raise UnknownMetric(metric)
        grouped = {metric: grouped[metric]}
    return [TrendSeries(name, points) for name, points in grouped.items()]
