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

"""Deterministic CSV and JSON reports."""

import csv
import hashlib
import json
from collections import namedtuple

FORMATS = ("csv", "json")

Report = namedtuple(
    "Report", "command inputs_digest invocation columns rows format"
)


def format_value(value):
    """Format a cell without locale or platform dependence."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return f"{value:d}"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def inputs_digest(contents, invocation):
    """Hash input contents and the options that shaped a report."""
    digest = hashlib.sha256()
    for content in contents:
        if isinstance(content, str):
            content = content.encode("utf-8")
        digest.update(hashlib.sha256(content).digest())
    digest.update(
        json.dumps(invocation, sort_keys=True, separators=(",", ":")).encode(
            "utf-8"
        )
    )
    return digest.hexdigest()


def _write_csv(report, stream, comment_header):
    writer = csv.writer(stream, lineterminator="\n")
    if comment_header:
        stream.write("# " + ",".join(report.columns) + "\n")
    else:
        writer.writerow(report.columns)
    for row in report.rows:
        writer.writerow([format_value(row.get(c)) for c in report.columns])


def _json_value(value):
    if isinstance(value, bool):
        return int(value)
    return value


def _write_json(report, stream):
    document = {
        "command": report.command,
        "inputs_digest": report.inputs_digest,
        "invocation": report.invocation,
        "columns": list(report.columns),
        "rows": [
            {c: _json_value(row.get(c)) for c in report.columns}
            for row in report.rows
        ],
    }
    stream.write(json.dumps(document, indent=2) + "\n")


def output_report(report, stream, emit=None):
    """Write a report to a stream.

    ``emit="gnuplot-data"`` writes the CSV rows under a comment header.
    """
    if emit == "gnuplot-data":
        _write_csv(report, stream, comment_header=True)
    elif report.format == "json":
        _write_json(report, stream)
    else:
        _write_csv(report, stream, comment_header=False)
