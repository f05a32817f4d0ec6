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

"""Tests for the command line driver."""

import csv
import io
import json
import os

import pytest

from memwall.__main__ import (
    EXIT_IO_ERROR,
    EXIT_OVERFLOW,
    EXIT_VALIDATION_ERROR,
    main,
)

DATA = os.path.join(os.path.dirname(__file__), "data")


def data_file(name):
    """Path of a test input."""
    return os.path.join(DATA, name)


def run(capsys, *argv):
    """Run memwall, returning exit code, output and diagnostics."""
    status = main(list(argv))
    captured = capsys.readouterr()
    return status, captured.out, captured.err


def rows(capsys, *argv):
    """Run memwall and parse its CSV report."""
    status, out, err = run(capsys, *argv)
    assert status == 0, err
    return list(csv.DictReader(io.StringIO(out)))


def test_analyze_decoder_matches_the_cost_model(capsys):
    (row,) = rows(capsys, "analyze", "gpt2", "--mode", "decoder")
    assert row["model"] == "gpt2"
    assert row["seq_len"] == "128"
    assert row["total_flops"] == "22047621120"
    assert row["total_mops"] == "11052140544"
    assert row["kv_cache_bytes"] == "2359296"
    assert float(row["arithmetic_intensity"]) == pytest.approx(
        22047621120 / 11052140544, rel=1e-11
    )


def test_analyze_sweep_order(capsys):
    table = rows(capsys, "analyze", "bert-base", "--seq", "32,64,128,256,512")
    assert [row["seq_len"] for row in table] == [
        "32",
        "64",
        "128",
        "256",
        "512",
    ]


def test_precision_doubles_the_bytes(capsys):
    narrow = rows(capsys, "analyze", "gpt2", "--seq", "16,32")
    wide = rows(
        capsys, "analyze", "gpt2", "--seq", "16,32", "--precision", "fp16"
    )
    for small, large in zip(narrow, wide):
        assert large["total_flops"] == small["total_flops"]
        assert int(large["total_mops"]) == 2 * int(small["total_mops"])
        assert int(large["kv_cache_bytes"]) == 2 * int(small["kv_cache_bytes"])


def test_per_layer_rows(capsys):
    table = rows(
        capsys, "analyze", data_file("unit.json"), "--per-layer", "--seq", "1"
    )
    assert [row["kernel"] for row in table] == [
        "qkv_projection",
        "attention_scores",
        "attention_values",
        "output_projection",
        "ffn_up",
        "ffn_down",
    ]
    assert sum(int(row["flops"]) for row in table) == 28
    assert sum(int(row["mops"]) for row in table) == 36


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze", "bert-base", "gpt2", "--seq", "8,16", "--elementwise"],
        ["roofline", "bert-base", "gpt2", "--hardware", "hardware"],
        ["trends", "--exclude-tag", "recsys", "--format", "json"],
        ["memory", "bert-large", "--checkpoint-sweep", "--seq", "64"],
    ],
)
def test_output_is_deterministic(capsys, argv):
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first[0] == 0
    assert first == second


def test_json_report(capsys):
    status, out, _ = run(capsys, "analyze", "bert-base", "--format", "json")
    assert status == 0
    document = json.loads(out)
    assert document["command"] == "analyze"
    assert len(document["inputs_digest"]) == 64
    assert document["invocation"]["models"] == ["bert-base"]
    assert document["rows"][0]["total_flops"] == 22_347_251_712


def test_gnuplot_data(capsys):
    status, out, _ = run(
        capsys, "analyze", "bert-base", "--emit", "gnuplot-data"
    )
    assert status == 0
    assert out.startswith("# model,mode,seq_len,")


def test_roofline_single_model(capsys):
    table = rows(
        capsys, "roofline", "bert-base", "--hardware", "xeon_gold_6242"
    )
    assert len(table) == 1
    assert table[0]["device"] == "xeon_gold_6242"
    assert table[0]["normalized_latency"] == "1"


def test_roofline_orders_the_case_study(capsys):
    table = rows(
        capsys,
        "roofline",
        "bert-base",
        "bert-large",
        "gpt2",
        "--hardware",
        data_file("ridge100.json"),
    )
    latency = {row["model"]: float(row["normalized_latency"]) for row in table}
    assert latency["bert-base"] == 1.0
    assert max(latency, key=latency.get) == "gpt2"
    assert latency["gpt2"] >= 10
    bounds = {row["model"]: row["bound"] for row in table}
    assert bounds["gpt2"] == "memory_bound"
    assert bounds["bert-base"] == "compute_bound"


def test_roofline_device_selection(capsys):
    table = rows(
        capsys,
        "roofline",
        "gpt2",
        "--hardware",
        "hardware",
        "--device",
        "h100_sxm5",
        "--device",
        "tesla_v100_sxm2",
    )
    assert [row["device"] for row in table] == ["h100_sxm5", "tesla_v100_sxm2"]


def test_trends_exact_doubling(capsys):
    (row,) = rows(capsys, "trends", data_file("doubling.csv"))
    assert row == {
        "metric": "doubling",
        "points": "3",
        "rate_per_2yr": "2",
        "r_squared": "1",
        "factor_over_20yr": "1024",
        "status": "ok",
    }


def test_trends_bundled_peak_flops(capsys):
    (row,) = rows(
        capsys,
        "trends",
        "--metric",
        "peak_flops",
        "--from",
        "2003",
        "--to",
        "2023",
    )
    assert abs(float(row["rate_per_2yr"]) - 3.0) <= 0.3


def test_trends_degenerate_series_is_reported(capsys):
    table = rows(capsys, "trends", "--from", "2022", "--to", "2022.5")
    assert table
    assert {row["status"] for row in table} == {"degenerate"}
    assert all(row["rate_per_2yr"] == "" for row in table)


def test_memory_sgd(capsys):
    (row,) = rows(
        capsys,
        "memory",
        data_file("unit.json"),
        "--optimizer",
        "sgd",
        "--seq",
        "1",
    )
    assert row["optimizer_state"] == "0"
    assert (row["weights"], row["activations"], row["total"]) == (
        "56",
        "16",
        "128",
    )


def test_memory_checkpoint_every_layer(capsys):
    (row,) = rows(capsys, "memory", "bert-base", "--checkpoint-every", "1")
    assert row["every_k"] == "1"
    assert row["recompute_overhead"] == "0"
    assert row["recompute_flops"] == "0"


def test_memory_sweep_shape(capsys):
    table = rows(
        capsys,
        "memory",
        data_file("deep.json"),
        "--seq",
        "1",
        "--c-lin",
        "1",
        "--checkpoint-sweep",
    )
    assert [int(row["every_k"]) for row in table] == list(range(1, 101))
    memory = [int(row["checkpointed_activations"]) for row in table]
    best = memory.index(min(memory))
    assert best == 9
    divisors = [memory[k - 1] for k in (1, 2, 4, 5, 10)]
    assert divisors == sorted(divisors, reverse=True)
    assert memory[best:] == sorted(memory[best:])
    assert float(table[best]["reduction"]) == pytest.approx(5.0, rel=0.05)


def test_memory_quantized_weights(capsys):
    (row,) = rows(capsys, "memory", "bert-base", "--weight-bits", "4")
    assert row["compression_ratio"] == "8"
    assert int(row["quantized_weights"]) * 8 == int(row["weights"])


def test_missing_model_file(capsys):
    status, out, err = run(capsys, "analyze", data_file("absent.json"))
    assert status == EXIT_IO_ERROR
    assert out == ""
    assert "absent.json" in err


def test_missing_trend_file(capsys):
    status, _, _ = run(capsys, "trends", data_file("absent.csv"))
    assert status == EXIT_IO_ERROR


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze", "bert-base", "--seq", "0"],
        ["analyze", "bert-base", "--seq", "128,abc"],
        ["analyze", "bert-base", "--batch", "0"],
        ["memory", "bert-base", "--checkpoint-every", "13"],
        ["memory", "bert-base", "--weight-bits", "0"],
        ["trends", "--metric", "unknown"],
        ["trends", "--from", "3000"],
        ["roofline", "gpt2", "--hardware", "hardware", "--device", "abacus"],
    ],
)
def test_validation_errors(capsys, argv):
    status, out, err = run(capsys, *argv)
    assert status == EXIT_VALIDATION_ERROR
    assert out == ""
    assert err


def test_document_error_names_the_line(capsys):
    status, _, err = run(capsys, "analyze", data_file("typo.json"))
    assert status == EXIT_VALIDATION_ERROR
    assert "UnknownField:5:" in err
    assert "num_head" in err


def test_trend_error_names_the_line(capsys):
    status, _, err = run(capsys, "trends", data_file("bad_year.csv"))
    assert status == EXIT_VALIDATION_ERROR
    assert "TrendFileError:3:" in err


def test_count_overflow(capsys):
    status, out, err = run(
        capsys, "analyze", data_file("huge.json"), "--seq", "1"
    )
    assert status == EXIT_OVERFLOW
    assert out == ""
    assert "overflow" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze", "gpt2", "--speed", "fast"],
        ["analyze", "gpt2", "--precision", "fp64"],
        ["analyze", "gpt2", "--mode", "sideways"],
        ["memory", "gpt2", "--optimizer", "lamb"],
        ["trends", "--from", "soon"],
        [],
    ],
)
def test_bad_options_are_validation_errors(capsys, argv):
    with pytest.raises(SystemExit) as error:
        main(argv)
    assert error.value.code == EXIT_VALIDATION_ERROR
    assert "usage: memwall" in capsys.readouterr().err


def test_invalid_string_escape(capsys, tmp_path):
    model = tmp_path / "escape.json"
    model.write_text('{\n"name": "a\\q",\n"num_layers": 1\n}')
    status, out, err = run(capsys, "analyze", str(model))
    assert status == EXIT_VALIDATION_ERROR
    assert out == ""
    assert "DocumentSyntaxError:2:" in err


@pytest.mark.parametrize(
    "command,name",
    [("analyze", "latin1.json"), ("trends", "latin1.csv")],
)
def test_input_that_is_not_utf8(capsys, tmp_path, command, name):
    source = tmp_path / name
    source.write_bytes(b"metric,year,value\nx,2000,1\xff\n")
    status, out, err = run(capsys, command, str(source))
    assert status == EXIT_VALIDATION_ERROR
    assert out == ""
    assert "UndecodableInput:" in err
    assert "byte 26" in err


def test_memory_pruning(capsys):
    (row,) = rows(capsys, "memory", "bert-base", "--prune", "unstructured")
    assert row["sparsity"] == "0.8"
    assert float(row["pruning_ratio"]) == pytest.approx(5.0)
    (row,) = rows(
        capsys, "memory", "bert-base", "--prune", "0.5", "--weight-bits", "4"
    )
    assert int(row["pruned_weights"]) * 16 == int(row["weights"])


@pytest.mark.parametrize("fraction", ["1", "-0.5", "most"])
def test_memory_pruning_domain(capsys, fraction):
    status, out, _ = run(capsys, "memory", "gpt2", "--prune", fraction)
    assert status == EXIT_VALIDATION_ERROR
    assert out == ""


@pytest.mark.parametrize("value", ["inf", "nan", "-inf"])
def test_trend_values_must_be_finite(capsys, tmp_path, value):
    source = tmp_path / "series.csv"
    source.write_text(f"metric,year,value\nx,2000,1\nx,2002,{value}\n")
    status, out, err = run(capsys, "trends", str(source))
    assert status == EXIT_VALIDATION_ERROR
    assert out == ""
    assert "TrendFileError:3:" in err


HARDWARE_HEADER = "name,year,peak_flops,dram_bw,mem_capacity\n"


def test_hardware_values_must_be_finite(capsys, tmp_path):
    source = tmp_path / "devices.csv"
    source.write_text(
        HARDWARE_HEADER + "fast,2022,1e14,1e12,8e10\nodd,2022,inf,1e12,8e10\n"
    )
    status, out, err = run(
        capsys, "roofline", "gpt2", "--hardware", str(source)
    )
    assert status == EXIT_VALIDATION_ERROR
    assert out == ""
    assert "InvalidFieldValue:3:" in err


def test_hardware_csv_with_leading_comment(capsys, tmp_path):
    source = tmp_path / "devices.csv"
    source.write_text(
        "# devices\n" + HARDWARE_HEADER + "r,2022,1e14,1e12,8e10\n"
    )
    (row,) = rows(capsys, "roofline", "gpt2", "--hardware", str(source))
    assert row["device"] == "r"
