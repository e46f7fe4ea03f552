"""Tests for canonical JSON serialization, profile parsing, and CSV output."""

import json
import math
from fractions import Fraction as F

import numpy as np
import pytest

from specdens.dyson import DensityCurve, empirical_exponents
from specdens.errors import NegativeEntryError, NotSymmetricError
from specdens.montecarlo import EnsembleConfig, run_sweep
from specdens.report import (
    canonical_json,
    classification_document,
    density_csv,
    fraction_str,
    parse_profile_text,
    scaling_table_csv,
    sweep_csv,
)

ARROW = [[1.0, 1.0], [1.0, 0.0]]
NOSUPPORT3 = [[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]]


# --- canonical JSON ---------------------------------------------------------------


def test_keys_sorted_and_floats_formatted():
    text = canonical_json({"b": 1.0, "a": 0.5, "c": [1, None, True]})
    assert text == '{"a": 0.5, "b": 1, "c": [1, null, true]}'


def test_fraction_serialization():
    assert fraction_str(F(2, 3)) == "2/3"
    assert fraction_str(F(2, 4)) == "1/2"
    assert fraction_str(F(0)) == "0/1"
    assert fraction_str(F(-1, 3)) == "-1/3"
    assert canonical_json({"x": F(-2, 6)}) == '{"x": "-1/3"}'


def test_non_finite_floats_become_strings():
    assert canonical_json([math.inf, -math.inf, math.nan]) == '["inf", "-inf", "nan"]'


def test_negative_zero_normalized():
    text = canonical_json({"x": -0.0})
    assert text == '{"x": 0}'
    assert canonical_json(json.loads(text)) == text


def test_round_trip_is_byte_identical():
    doc = {
        "tiny": 1e-300,
        "big": 1.23456789012e17,
        "neg": -0.030303030303,
        "frac": F(7, 9),
        "nested": {"z": [1, 2.5, "s"], "a": None},
        "twelve": 0.308202345678,
    }
    text = canonical_json(doc)
    assert canonical_json(json.loads(text)) == text


def test_rejects_unserializable():
    with pytest.raises(TypeError):
        canonical_json({"x": object()})
    with pytest.raises(TypeError):
        canonical_json({1: "non-string key"})


# --- profile parsing --------------------------------------------------------------


def test_parse_csv_profile():
    p = parse_profile_text("1,1\n1,0\n")
    assert p.k == 2
    assert p.entries[1, 1] == 0.0  # exact zero preserved


def test_parse_json_profile():
    p = parse_profile_text('{"K": 2, "entries": [[1, 1], [1, 0]]}')
    assert p.k == 2


def test_parse_rejects_bad_input():
    with pytest.raises(ValueError):
        parse_profile_text("")
    with pytest.raises(ValueError):
        parse_profile_text("{not json")
    with pytest.raises(ValueError):
        parse_profile_text('{"K": 3, "entries": [[1]]}')
    with pytest.raises(ValueError):
        parse_profile_text("1,two\n3,4\n")
    with pytest.raises(NotSymmetricError):
        parse_profile_text("1,2\n3,4\n")
    with pytest.raises(NegativeEntryError):
        parse_profile_text("1,-1\n-1,1\n")


# --- classification documents -----------------------------------------------------


def test_document_supported_profile():
    doc = classification_document(ARROW)
    assert doc["schema"] == 1
    assert doc["support_class"] == "SupportOnly"
    assert doc["kappa"] is None
    assert doc["sigma"] == "1/3"
    assert doc["Q"] == 3
    assert doc["f"] == ["-1/3", "1/3"]
    assert doc["longest_chain"] == {"length": 1, "witness": [0, 1]}
    assert doc["relation_edges"] == [[0, 1]]


def test_document_flat_profile():
    doc = classification_document(np.ones((4, 4)))
    assert doc["support_class"] == "TotalSupport"
    assert doc["sigma"] == "0/1"
    assert doc["block_dims"] == [4]


def test_document_no_support_profile():
    doc = classification_document(NOSUPPORT3)
    assert doc["support_class"] == "NoSupport"
    assert doc["kappa"] == "1/3"
    assert doc["sigma"] is None
    assert doc["mask"] is None
    assert doc["block_dims"] is not None  # three-block decomposition sizes


# --- CSV --------------------------------------------------------------------------


def test_scaling_table_csv():
    fit = empirical_exponents(ARROW, eta_min=1e-6, eta_max=1e-3)
    text = scaling_table_csv(fit)
    lines = text.strip().splitlines()
    assert lines[0] == "block,f_pred,slope_fit,abs_err"
    assert len(lines) == 3
    assert lines[1].startswith("0,-1/3,")


def test_density_csv():
    curve = DensityCurve(
        tau=np.array([0.0, 0.5]), rho=np.array([0.25, 0.125]), epsilon=1e-6
    )
    assert density_csv(curve) == "tau,rho\n0,0.25\n0.5,0.125\n"


def test_sweep_csv():
    rep = run_sweep(EnsembleConfig(ARROW, (4, 8), trials=3, master_seed=1))
    lines = sweep_csv(rep).strip().splitlines()
    assert lines[0] == "size_n,dim_N,mean_smin,stderr_smin,mean_cond"
    assert lines[1].startswith("4,8,")
    assert lines[2].startswith("8,16,")
