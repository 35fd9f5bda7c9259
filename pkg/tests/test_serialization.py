import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nodal_lab import serialization as ser
from nodal_lab.extremal import ExtremalConfig, ExtremalContext, build_extremal, transplant
from nodal_lab.nadirashvili import Candidate, EstimatorConfig, minimize_area
from nodal_lab.sphere import SphericalHarmonicExpansion


@settings(max_examples=200, deadline=None)
@given(st.floats(allow_nan=False))
def test_float_roundtrip_is_exact(x):
    assert ser.parse(ser.fmt(x)) == x


def test_encode_rejects_unknown_types():
    with pytest.raises(TypeError):
        ser.encode(object())


def test_read_document_validates_header(tmp_path):
    p = tmp_path / "x.json"
    ser.write_document(p, ser.document("thing", {"a": 1.5}))
    assert ser.read_document(p, "thing")["data"] == {"a": "1.5"}
    with pytest.raises(ValueError, match="expected"):
        ser.read_document(p, "other")
    doc = json.loads(p.read_text())
    doc["version"] = 99
    p.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="version"):
        ser.read_document(p)


@pytest.fixture(scope="module")
def P16():
    return build_extremal(16, context=ExtremalContext(ExtremalConfig()))


def test_extremal_roundtrip(P16, tmp_path):
    p = tmp_path / "e.json"
    ser.write_document(p, ser.extremal_document(P16))
    Q = ser.extremal_from_document(ser.read_document(p, "extremal-polynomial"))
    assert np.array_equal(Q.coefficients, P16.coefficients)
    assert Q.r_N == P16.r_N and Q.R == P16.R
    z = np.array([0.1 + 0.2j, -0.5j])
    assert np.array_equal(Q(z), P16(z))
    # writing again is byte-identical
    assert ser.dumps(ser.extremal_document(Q)) == p.read_text()


def test_expansion_roundtrip(P16):
    e = transplant(P16).expansion()
    f = ser.expansion_from_document(json.loads(ser.dumps(ser.expansion_document(e))))
    th, ph = np.array([0.3, 1.1]), np.array([0.2, 4.0])
    assert isinstance(f, SphericalHarmonicExpansion)
    assert np.array_equal(f.evaluate(th, ph), e.evaluate(th, ph))


def test_transplant_document_fields(P16):
    d = ser.transplant_document(transplant(P16))["data"]
    assert d["degree"] == 16 and set(d) >= {"alpha", "log_A", "M_N", "B_max"}


def test_certificate_roundtrip_reproduces_area(tmp_path):
    rec = minimize_area(4, EstimatorConfig(restarts=2, rounds=1, evaluations=200, area_budget=10_000))
    p = tmp_path / "c.json"
    ser.write_document(p, ser.estimate_document(rec))
    doc = ser.read_document(p, "nadirashvili-estimate")
    c = ser.candidate_from_document(doc)
    assert isinstance(c, Candidate)
    assert np.array_equal(c.vector, rec.candidate.vector)
    assert c.area(rec.area.budget).value == rec.value
    assert "upper estimate" in doc["data"]["caveat"]
