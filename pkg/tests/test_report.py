import json
import math

from hypothesis import given
from hypothesis import strategies as st

from hyperspec.report import csv_text, dumps


@given(x=st.floats(allow_nan=False, allow_infinity=False))
def test_floats_round_trip_exactly(x):
    assert json.loads(dumps({"x": x}))["x"] == x


def test_non_finite_become_null():
    assert json.loads(dumps([1.0, math.inf, math.nan])) == [1.0, None, None]


def test_integral_floats_keep_a_decimal_point():
    assert dumps(2.0) == "2.0\n"


def test_key_order_preserved():
    assert list(json.loads(dumps({"b": 1, "a": 2}))) == ["b", "a"]


def test_csv_cells():
    text = csv_text(["a", "b", "c", "d"], [[None, True, 0.1, "x"]])
    assert text == "a,b,c,d\n,true,0.10000000000000001,x\n"
