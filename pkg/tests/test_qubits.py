import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtmlab.qubits import (
    QubitString,
    index_string,
    parse_input,
    string_index,
    strings_up_to,
    total_dim,
)

bitstrings = st.text(alphabet="01", max_size=8)


@given(bitstrings)
def test_string_index_inverse(s):
    assert index_string(string_index(s)) == s


def test_lexicographic_order():
    assert strings_up_to(2) == ["", "0", "1", "00", "01", "10", "11"]
    assert total_dim(2) == 7


def test_base_length_of_padded_superposition():
    q = QubitString.from_amplitudes({"0": 1 / np.sqrt(2), "11": 1 / np.sqrt(2)})
    assert q.base_length == 2
    assert q.trace == pytest.approx(1.0)
    assert not q.is_fixed_length(2)


def test_base_length_threshold_ignores_tiny_weights():
    q = QubitString.from_amplitudes({"0": 1.0, "111": 1e-7}, 3)
    assert q.base_length == 1


def test_json_roundtrip_pure_and_mixed():
    pure = QubitString.from_amplitudes({"01": 0.6, "10": 0.8j})
    back = QubitString.from_json(pure.to_json())
    assert np.allclose(back.rho, pure.rho)
    mixed = QubitString(1, 0.5 * np.diag([0, 1, 1]).astype(complex))
    doc = json.loads(mixed.to_json())
    assert "matrix" in doc
    assert np.allclose(QubitString.from_json(mixed.to_json()).rho, mixed.rho)


def test_parse_input_forms():
    assert parse_input("01").base_length == 2
    q = parse_input("1|0> + 1|11>", 2)
    assert q.rho[string_index("0"), string_index("11")] == pytest.approx(0.5)
    assert parse_input('{"n": 1, "amplitudes": [[0,0],[1,0],[0,0]]}').base_length == 1


def test_resize_pads_and_truncates():
    q = QubitString.basis("1")
    big = q.resize(3)
    assert big.dim == total_dim(3)
    assert np.allclose(big.resize(1).rho, q.rho)
    with pytest.raises(ValueError):
        QubitString.basis("101").resize(1)
