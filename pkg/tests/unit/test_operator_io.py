"""Binary operator format: round trip and rejection of foreign files."""

import numpy as np
import pytest

from pipeline.core.exceptions import ConfigurationError
from pipeline.maps import PierrehumbertConfig, build_model
from pipeline.spectral.main import build_galerkin
from utils.operator_io import FORMAT_VERSION, MAGIC, export_operator, read_operator


@pytest.fixture
def operator():
    model = build_model(PierrehumbertConfig(tau=1.0))
    return build_galerkin(model, model.default_measure, 2, 0.5)


def test_round_trip_preserves_entries_and_header(tmp_path, operator):
    path = export_operator(operator, tmp_path / "nested" / "op.bin")
    loaded = read_operator(path)

    assert path.read_bytes()[:4] == MAGIC
    assert loaded.index.d == 2 and loaded.K == 2
    assert loaded.s == 0.5
    assert loaded.model_hash == operator.model_hash
    np.testing.assert_array_equal(loaded.matrix.toarray(), operator.matrix.toarray())
    assert path.stat().st_size == 4 + 4 + 4 + 4 + 8 + 32 + 25 * 25 * 16


def test_bad_magic(tmp_path, operator):
    path = export_operator(operator, tmp_path / "op.bin")
    raw = bytearray(path.read_bytes())
    raw[:4] = b"NOPE"
    path.write_bytes(bytes(raw))
    with pytest.raises(ConfigurationError, match="not an operator file"):
        read_operator(path)


def test_unknown_version(tmp_path, operator):
    path = export_operator(operator, tmp_path / "op.bin")
    raw = bytearray(path.read_bytes())
    raw[4:8] = (FORMAT_VERSION + 1).to_bytes(4, "little")
    path.write_bytes(bytes(raw))
    with pytest.raises(ConfigurationError, match="unsupported format version"):
        read_operator(path)


def test_truncated_payload(tmp_path, operator):
    path = export_operator(operator, tmp_path / "op.bin")
    path.write_bytes(path.read_bytes()[:-16])
    with pytest.raises(ConfigurationError, match="payload bytes"):
        read_operator(path)
