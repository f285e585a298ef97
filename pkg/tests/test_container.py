"""Model file round trips and corruption detection."""

import numpy as np
import pytest

from helpers import random_dnn
from unmix.container import load_dnn, load_nmf, save_dnn, save_nmf
from unmix.dnn import forward
from unmix.nmf import NmfModel


def test_nmf_roundtrip_is_bit_identical(tmp_path):
    rng = np.random.default_rng(0)
    model = NmfModel(rng.uniform(0.1, 2.0, (33, 8)), source_id=2)
    path = tmp_path / "dict.unmx"
    save_nmf(path, model)
    loaded = load_nmf(path)
    assert loaded.source_id == 2
    assert np.array_equal(loaded.dictionary, model.dictionary)


def test_dnn_roundtrip_preserves_forward_outputs(tmp_path):
    rng = np.random.default_rng(1)
    model = random_dnn(rng, [12, 9, 5, 2])
    path = tmp_path / "net.unmx"
    save_dnn(path, model)
    loaded = load_dnn(path)
    assert loaded.layer_sizes == model.layer_sizes
    x = rng.standard_normal(12)
    f0, _ = forward(model, x)
    f1, _ = forward(loaded, x)
    assert np.array_equal(f0, f1)


def test_rewrite_is_byte_identical(tmp_path):
    rng = np.random.default_rng(2)
    model = NmfModel(rng.uniform(0.1, 2.0, (7, 3)), source_id=1)
    a, b = tmp_path / "a.unmx", tmp_path / "b.unmx"
    save_nmf(a, model)
    save_nmf(b, model)
    assert a.read_bytes() == b.read_bytes()


def test_corrupted_file_is_rejected(tmp_path):
    rng = np.random.default_rng(3)
    path = tmp_path / "dict.unmx"
    save_nmf(path, NmfModel(rng.uniform(0.1, 2.0, (5, 4)), source_id=1))
    blob = bytearray(path.read_bytes())
    blob[30] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(ValueError, match="checksum"):
        load_nmf(path)


def test_bad_magic_and_truncation_are_rejected(tmp_path):
    path = tmp_path / "x.unmx"
    path.write_bytes(b"NOPE" + bytes(32))
    with pytest.raises(ValueError, match="magic"):
        load_nmf(path)

    rng = np.random.default_rng(4)
    good = tmp_path / "good.unmx"
    save_nmf(good, NmfModel(rng.uniform(0.1, 2.0, (5, 4)), source_id=1))
    trunc = tmp_path / "trunc.unmx"
    trunc.write_bytes(good.read_bytes()[:20])
    with pytest.raises(ValueError):
        load_nmf(trunc)


def test_kind_mismatch_is_rejected(tmp_path):
    rng = np.random.default_rng(5)
    nmf_path = tmp_path / "dict.unmx"
    save_nmf(nmf_path, NmfModel(rng.uniform(0.1, 2.0, (5, 4)), source_id=1))
    with pytest.raises(ValueError, match="classifier"):
        load_dnn(nmf_path)

    dnn_path = tmp_path / "net.unmx"
    save_dnn(dnn_path, random_dnn(rng, [6, 4, 2]))
    with pytest.raises(ValueError, match="dictionary"):
        load_nmf(dnn_path)
