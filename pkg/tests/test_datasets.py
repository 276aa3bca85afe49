import struct

import numpy as np
import pytest

from edgeflow.channel import RngStream
from edgeflow.datasets import (
    banded_pool,
    class_direction,
    fit_standardizer,
    load_idx_images,
    load_idx_labels,
    mnist_binary,
    standardize,
    two_gaussians,
)
from edgeflow.errors import FormatError, InvalidInput


class TestTwoGaussians:
    def test_class_means_along_direction(self):
        X, y = two_gaussians(40_000, 6, 3.0, RngStream(1))
        u = class_direction(6)
        proj = X @ u
        assert proj[y > 0].mean() == pytest.approx(1.5, abs=0.05)
        assert proj[y < 0].mean() == pytest.approx(-1.5, abs=0.05)

    def test_roughly_balanced(self):
        _, y = two_gaussians(40_000, 4, 2.0, RngStream(2))
        assert abs(np.mean(y > 0) - 0.5) < 0.01

    def test_deterministic(self):
        X1, y1 = two_gaussians(100, 5, 3.0, RngStream(3, (4,)))
        X2, y2 = two_gaussians(100, 5, 3.0, RngStream(3, (4,)))
        assert np.array_equal(X1, X2) and np.array_equal(y1, y2)


class TestBandedPool:
    def test_band_respected(self):
        X, _ = banded_pool(200, 8, 3.0, (0.5, 1.25), RngStream(5))
        proj = np.abs(X @ class_direction(8))
        assert np.all((proj >= 0.5) & (proj < 1.25))
        assert X.shape == (200, 8)

    def test_unreachable_band_rejected(self):
        with pytest.raises(InvalidInput):
            banded_pool(50, 4, 2.0, (30.0, 30.5), RngStream(6))


class TestStandardize:
    def test_fit_and_apply(self, gen):
        X = gen.standard_normal((500, 4)) * np.array([1, 2, 3, 4]) + 7.0
        mean, std = fit_standardizer(X)
        z = standardize(X, mean, std)
        assert np.allclose(z.mean(axis=0), 0.0, atol=1e-12)
        assert np.allclose(z.std(axis=0), 1.0, atol=1e-12)


def write_idx_images(path, images):
    n, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        fh.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", 0x00000801, len(labels)))
        fh.write(bytes(int(v) for v in labels))


class TestIdx:
    def test_round_trip(self, tmp_path, gen):
        images = gen.integers(0, 256, size=(10, 4, 4)).astype(np.uint8)
        labels = gen.integers(0, 10, size=10)
        ipath, lpath = tmp_path / "img.idx", tmp_path / "lab.idx"
        write_idx_images(ipath, images)
        write_idx_labels(lpath, labels)
        X = load_idx_images(ipath)
        y = load_idx_labels(lpath)
        assert X.shape == (10, 16)
        assert np.allclose(X, images.reshape(10, 16) / 255.0)
        assert np.array_equal(y, labels)

    def test_binary_restriction(self, tmp_path):
        images = np.arange(6 * 4).reshape(6, 2, 2).astype(np.uint8)
        labels = np.array([3, 5, 1, 3, 5, 5])
        ipath, lpath = tmp_path / "img.idx", tmp_path / "lab.idx"
        write_idx_images(ipath, images)
        write_idx_labels(lpath, labels)
        X, y = mnist_binary(ipath, lpath, (3, 5))
        assert X.shape[0] == 5
        assert np.array_equal(y, [-1, 1, -1, 1, 1])

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.idx"
        path.write_bytes(struct.pack(">IIII", 0xDEADBEEF, 1, 2, 2) + b"\x00" * 4)
        with pytest.raises(FormatError):
            load_idx_images(path)

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "short.idx"
        path.write_bytes(struct.pack(">IIII", 0x00000803, 2, 2, 2) + b"\x00" * 3)
        with pytest.raises(FormatError):
            load_idx_images(path)
