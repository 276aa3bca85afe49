"""Quantization codebooks: uniform scalar levels, isotropic Grassmannian
codebooks built by alternating-projection line packing, and nonnegative
unit-sphere codebooks trained with the Lloyd algorithm.

A CodebookBundle groups the three codebooks a hierarchical gradient
quantizer needs (norm levels, block directions, hinge weights) and has a
versioned little-endian binary serialization so transmitter and server can
share codebooks ahead of time.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .channel import RngStream
from .errors import FormatError, InvalidInput

MAGIC = b"ECLB"
FORMAT_VERSION = 1
UNIT_NORM_TOL = 1e-10

LINE_PACKING_ITERS = 2000
LINE_PACKING_TOL = 1e-6
LLOYD_ITERS = 100
LLOYD_TOL = 1e-8

_KIND_TAGS = {"isotropic": 0, "nonnegative": 1}
_TAG_KINDS = {v: k for k, v in _KIND_TAGS.items()}


@dataclass(frozen=True)
class ScalarCodebook:
    """Strictly increasing reconstruction levels for a 2^bits scalar quantizer."""

    levels: np.ndarray
    bits: int

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=np.float64)
        if levels.size != 2**self.bits:
            raise InvalidInput(f"expected {2**self.bits} levels, got {levels.size}")
        if np.any(np.diff(levels) <= 0):
            raise InvalidInput("levels must be strictly increasing")
        object.__setattr__(self, "levels", levels)


@dataclass(frozen=True)
class GrassmannCodebook:
    """2^bits unit-norm codewords, one per row.

    kind 'isotropic' codebooks come from line packing and cover directions;
    kind 'nonnegative' codebooks live on the nonnegative unit orthant.
    """

    codewords: np.ndarray
    bits: int
    kind: str

    def __post_init__(self):
        cw = np.asarray(self.codewords, dtype=np.float64)
        if cw.ndim != 2 or cw.shape[0] != 2**self.bits:
            raise InvalidInput(
                f"expected {2**self.bits} codewords, got shape {cw.shape}"
            )
        norms = np.linalg.norm(cw, axis=1)
        if np.max(np.abs(norms - 1.0)) > UNIT_NORM_TOL:
            raise InvalidInput("codewords must have unit norm")
        if self.kind not in _KIND_TAGS:
            raise InvalidInput(f"unknown codebook kind {self.kind!r}")
        if self.kind == "nonnegative" and np.any(cw < 0):
            raise InvalidInput("nonnegative codebook contains negative coefficients")
        object.__setattr__(self, "codewords", cw)

    @property
    def dim(self) -> int:
        return self.codewords.shape[1]


@dataclass(frozen=True)
class CodebookBundle:
    """The three codebooks of the hierarchical gradient quantizer."""

    norm_cb: ScalarCodebook
    block_cb: GrassmannCodebook
    hinge_cb: GrassmannCodebook
    blocks: int
    block_len: int

    def __post_init__(self):
        if self.block_cb.dim != self.block_len:
            raise InvalidInput(
                f"block codebook dimension {self.block_cb.dim} != L={self.block_len}"
            )
        if self.hinge_cb.dim != self.blocks:
            raise InvalidInput(
                f"hinge codebook dimension {self.hinge_cb.dim} != M={self.blocks}"
            )
        if self.hinge_cb.kind != "nonnegative":
            raise InvalidInput("hinge codebook must be nonnegative")


def uniform_scalar_codebook(lo: float, hi: float, bits: int) -> ScalarCodebook:
    """Midpoint levels of a uniform quantizer on [lo, hi]."""
    if not lo < hi:
        raise InvalidInput(f"need lo < hi, got [{lo}, {hi}]")
    if bits < 1:
        raise InvalidInput("bits must be >= 1")
    count = 2**bits
    delta = (hi - lo) / count
    levels = lo + (np.arange(count) + 0.5) * delta
    return ScalarCodebook(levels=levels, bits=bits)


def quantize_scalar(codebook: ScalarCodebook, value: float) -> int:
    """Index of the nearest level (ties to the lower index)."""
    return int(np.argmin(np.abs(codebook.levels - value)))


def coherence(codewords: np.ndarray) -> float:
    """Maximal absolute inner product between distinct codewords."""
    gram = np.abs(codewords @ codewords.T)
    np.fill_diagonal(gram, 0.0)
    return float(gram.max())


def welch_bound(dim: int, count: int) -> float:
    """Lower bound on the coherence of ``count`` unit vectors in R^dim."""
    if count <= dim:
        return 0.0
    return float(np.sqrt((count - dim) / (dim * (count - 1))))


def _unit_rows(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def pack_lines(
    dim: int,
    count: int,
    rng: RngStream,
    max_iters: int = LINE_PACKING_ITERS,
    tol: float = LINE_PACKING_TOL,
) -> np.ndarray:
    """Pack ``count`` lines in R^dim by alternating projection on the Gram
    matrix; returns (count, dim) unit rows.

    Off-diagonal Gram entries exceeding the target coherence are shrunk to
    it, the matrix is re-factored to a rank-dim unit-norm frame, and the best
    iterate (lowest coherence) is kept, so the result never regresses below
    the random initialization. Exact optima are only guaranteed when
    count <= dim (an orthonormal set); otherwise this is best-effort descent
    toward the Welch bound.
    """
    if dim < 2:
        raise InvalidInput("dim must be >= 2")
    if count < 2:
        raise InvalidInput("count must be >= 2")
    g = rng.generator()
    x = _unit_rows(g.standard_normal((count, dim)))

    if count <= dim:
        # Orthonormal codewords are optimal; QR of the initialization.
        q, _ = np.linalg.qr(x.T)
        return q[:, :count].T

    target = welch_bound(dim, count)
    best = x
    best_coh = coherence(x)
    for _ in range(max_iters):
        if best_coh <= target + tol:
            break
        gram = x @ x.T
        off = gram - np.diag(np.diag(gram))
        clipped = np.clip(off, -target, target)
        gram = clipped + np.eye(count)
        w, v = np.linalg.eigh(gram)
        w = np.clip(w[-dim:], 0.0, None)
        x = _unit_rows(v[:, -dim:] * np.sqrt(w))
        coh = coherence(x)
        if coh < best_coh:
            best, best_coh = x, coh
    return best


def line_packing(
    dim: int,
    bits: int,
    rng: RngStream,
    max_iters: int = LINE_PACKING_ITERS,
    tol: float = LINE_PACKING_TOL,
) -> GrassmannCodebook:
    """Isotropic Grassmannian codebook of 2^bits packed lines."""
    if bits < 1:
        raise InvalidInput("bits must be >= 1")
    codewords = pack_lines(dim, 2**bits, rng, max_iters=max_iters, tol=tol)
    return GrassmannCodebook(codewords=codewords, bits=bits, kind="isotropic")


def lloyd_codebook(
    training: np.ndarray,
    bits: int,
    rng: RngStream,
    max_iters: int = LLOYD_ITERS,
    tol: float = LLOYD_TOL,
) -> GrassmannCodebook:
    """Lloyd (k-means style) codebook on the nonnegative unit sphere.

    Distortion per sample is 1 - <x, c(x)>; the optimal cell centroid under
    that measure is the normalized cell mean, which stays nonnegative for
    nonnegative training data. Empty cells are reseeded from the training
    points currently worst represented, which cannot increase distortion.
    """
    training = np.asarray(training, dtype=np.float64)
    if training.ndim != 2 or training.shape[0] == 0:
        raise InvalidInput("training must be a nonempty 2-d array")
    count = 2**bits
    if training.shape[0] < count:
        raise InvalidInput(
            f"need at least {count} training vectors, got {training.shape[0]}"
        )
    if np.any(training < 0):
        raise InvalidInput("training vectors must be nonnegative")
    norms = np.linalg.norm(training, axis=1)
    if np.max(np.abs(norms - 1.0)) > 1e-8:
        raise InvalidInput("training vectors must have unit norm")

    g = rng.generator()
    codewords = training[g.choice(training.shape[0], size=count, replace=False)]
    prev_distortion = np.inf
    for _ in range(max_iters):
        sims = training @ codewords.T
        assign = np.argmax(sims, axis=1)
        best_sim = sims[np.arange(training.shape[0]), assign]
        distortion = float(np.mean(1.0 - best_sim))
        if distortion > prev_distortion + 1e-12:
            raise AssertionError("Lloyd distortion increased")  # pragma: no cover
        if prev_distortion - distortion < tol:
            break
        prev_distortion = distortion
        new_codewords = codewords.copy()
        for j in range(count):
            members = training[assign == j]
            if members.shape[0] > 0:
                mean = np.clip(members.mean(axis=0), 0.0, None)
                norm = np.linalg.norm(mean)
                if norm > 0:
                    new_codewords[j] = mean / norm
        empty = [j for j in range(count) if not np.any(assign == j)]
        if empty:
            worst = np.argsort(best_sim)[: len(empty)]
            for j, t in zip(empty, worst):
                new_codewords[j] = training[t]
        codewords = new_codewords
    return GrassmannCodebook(codewords=codewords, bits=bits, kind="nonnegative")


# ---------------------------------------------------------------------------
# Bundle serialization: little-endian, versioned.
#
# header: magic "ECLB" | version u16 | block kind u8 | hinge kind u8
#         | M u32 | L u32 | B_rho u8 | B_s u8 | B_h u8
# body:   norm levels (2^B_rho f64) | block codewords (2^B_s * L f64,
#         row-major) | hinge codewords (2^B_h * M f64, row-major)
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<4sHBBIIBBB")


def serialize_bundle(bundle: CodebookBundle) -> bytes:
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        _KIND_TAGS[bundle.block_cb.kind],
        _KIND_TAGS[bundle.hinge_cb.kind],
        bundle.blocks,
        bundle.block_len,
        bundle.norm_cb.bits,
        bundle.block_cb.bits,
        bundle.hinge_cb.bits,
    )
    parts = [header]
    for arr in (
        bundle.norm_cb.levels,
        bundle.block_cb.codewords,
        bundle.hinge_cb.codewords,
    ):
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return b"".join(parts)


def deserialize_bundle(data: bytes) -> CodebookBundle:
    if len(data) < _HEADER.size:
        raise FormatError("truncated codebook stream: header incomplete")
    magic, version, block_tag, hinge_tag, m, l, b_rho, b_s, b_h = _HEADER.unpack_from(
        data
    )
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported codebook format version {version}")
    if block_tag not in _TAG_KINDS or hinge_tag not in _TAG_KINDS:
        raise FormatError("unknown codebook kind tag")
    offset = _HEADER.size
    counts = ((2**b_rho,), (2**b_s, l), (2**b_h, m))
    arrays = []
    for shape in counts:
        n = int(np.prod(shape))
        end = offset + 8 * n
        if end > len(data):
            raise FormatError("truncated codebook stream: body incomplete")
        arrays.append(np.frombuffer(data[offset:end], dtype="<f8").reshape(shape))
        offset = end
    if offset != len(data):
        raise FormatError(f"{len(data) - offset} trailing bytes after codebooks")
    levels, block_cw, hinge_cw = arrays
    try:
        return CodebookBundle(
            norm_cb=ScalarCodebook(levels=levels, bits=b_rho),
            block_cb=GrassmannCodebook(
                codewords=block_cw, bits=b_s, kind=_TAG_KINDS[block_tag]
            ),
            hinge_cb=GrassmannCodebook(
                codewords=hinge_cw, bits=b_h, kind=_TAG_KINDS[hinge_tag]
            ),
            blocks=m,
            block_len=l,
        )
    except InvalidInput as exc:
        raise FormatError(f"decoded codebooks are invalid: {exc}") from exc


def save_bundle(bundle: CodebookBundle, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_bundle(bundle))


def load_bundle(path) -> CodebookBundle:
    with open(path, "rb") as fh:
        return deserialize_bundle(fh.read())
