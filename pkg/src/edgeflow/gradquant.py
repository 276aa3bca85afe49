"""Hierarchical stochastic-gradient quantization and the sign baseline.

A gradient g splits into its norm rho, M unit block directions s_i, and a
nonnegative unit "hinge" vector h of block magnitudes, satisfying

    g = rho * sum_i h_i * (s_i placed in block i)

exactly (after zero-padding to M*L coefficients). Each part is quantized
against its own codebook; one extra sign bit per block lets the projective
block codebook recover descent direction. The server rebuilds the gradient
by table lookup. The sign baseline transmits one sign bit per coefficient.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .channel import RngStream
from .codebooks import (
    CodebookBundle,
    GrassmannCodebook,
    line_packing,
    lloyd_codebook,
    quantize_scalar,
    uniform_scalar_codebook,
)
from .errors import DimensionMismatch, FormatError, InvalidInput


@dataclass(frozen=True)
class GradientDecomposition:
    """Exact norm / block-direction / hinge split of a gradient."""

    rho: float
    block_dirs: np.ndarray  # (M, L), unit rows
    hinge: np.ndarray  # (M,), nonnegative, unit norm
    dim: int

    @property
    def blocks(self) -> int:
        return self.block_dirs.shape[0]

    @property
    def block_len(self) -> int:
        return self.block_dirs.shape[1]


@dataclass(frozen=True)
class HierarchicalCode:
    """Bit-level output of the hierarchical quantizer (self-describing)."""

    norm_index: int
    block_indices: tuple
    block_signs: tuple  # +1 / -1 per block
    hinge_index: int
    dim: int
    blocks: int
    norm_bits: int
    block_bits: int
    hinge_bits: int

    @property
    def payload_bits(self) -> int:
        return self.norm_bits + self.blocks * (self.block_bits + 1) + self.hinge_bits


@dataclass(frozen=True)
class SignCode:
    """signSGD code: one sign per coefficient; the optional scale is
    diagnostics only and never counted against the bit budget."""

    signs: np.ndarray  # (dim,), entries +1 / -1
    scale: float | None = None

    @property
    def dim(self) -> int:
        return self.signs.size

    @property
    def payload_bits(self) -> int:
        return self.signs.size


def _check_gradient(g) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64).ravel()
    if g.size == 0:
        raise InvalidInput("gradient is empty")
    if not np.all(np.isfinite(g)):
        raise InvalidInput("gradient contains non-finite values")
    return g


def decompose(g, blocks: int) -> GradientDecomposition:
    """Split a gradient into norm, unit block directions, and hinge vector.

    The gradient is zero-padded to blocks * ceil(dim/blocks) coefficients.
    Zero blocks get the canonical direction e1 with hinge weight 0; the zero
    gradient gets rho = 0 and hinge (1, 0, ..., 0).
    """
    g = _check_gradient(g)
    if blocks < 1:
        raise InvalidInput("blocks must be >= 1")
    dim = g.size
    block_len = math.ceil(dim / blocks)
    padded = np.zeros(blocks * block_len)
    padded[:dim] = g
    v = padded.reshape(blocks, block_len)
    rho = float(np.linalg.norm(g))
    if rho == 0.0:
        hinge = np.zeros(blocks)
        hinge[0] = 1.0
        dirs = np.zeros((blocks, block_len))
        dirs[:, 0] = 1.0
        return GradientDecomposition(rho=0.0, block_dirs=dirs, hinge=hinge, dim=dim)
    block_norms = np.linalg.norm(v, axis=1)
    hinge = block_norms / rho  # ||f|| = 1 for f = g/rho
    dirs = np.zeros_like(v)
    nonzero = block_norms > 0
    dirs[nonzero] = v[nonzero] / block_norms[nonzero, None]
    dirs[~nonzero, 0] = 1.0
    return GradientDecomposition(rho=rho, block_dirs=dirs, hinge=hinge, dim=dim)


def reassemble(decomp: GradientDecomposition) -> np.ndarray:
    """Invert `decompose` exactly: rho * sum_i h_i s_i, padding stripped."""
    flat = (decomp.rho * decomp.hinge[:, None] * decomp.block_dirs).ravel()
    return flat[: decomp.dim]


def quantize(g, bundle: CodebookBundle) -> HierarchicalCode:
    """Quantize a gradient against a codebook bundle.

    Block directions pick the codeword maximizing |<s_i, c>| with the sign
    of the inner product (a zero block canonically maps to index 0, sign +).
    The hinge picks the codeword maximizing <h, c>. Ties resolve to the
    lowest codeword index.
    """
    g = _check_gradient(g)
    decomp = decompose(g, bundle.blocks)
    if decomp.block_len != bundle.block_len:
        raise DimensionMismatch(
            f"gradient of dim {decomp.dim} with M={bundle.blocks} needs block "
            f"length {decomp.block_len}, bundle has L={bundle.block_len}"
        )
    norm_index = quantize_scalar(bundle.norm_cb, decomp.rho)
    inner = decomp.block_dirs @ bundle.block_cb.codewords.T  # (M, 2^B_s)
    indices = np.argmax(np.abs(inner), axis=1)
    chosen = inner[np.arange(decomp.blocks), indices]
    signs = np.where(chosen >= 0, 1, -1)
    zero_blocks = decomp.hinge == 0.0
    indices = np.where(zero_blocks, 0, indices)
    signs = np.where(zero_blocks, 1, signs)
    hinge_index = int(np.argmax(bundle.hinge_cb.codewords @ decomp.hinge))
    return HierarchicalCode(
        norm_index=norm_index,
        block_indices=tuple(int(i) for i in indices),
        block_signs=tuple(int(s) for s in signs),
        hinge_index=hinge_index,
        dim=decomp.dim,
        blocks=bundle.blocks,
        norm_bits=bundle.norm_cb.bits,
        block_bits=bundle.block_cb.bits,
        hinge_bits=bundle.hinge_cb.bits,
    )


def dequantize(code: HierarchicalCode, bundle: CodebookBundle) -> np.ndarray:
    """Table-lookup reconstruction of a hierarchical code."""
    if (
        code.blocks != bundle.blocks
        or code.norm_bits != bundle.norm_cb.bits
        or code.block_bits != bundle.block_cb.bits
        or code.hinge_bits != bundle.hinge_cb.bits
    ):
        raise DimensionMismatch("code bit-widths do not match the bundle")
    if math.ceil(code.dim / code.blocks) != bundle.block_len:
        raise DimensionMismatch(
            f"code dim {code.dim} incompatible with bundle block length "
            f"{bundle.block_len}"
        )
    if not 0 <= code.norm_index < 2**code.norm_bits:
        raise FormatError(f"norm index {code.norm_index} out of range")
    if not 0 <= code.hinge_index < 2**code.hinge_bits:
        raise FormatError(f"hinge index {code.hinge_index} out of range")
    idx = np.asarray(code.block_indices)
    if np.any(idx < 0) or np.any(idx >= 2**code.block_bits):
        raise FormatError("block index out of range")
    rho = bundle.norm_cb.levels[code.norm_index]
    hinge = bundle.hinge_cb.codewords[code.hinge_index]
    dirs = bundle.block_cb.codewords[idx]
    signs = np.asarray(code.block_signs, dtype=np.float64)
    flat = (rho * hinge * signs)[:, None] * dirs
    return flat.ravel()[: code.dim]


def signsgd_quantize(g) -> SignCode:
    """One sign bit per coefficient; sign(0) is +1."""
    g = _check_gradient(g)
    return SignCode(signs=np.where(g >= 0, 1.0, -1.0))


def signsgd_dequantize(code: SignCode) -> np.ndarray:
    return np.asarray(code.signs, dtype=np.float64).copy()


def bits_per_coefficient(code) -> float:
    """Quantization rate of a code in bits per gradient coefficient."""
    if isinstance(code, HierarchicalCode):
        return code.payload_bits / code.dim
    if isinstance(code, SignCode):
        return 1.0
    raise InvalidInput(f"unsupported code type {type(code).__name__}")


# ---------------------------------------------------------------------------
# Wire format: 16-byte big-endian header (dim u32, M u32, B_rho u8, B_s u8,
# B_h u8, 5 reserved bytes), then an MSB-first bit stream in field order:
# norm index, per block (index, sign bit with 1 = negative), hinge index.
# ---------------------------------------------------------------------------

_WIRE_HEADER = struct.Struct(">IIBBB5x")


def _pack_bits(fields) -> bytes:
    acc = 0
    nbits = 0
    for value, width in fields:
        if not 0 <= value < (1 << width):
            raise InvalidInput(f"value {value} does not fit in {width} bits")
        acc = (acc << width) | value
        nbits += width
    pad = (-nbits) % 8
    acc <<= pad
    return acc.to_bytes((nbits + pad) // 8, "big")


class _BitReader:
    def __init__(self, data: bytes):
        self.value = int.from_bytes(data, "big")
        self.remaining = 8 * len(data)

    def take(self, width: int) -> int:
        if width > self.remaining:
            raise FormatError("bit stream exhausted")
        self.remaining -= width
        return (self.value >> self.remaining) & ((1 << width) - 1)


def encode_code(code: HierarchicalCode) -> bytes:
    """Serialize a hierarchical code to its wire format."""
    header = _WIRE_HEADER.pack(
        code.dim, code.blocks, code.norm_bits, code.block_bits, code.hinge_bits
    )
    fields = [(code.norm_index, code.norm_bits)]
    for idx, sign in zip(code.block_indices, code.block_signs):
        fields.append((idx, code.block_bits))
        fields.append((0 if sign > 0 else 1, 1))
    fields.append((code.hinge_index, code.hinge_bits))
    return header + _pack_bits(fields)


def decode_code(data: bytes) -> HierarchicalCode:
    """Parse the wire format back into a HierarchicalCode."""
    if len(data) < _WIRE_HEADER.size:
        raise FormatError("truncated code: header incomplete")
    dim, blocks, b_rho, b_s, b_h = _WIRE_HEADER.unpack_from(data)
    if dim == 0 or blocks == 0:
        raise FormatError("corrupt header: zero dimension")
    payload_bits = b_rho + blocks * (b_s + 1) + b_h
    expected = _WIRE_HEADER.size + (payload_bits + 7) // 8
    if len(data) != expected:
        raise FormatError(f"code length {len(data)} != expected {expected}")
    reader = _BitReader(data[_WIRE_HEADER.size :])
    norm_index = reader.take(b_rho)
    indices = []
    signs = []
    for _ in range(blocks):
        indices.append(reader.take(b_s))
        signs.append(-1 if reader.take(1) else 1)
    hinge_index = reader.take(b_h)
    return HierarchicalCode(
        norm_index=norm_index,
        block_indices=tuple(indices),
        block_signs=tuple(signs),
        hinge_index=hinge_index,
        dim=dim,
        blocks=blocks,
        norm_bits=b_rho,
        block_bits=b_s,
        hinge_bits=b_h,
    )


# ---------------------------------------------------------------------------
# Bundle construction from pilot gradients.
# ---------------------------------------------------------------------------


def harvest_hinges(gradients, blocks: int) -> tuple[np.ndarray, np.ndarray]:
    """Hinge vectors and norms of a batch of pilot gradients."""
    hinges = []
    rhos = []
    for g in gradients:
        d = decompose(g, blocks)
        if d.rho > 0:
            hinges.append(d.hinge)
            rhos.append(d.rho)
    if not hinges:
        raise InvalidInput("no nonzero pilot gradients to harvest")
    return np.asarray(hinges), np.asarray(rhos)


def synthetic_hinge_training(blocks: int, count: int, rng: RngStream) -> np.ndarray:
    """|Gaussian| fallback hinge training set when no pilot data exists."""
    g = rng.generator()
    h = np.abs(g.standard_normal((count, blocks)))
    return h / np.linalg.norm(h, axis=1, keepdims=True)


def build_bundle(
    dim: int,
    blocks: int,
    norm_bits: int,
    block_bits: int,
    hinge_bits: int,
    rng: RngStream,
    pilot_gradients=None,
    pilot_count: int = 500,
) -> CodebookBundle:
    """Construct the three codebooks for gradients of the given dimension.

    The block codebook comes from line packing. The hinge codebook is Lloyd
    trained on hinge vectors harvested from ``pilot_gradients`` when given,
    else on |Gaussian| unit vectors. The scalar norm range is calibrated to
    [0, 3 * median(rho)] of the pilot norms (falling back to the norms of
    standard Gaussian gradients of the same dimension).
    """
    if dim < 1:
        raise InvalidInput("dim must be >= 1")
    block_len = math.ceil(dim / blocks)
    block_cb = line_packing(block_len, block_bits, rng.child(1))
    if pilot_gradients is not None:
        hinges, rhos = harvest_hinges(pilot_gradients, blocks)
        needed = 2**hinge_bits
        if hinges.shape[0] < needed:
            extra = synthetic_hinge_training(
                blocks, needed - hinges.shape[0] + 16, rng.child(2)
            )
            hinges = np.vstack([hinges, extra])
    else:
        gen = rng.child(3).generator()
        pilots = gen.standard_normal((pilot_count, dim))
        hinges, rhos = harvest_hinges(pilots, blocks)
    if blocks == 1:
        # One-dimensional hinge: the only unit nonnegative vector is [1].
        hinge_cb = GrassmannCodebook(
            codewords=np.ones((2**hinge_bits, 1)), bits=hinge_bits, kind="nonnegative"
        )
    else:
        hinge_cb = lloyd_codebook(hinges, hinge_bits, rng.child(4))
    hi = 3.0 * float(np.median(rhos))
    norm_cb = uniform_scalar_codebook(0.0, hi, norm_bits)
    return CodebookBundle(
        norm_cb=norm_cb,
        block_cb=block_cb,
        hinge_cb=hinge_cb,
        blocks=blocks,
        block_len=block_len,
    )
