"""Self-attention over token grids, plus cross-resolution capture and replay.

A native-resolution pass records its row-stochastic attention matrices per
(timestep, block label). The high-resolution pass then fetches the matching
record, bilinearly upsamples it over both the query and key spatial axes,
convexly blends it with its own matrix, and substitutes the blend into the
product with V.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    CapacityError,
    NumericError,
    PairingError,
    ParameterError,
    ShapeError,
)

TOKEN_CAP = 4096
ATTN_MODES = ("off", "modulate", "swap")
DEFAULT_TARGET_BLOCKS = frozenset({"up_block_0"})


@dataclass(frozen=True, eq=False)
class AttentionMatrix:
    """Row-stochastic N x N matrix tagged with its token-grid shape."""

    rows: np.ndarray
    spatial_h: int
    spatial_w: int

    def __post_init__(self):
        arr = np.array(self.rows, dtype=np.float64, copy=True)
        n = self.spatial_h * self.spatial_w
        if arr.ndim != 2 or arr.shape != (n, n):
            raise ShapeError(
                f"rows shape {arr.shape} does not match token grid "
                f"{self.spatial_h}x{self.spatial_w} (N={n})"
            )
        if not np.isfinite(arr).all():
            raise NumericError("attention matrix contains NaN or Inf")
        if arr.min() < 0.0:
            raise NumericError("attention matrix has negative entries")
        sums = arr.sum(axis=1)
        if np.abs(sums - 1.0).max() > 1e-6:
            raise NumericError("attention rows must sum to 1 within 1e-6")
        arr.flags.writeable = False
        object.__setattr__(self, "rows", arr)

    @property
    def tokens(self):
        return self.rows.shape[0]


@dataclass(frozen=True)
class AttnModConfig:
    """How (and whether) high-res attention is steered by native matrices."""

    mode: str = "off"
    lam: float = 0.7
    target_blocks: frozenset = DEFAULT_TARGET_BLOCKS
    step_lo: int = 0
    step_hi: "int | None" = None

    def __post_init__(self):
        if self.mode not in ATTN_MODES:
            raise ParameterError(f"mode must be one of {ATTN_MODES}, got {self.mode!r}")
        if not (0.0 <= self.lam <= 1.0):
            raise ParameterError(f"lambda must be in [0, 1], got {self.lam}")
        object.__setattr__(self, "target_blocks", frozenset(self.target_blocks))
        if self.mode == "swap":
            object.__setattr__(self, "lam", 1.0)

    @property
    def active(self):
        return self.mode != "off" and len(self.target_blocks) > 0

    def applies_at(self, t: int) -> bool:
        if not self.active:
            return False
        hi = self.step_hi
        return self.step_lo <= t and (hi is None or t <= hi)

    @property
    def effective_lambda(self):
        return 1.0 if self.mode == "swap" else self.lam


def softmax_attention(Q: np.ndarray, K: np.ndarray, V: np.ndarray, spatial_h: int, spatial_w: int):
    """Scaled dot-product attention over one token grid.

    Args:
        Q, K, V: (N, d) arrays with N = spatial_h * spatial_w.
        spatial_h, spatial_w: token-grid dims the N tokens raster-scan.

    Returns:
        (output, matrix): the (N, d) attended values and the row-softmax of
        Q K^T / sqrt(d) as an AttentionMatrix.

    Raises:
        ShapeError: if shapes disagree or N != spatial_h * spatial_w.
        NumericError: if the logits are not finite.
    """
    Q = np.asarray(Q, dtype=np.float64)
    K = np.asarray(K, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    if Q.ndim != 2 or Q.shape != K.shape or Q.shape[0] != V.shape[0]:
        raise ShapeError(f"Q/K/V shapes {Q.shape}/{K.shape}/{V.shape} are inconsistent")
    n, d = Q.shape
    if d < 1:
        raise ShapeError("attention requires feature dim d >= 1")
    if n != spatial_h * spatial_w:
        raise ShapeError(f"N={n} does not match token grid {spatial_h}x{spatial_w}")
    logits = Q @ K.T / np.sqrt(d)
    if not np.isfinite(logits).all():
        raise NumericError("attention logits are not finite")
    # max-shifted softmax per row; shift cancels in the ratio
    shifted = logits - logits.max(axis=1, keepdims=True)
    weights = np.exp(shifted)
    weights /= weights.sum(axis=1, keepdims=True)
    matrix = AttentionMatrix(rows=weights, spatial_h=spatial_h, spatial_w=spatial_w)
    return matrix.rows @ V, matrix


def apply_attention(matrix: AttentionMatrix, V: np.ndarray) -> np.ndarray:
    """Product of a (possibly substituted) attention matrix with values."""
    V = np.asarray(V, dtype=np.float64)
    if V.shape[0] != matrix.tokens:
        raise ShapeError(f"V has {V.shape[0]} rows, matrix expects {matrix.tokens}")
    return matrix.rows @ V


def upsample_attention(M: AttentionMatrix, s: int) -> AttentionMatrix:
    """Upsample an attention matrix by integer s over both spatial index pairs.

    The N x N matrix is viewed as a 4D field over (query_y, query_x, key_y,
    key_x); each pair is bilinearly upsampled by s (half-pixel alignment, the
    same resampler used for latents), then rows are renormalized to restore
    stochasticity.

    Raises:
        ParameterError: if s < 1.
        CapacityError: if the result would exceed the dense token cap.
    """
    if s < 1:
        raise ParameterError(f"scale must be >= 1, got {s}")
    if s == 1:
        return M
    h, w = M.spatial_h, M.spatial_w
    n_out = (s * h) * (s * w)
    if n_out > TOKEN_CAP:
        raise CapacityError(
            f"upsampled attention needs {n_out} tokens, cap is {TOKEN_CAP}"
        )
    n = M.tokens
    # pass 1: treat each query row as channels, upsample the key grid
    as_keys = M.rows.reshape(n, h, w)
    keys_up = kernels.bilinear_upsample(as_keys, s * h, s * w, False)
    # pass 2: treat each upsampled key cell as channels, upsample the query grid
    as_queries = np.ascontiguousarray(keys_up.reshape(n, n_out).T).reshape(n_out, h, w)
    queries_up = kernels.bilinear_upsample(as_queries, s * h, s * w, False)
    dense = queries_up.reshape(n_out, n_out).T
    dense = np.ascontiguousarray(dense)
    dense /= dense.sum(axis=1, keepdims=True)
    return AttentionMatrix(rows=dense, spatial_h=s * h, spatial_w=s * w)


def modulate_attention(M_native_up: AttentionMatrix, M_high: AttentionMatrix, cfg: AttnModConfig) -> AttentionMatrix:
    """Convex blend lambda * native + (1 - lambda) * high of two matrices.

    mode=swap forces lambda to 1 (pure substitution); mode=off returns
    M_high unchanged.

    Raises:
        ShapeError: if the token grids disagree (a wrong block pairing).
    """
    if cfg.mode == "off":
        return M_high
    if (M_native_up.spatial_h, M_native_up.spatial_w) != (M_high.spatial_h, M_high.spatial_w):
        raise ShapeError(
            f"token grids differ: native {M_native_up.spatial_h}x{M_native_up.spatial_w} "
            f"vs high {M_high.spatial_h}x{M_high.spatial_w}"
        )
    lam = cfg.effective_lambda
    blended = lam * M_native_up.rows + (1.0 - lam) * M_high.rows
    return AttentionMatrix(
        rows=blended, spatial_h=M_high.spatial_h, spatial_w=M_high.spatial_w
    )


@dataclass
class TapRecord:
    """One tap-log row; mirrors the CSV columns."""

    timestep: int
    block: str
    tokens: int
    lam: float
    mode: str


class TapStore:
    """Write-once store of native-pass matrices keyed by (timestep, block)."""

    def __init__(self):
        self._records = {}

    def put(self, t: int, block: str, matrix: AttentionMatrix) -> None:
        key = (t, block)
        if key in self._records:
            raise PairingError(f"duplicate capture for step {t}, block {block!r}")
        self._records[key] = matrix

    def get(self, t: int, block: str) -> AttentionMatrix:
        try:
            return self._records[(t, block)]
        except KeyError:
            raise PairingError(
                f"no native matrix recorded for step {t}, block {block!r}"
            ) from None

    def __len__(self):
        return len(self._records)


class TapSession:
    """Attention tap protocol wired into a denoiser's attention blocks.

    In capture phase the session records each target block's matrix; in
    replay phase it fetches the matching native record, upsamples it to the
    high-res token count, blends per the config, and returns the substitute
    matrix. Every action appends a TapRecord to the log.
    """

    CAPTURE = "capture"
    REPLAY = "replay"

    def __init__(self, cfg: AttnModConfig, store: TapStore, phase: str, scale: int = 1, keep: dict = None):
        if phase not in (self.CAPTURE, self.REPLAY):
            raise ParameterError(f"phase must be capture or replay, got {phase!r}")
        if phase == self.REPLAY and scale < 1:
            raise ParameterError(f"replay scale must be >= 1, got {scale}")
        self.cfg = cfg
        self.store = store
        self.phase = phase
        self.scale = scale
        self.keep = keep
        self.log = []
        self._step = None

    def begin_step(self, t: int) -> None:
        self._step = t

    def on_attention(self, block: str, matrix: AttentionMatrix) -> AttentionMatrix:
        """Hook called by the denoiser with each block's fresh matrix.

        Returns the matrix the denoiser must multiply with V: the input in
        capture phase (after recording), the blended substitute in replay.
        """
        t = self._step
        if t is None:
            raise PairingError("tap session used outside begin_step")
        if block not in self.cfg.target_blocks or not self.cfg.applies_at(t):
            return matrix
        if self.phase == self.CAPTURE:
            self.store.put(t, block, matrix)
            self.log.append(TapRecord(t, block, matrix.tokens, self.cfg.effective_lambda, "capture"))
            return matrix
        native = self.store.get(t, block)
        native_up = upsample_attention(native, self.scale)
        blended = modulate_attention(native_up, matrix, self.cfg)
        if self.keep is not None and (t, block) in self.keep:
            self.keep[(t, block)] = {
                "native_up": native_up, "high": matrix, "modulated": blended,
            }
        self.log.append(TapRecord(t, block, blended.tokens, self.cfg.effective_lambda, self.cfg.mode))
        return blended


def tap_log_csv(records) -> str:
    """Render tap records as the CSV exported next to run artifacts."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["timestep", "block", "tokens", "lambda", "mode"])
    for rec in records:
        writer.writerow([rec.timestep, rec.block, rec.tokens, f"{rec.lam:g}", rec.mode])
    return buf.getvalue()
