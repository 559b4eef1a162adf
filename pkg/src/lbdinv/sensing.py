"""Measurement patterns and the linear sensing operator of binary descriptors.

A pattern is an ordered list of M pairs of box-shaped averaging cells.
Measurement ``i`` is the mean of the patch over the positive cell minus
the mean over the negative cell. Box means stand in for Gaussian
averages and are evaluated with integral images; the adjoint scatters
coefficients back with the transposed integral-image stencil, so the
dense M x N matrix is never formed.

Coordinates follow the pixel-centre convention: pixel ``(row, col)``
sits at ``(y, x) = (row, col)`` and a patch spans ``[-0.5, side - 0.5]``.
A cell with centre ``(x, y)`` and radius ``r`` covers the pixels whose
column lies in ``[round(x) - round(r), round(x) + round(r)]`` (same for
rows), clipped to the patch. Rounding is half-up.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from ._rng import SplitMix64
from .exceptions import DescriptorTypeError, ParameterError, PatternMismatchError, ShapeError

__all__ = [
    "PatternKind", "MeasurementCell", "MeasurementPair", "Pattern", "Descriptor",
    "build_brief", "build_freak", "freak_points", "forward", "adjoint", "binarize",
    "describe", "operator_norm", "fnv1a_64", "SAFETY_FACTOR", "make_pattern", "stack_descriptors",
    "FREAK_RING_FRACTIONS", "FREAK_POINTS_PER_RING",
]

SAFETY_FACTOR = 1.01

FREAK_RING_FRACTIONS = (0.12, 0.2, 0.3, 0.42, 0.58, 0.78)
FREAK_POINTS_PER_RING = 7

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


class PatternKind(str, enum.Enum):
    BRIEF = "BRIEF"
    FREAK = "FREAK"
    RA_FREAK = "RA_FREAK"
    EX_FREAK = "EX_FREAK"
    CUSTOM = "CUSTOM"

    @classmethod
    def parse(cls, name: str) -> "PatternKind":
        """Accept ``"ra-freak"``, ``"RA_FREAK"`` and similar spellings."""
        if isinstance(name, cls):
            return name
        key = str(name).strip().upper().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            raise ParameterError(f"unknown pattern kind {name!r}") from None


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _fmt(v: float) -> str:
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


@dataclass(frozen=True)
class MeasurementCell:
    """Square averaging support centred at ``(x, y)`` with half-width ``r``."""

    x: float
    y: float
    r: float

    def box(self, side: int) -> tuple[int, int, int, int]:
        """Clipped support as half-open ``(row0, row1, col0, col1)``."""
        cx, cy, rr = _round_half_up(self.x), _round_half_up(self.y), _round_half_up(self.r)
        r0, r1 = max(cy - rr, 0), min(cy + rr, side - 1) + 1
        c0, c1 = max(cx - rr, 0), min(cx + rr, side - 1) + 1
        return r0, r1, c0, c1

    def _json(self) -> str:
        return f'{{"x":{_fmt(self.x)},"y":{_fmt(self.y)},"r":{_fmt(self.r)}}}'


@dataclass(frozen=True)
class MeasurementPair:
    positive: MeasurementCell
    negative: MeasurementCell


@dataclass(frozen=True)
class Pattern:
    """Ordered measurement pairs for a ``patch_side x patch_side`` patch.

    Row ``i`` of the sensing operator always corresponds to ``pairs[i]``.
    Instances are immutable; derived index arrays are cached on first use.
    """

    kind: PatternKind
    patch_side: int
    seed: int
    pairs: tuple[MeasurementPair, ...]

    def __post_init__(self):
        object.__setattr__(self, "kind", PatternKind.parse(self.kind))
        object.__setattr__(self, "pairs", tuple(self.pairs))
        if self.patch_side < 1:
            raise ParameterError("patch_side must be positive")
        if not self.pairs:
            raise ParameterError("a pattern needs at least one pair")
        for i, pair in enumerate(self.pairs):
            if pair.positive == pair.negative:
                raise ParameterError(f"pair {i} has identical cells")
            for cell in (pair.positive, pair.negative):
                r0, r1, c0, c1 = cell.box(self.patch_side)
                if r1 <= r0 or c1 <= c0:
                    raise ParameterError(f"pair {i}: cell {cell} lies outside the patch")

    @property
    def m(self) -> int:
        return len(self.pairs)

    @property
    def n(self) -> int:
        return self.patch_side * self.patch_side

    # -- serialization -------------------------------------------------
    def to_json(self) -> str:
        """Canonical serialization; its FNV-1a hash is the pattern id."""
        pairs = ",".join(
            f'{{"pos":{p.positive._json()},"neg":{p.negative._json()}}}' for p in self.pairs
        )
        return (
            f'{{"kind":"{self.kind.value}","patch_side":{int(self.patch_side)},'
            f'"seed":{int(self.seed)},"pairs":[{pairs}]}}'
        )

    @classmethod
    def from_json(cls, text: str | bytes) -> "Pattern":
        try:
            obj = json.loads(text)
            pairs = tuple(
                MeasurementPair(
                    MeasurementCell(float(p["pos"]["x"]), float(p["pos"]["y"]), float(p["pos"]["r"])),
                    MeasurementCell(float(p["neg"]["x"]), float(p["neg"]["y"]), float(p["neg"]["r"])),
                )
                for p in obj["pairs"]
            )
            return cls(PatternKind.parse(obj["kind"]), int(obj["patch_side"]), int(obj["seed"]), pairs)
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ParameterError(f"malformed pattern JSON: {exc}") from exc

    @cached_property
    def pattern_id(self) -> str:
        return f"{fnv1a_64(self.to_json().encode('utf-8')):016x}"

    # -- integral-image stencils ----------------------------------------
    @cached_property
    def _stencil(self):
        """Corner indices into the padded integral image and per-box areas.

        Returns ``(corners, signs, area)`` where ``corners`` has shape
        ``(2, M, 4)`` of flat indices into a ``(side+1)^2`` grid.
        """
        s1 = self.patch_side + 1
        corners = np.empty((2, self.m, 4), dtype=np.intp)
        area = np.empty((2, self.m))
        for i, pair in enumerate(self.pairs):
            for lobe, cell in enumerate((pair.positive, pair.negative)):
                r0, r1, c0, c1 = cell.box(self.patch_side)
                corners[lobe, i] = (r1 * s1 + c1, r0 * s1 + c1, r1 * s1 + c0, r0 * s1 + c0)
                area[lobe, i] = (r1 - r0) * (c1 - c0)
        corners.setflags(write=False)
        area.setflags(write=False)
        return corners, np.array([1.0, -1.0, -1.0, 1.0]), area


@dataclass(frozen=True, eq=False)
class Descriptor:
    """Real measurements ``L p`` or their signs, tagged with the pattern id."""

    payload: np.ndarray
    pattern_id: str
    binary: bool

    def check_pattern(self, pattern: Pattern) -> None:
        if self.pattern_id != pattern.pattern_id:
            raise PatternMismatchError(
                f"descriptor pattern {self.pattern_id} != supplied pattern {pattern.pattern_id}"
            )
        if self.payload.shape[-1] != pattern.m:
            raise ShapeError(f"descriptor length {self.payload.shape[-1]} != M={pattern.m}")

    def require(self, binary: bool) -> None:
        if self.binary != binary:
            want = "binary" if binary else "real-valued"
            raise DescriptorTypeError(f"expected a {want} descriptor")


# ---------------------------------------------------------------------------
# pattern construction


def build_brief(patch_side: int, m: int, seed: int) -> Pattern:
    """BRIEF-style pattern: 3x3 boxes at uniformly drawn pixel centres.

    Centres are drawn on ``[1, side-2]`` so that every box lies fully
    inside the patch. Positive and negative cells of a pair never coincide.
    """
    if patch_side < 4:
        raise ParameterError("BRIEF needs patch_side >= 4")
    if m < 1:
        raise ParameterError("m must be >= 1")
    rng = SplitMix64(seed)
    span = patch_side - 2

    def draw() -> MeasurementCell:
        x = 1 + rng.randbelow(span)
        y = 1 + rng.randbelow(span)
        return MeasurementCell(float(x), float(y), 1.0)

    pairs = []
    for _ in range(m):
        pos = draw()
        neg = draw()
        while neg == pos:
            neg = draw()
        pairs.append(MeasurementPair(pos, neg))
    return Pattern(PatternKind.BRIEF, patch_side, seed, tuple(pairs))


def freak_points(patch_side: int) -> list[MeasurementCell]:
    """Retinal layout: one centre point and six rings of seven points.

    Ring ``k`` (1-based) has radius ``side/2 * FREAK_RING_FRACTIONS[k-1]``
    and is rotated by ``(k mod 2) * pi/7``; its box half-width is
    ``max(1, round(0.4 * radius))``.
    """
    c = (patch_side - 1) / 2.0
    pts = [MeasurementCell(round(c, 6), round(c, 6), 1.0)]
    for k, frac in enumerate(FREAK_RING_FRACTIONS, start=1):
        radius = patch_side / 2.0 * frac
        cell_r = float(max(1, _round_half_up(0.4 * radius)))
        offset = (k % 2) * math.pi / FREAK_POINTS_PER_RING
        for j in range(FREAK_POINTS_PER_RING):
            a = 2.0 * math.pi * j / FREAK_POINTS_PER_RING + offset
            pts.append(MeasurementCell(round(c + radius * math.cos(a), 6),
                                       round(c + radius * math.sin(a), 6), cell_r))
    return pts


def _all_pairs(n_points: int) -> list[tuple[int, int]]:
    return [(a, b) for a in range(n_points) for b in range(a + 1, n_points)]


def build_freak(patch_side: int, m: int | None, variant="FREAK", seed: int = 0) -> Pattern:
    """Retinal pattern with one of three pair-selection rules.

    ``FREAK`` sorts all point pairs by decreasing centre distance, keeps
    every ``ceil(P/m)``-th one and fills the remaining slots with the
    shortest pairs. ``RA_FREAK`` draws ``m`` distinct pairs uniformly.
    ``EX_FREAK`` keeps every pair (``m`` is ignored).
    """
    variant = PatternKind.parse(variant)
    if variant not in (PatternKind.FREAK, PatternKind.RA_FREAK, PatternKind.EX_FREAK):
        raise ParameterError(f"{variant.value} is not a FREAK variant")
    if patch_side < 8:
        raise ParameterError("FREAK needs patch_side >= 8")
    pts = freak_points(patch_side)
    candidates = _all_pairs(len(pts))
    total = len(candidates)

    if variant is PatternKind.EX_FREAK:
        chosen = candidates
    else:
        if m is None or m < 1:
            raise ParameterError("m must be >= 1")
        if m > total:
            raise ParameterError(f"m={m} exceeds the {total} available pairs")
        if variant is PatternKind.RA_FREAK:
            rng = SplitMix64(seed)
            pool = list(range(total))
            # partial Fisher-Yates
            for i in range(m):
                j = i + rng.randbelow(total - i)
                pool[i], pool[j] = pool[j], pool[i]
            chosen = [candidates[i] for i in pool[:m]]
        else:
            def dist(ab):
                a, b = pts[ab[0]], pts[ab[1]]
                return round(math.hypot(a.x - b.x, a.y - b.y), 9)

            order = sorted(range(total), key=lambda i: (-dist(candidates[i]), i))
            step = -(-total // m)
            picked = order[::step]
            taken = set(picked)
            for i in reversed(order):
                if len(picked) >= m:
                    break
                if i not in taken:
                    picked.append(i)
                    taken.add(i)
            chosen = [candidates[i] for i in picked]

    pairs = tuple(MeasurementPair(pts[a], pts[b]) for a, b in chosen)
    return Pattern(variant, patch_side, seed, pairs)


# ---------------------------------------------------------------------------
# operator


def _check_field(pattern: Pattern, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    side = pattern.patch_side
    if x.ndim >= 2 and x.shape[-2:] == (side, side):
        return x
    if x.ndim >= 1 and x.shape[-1] == side * side:
        return x.reshape(x.shape[:-1] + (side, side))
    raise ShapeError(f"expected trailing shape ({side}, {side}), got {x.shape}")


def forward(pattern: Pattern, patch) -> np.ndarray:
    """Apply the sensing operator to one patch or a stack of patches.

    ``patch`` has trailing shape ``(side, side)`` (or ``(side*side,)``);
    the result has trailing length ``M``. Values are not range-checked,
    so intermediate solver fields are accepted.
    """
    x = _check_field(pattern, patch)
    # rows sum to zero, so removing a reference pixel changes nothing in exact
    # arithmetic and makes constant patches give exact zeros
    x = x - x[..., :1, :1]
    lead = x.shape[:-2]
    s1 = pattern.patch_side + 1
    sat = np.zeros(lead + (s1, s1))
    np.cumsum(np.cumsum(x, axis=-2), axis=-1, out=sat[..., 1:, 1:])
    sat = sat.reshape(lead + (s1 * s1,))
    corners, _, area = pattern._stencil
    g = sat[..., corners]
    # elementwise, so each patch in a batch rounds exactly as it would alone;
    # true division keeps equal rational means (3/9, 27/81) bit-equal
    means = ((g[..., 0] - g[..., 1]) - (g[..., 2] - g[..., 3])) / area
    return means[..., 0, :] - means[..., 1, :]


def adjoint(pattern: Pattern, coeffs) -> np.ndarray:
    """Apply the transpose of the sensing operator.

    Coefficients are scattered onto the corners of each box (weighted by
    the inverse area) and a 2-D cumulative sum turns the corner map into
    the rasterized sum of rows. The output is a raw field, not a patch.
    """
    y = np.asarray(coeffs, dtype=np.float64)
    if y.ndim < 1 or y.shape[-1] != pattern.m:
        raise ShapeError(f"expected trailing length {pattern.m}, got {y.shape}")
    side = pattern.patch_side
    s1 = side + 1
    lead = y.shape[:-1]
    batch = int(np.prod(lead, dtype=np.intp))
    corners, signs, area = pattern._stencil
    lobe_sign = np.array([1.0, -1.0])[:, None]
    w = (y.reshape(batch, 1, pattern.m) * lobe_sign / area)[..., None] * signs
    idx = corners[None] + (np.arange(batch) * (s1 * s1))[:, None, None, None]
    grid = np.bincount(idx.ravel(), weights=w.ravel(), minlength=batch * s1 * s1)
    grid = grid.reshape(batch, s1, s1)
    field = np.cumsum(np.cumsum(grid, axis=-2), axis=-1)[:, :side, :side]
    return field.reshape(lead + (side, side))


def binarize(v) -> np.ndarray:
    """Sign map with ``0 -> -1``. Returns ``int8`` entries in {-1, +1}."""
    v = np.asarray(v)
    return np.where(v > 0, 1, -1).astype(np.int8)


def describe(pattern: Pattern, patch, binary: bool = True) -> Descriptor:
    """Compute the descriptor of a patch (or a stack of patches) in [0, 1]."""
    x = _check_field(pattern, patch)
    if x.size and (x.min() < -1e-12 or x.max() > 1.0 + 1e-12):
        raise ParameterError("patch values must lie in [0, 1]")
    v = forward(pattern, x)
    payload = binarize(v) if binary else v
    return Descriptor(payload, pattern.pattern_id, bool(binary))


def operator_norm(pattern: Pattern, iterations: int = 100, seed: int = 0,
                  return_history: bool = False):
    """Power-method estimate of the largest singular value of ``L``.

    The returned value is inflated by ``SAFETY_FACTOR`` so that
    ``est**2 + 1`` is a safe bound on the squared norm of the stacked
    operator used by the primal-dual solver.
    """
    if iterations < 1:
        raise ParameterError("iterations must be >= 1")
    x = np.random.default_rng(seed).standard_normal((pattern.patch_side, pattern.patch_side))
    x /= np.linalg.norm(x)
    history = []
    for _ in range(iterations):
        y = adjoint(pattern, forward(pattern, x))
        ny = np.linalg.norm(y)
        if ny == 0.0:
            history.append(0.0)
            break
        x = y / ny
        history.append(float(np.linalg.norm(forward(pattern, x))))
    est = SAFETY_FACTOR * history[-1]
    if return_history:
        return est, history
    return est


def make_pattern(kind, patch_side: int = 32, m: int | None = 512, seed: int = 0) -> Pattern:
    """Dispatch helper shared by the estimator and CLI."""
    kind = PatternKind.parse(kind)
    if kind is PatternKind.BRIEF:
        return build_brief(patch_side, m, seed)
    if kind is PatternKind.CUSTOM:
        raise ParameterError("CUSTOM patterns are loaded from JSON, not built")
    return build_freak(patch_side, m, kind, seed)


def stack_descriptors(descs: Sequence[Descriptor]) -> Descriptor:
    if not descs:
        raise ParameterError("no descriptors")
    ids = {d.pattern_id for d in descs}
    kinds = {d.binary for d in descs}
    if len(ids) != 1 or len(kinds) != 1:
        raise PatternMismatchError("descriptors come from different patterns or types")
    return Descriptor(np.stack([d.payload for d in descs]), ids.pop(), kinds.pop())
