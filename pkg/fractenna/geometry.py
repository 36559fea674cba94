"""Antenna stack-up and conductor layout.

Layout coordinates: x runs across the board width, y along the feed line,
origin at the board corner on the feed edge. The feed is centred in x and
starts at y = 0; the patch occupies y in [FL, FL + L].

Conductor sets are tuples of axis-aligned rectangles. They are kept in a
canonical non-overlapping decomposition (maximal x-runs per band, merged
vertically), so equal copper sets compare equal rectangle by rectangle.
"""
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from .exceptions import DimensionConflictError, DisconnectedIslandError
from .genome import Chromosome
from .schemas import (AntennaLayout, FeedSpec, FractalCutSpec, GroundSpec,
                      PatchDimensions, Rect, StairSpec, SubstrateSpec)
from .utils.keyvalue import format_dotted, parse_dotted


_DIGITS = 12
_EPS = 1e-12


def _r(v: float) -> float:
    return round(float(v), _DIGITS)


# --- rectangle sets -------------------------------------------------------

def _axes(*groups: Iterable[Rect]) -> Tuple[List[float], List[float]]:
    xs, ys = set(), set()
    for rects in groups:
        for rect in rects:
            if rect.area > 0:
                xs.update((_r(rect.x0), _r(rect.x1)))
                ys.update((_r(rect.y0), _r(rect.y1)))
    return sorted(xs), sorted(ys)


def _cover(rects: Iterable[Rect], xs: Sequence[float], ys: Sequence[float]) -> np.ndarray:
    mask = np.zeros((max(len(xs) - 1, 0), max(len(ys) - 1, 0)), dtype=bool)
    xi = {v: i for i, v in enumerate(xs)}
    yi = {v: i for i, v in enumerate(ys)}
    for rect in rects:
        if rect.area > 0:
            mask[xi[_r(rect.x0)]:xi[_r(rect.x1)], yi[_r(rect.y0)]:yi[_r(rect.y1)]] = True
    return mask


def _runs(column: np.ndarray) -> List[Tuple[int, int]]:
    padded = np.concatenate(([False], column, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return list(zip(edges[0::2].tolist(), edges[1::2].tolist()))


def _merge(mask: np.ndarray, xs: Sequence[float], ys: Sequence[float]) -> Tuple[Rect, ...]:
    out: List[Rect] = []
    open_runs: Dict[Tuple[int, int], int] = {}
    n_bands = mask.shape[1] if mask.size else 0
    for j in range(n_bands + 1):
        runs = set(_runs(mask[:, j])) if j < n_bands else set()
        for run in sorted(open_runs):
            if run not in runs:
                start = open_runs.pop(run)
                out.append(Rect(xs[run[0]], ys[start], xs[run[1]], ys[j]))
        for run in sorted(runs):
            open_runs.setdefault(run, j)
    return tuple(sorted(out, key=lambda r: (r.y0, r.x0, r.y1, r.x1)))


def normalize(rects: Iterable[Rect]) -> Tuple[Rect, ...]:
    """Canonical non-overlapping decomposition of the union of rects."""
    rects = [Rect(*r) for r in rects]
    xs, ys = _axes(rects)
    return _merge(_cover(rects, xs, ys), xs, ys)


def subtract(rects: Iterable[Rect], cuts: Iterable[Rect]) -> Tuple[Rect, ...]:
    rects = [Rect(*r) for r in rects]
    cuts = [Rect(*c) for c in cuts]
    xs, ys = _axes(rects, cuts)
    mask = _cover(rects, xs, ys) & ~_cover(cuts, xs, ys)
    return _merge(mask, xs, ys)


def union_area(rects: Iterable[Rect]) -> float:
    return float(sum(r.area for r in normalize(rects)))


def touches(a: Rect, b: Rect) -> bool:
    """True when a and b overlap or share a boundary segment of positive length."""
    xo = min(a.x1, b.x1) - max(a.x0, b.x0)
    yo = min(a.y1, b.y1) - max(a.y0, b.y0)
    return (xo > _EPS and yo > -_EPS) or (yo > _EPS and xo > -_EPS)


def island_count(rects: Iterable[Rect]) -> int:
    rects = list(rects)
    xs, ys = _axes(rects)
    _, count = ndimage.label(_cover(rects, xs, ys))
    return int(count)


def _check_single_island(copper: Sequence[Rect], feed: Sequence[Rect]) -> None:
    if not copper:
        raise DisconnectedIslandError("patch has no copper left")
    xs, ys = _axes(copper, feed)
    copper_mask = _cover(copper, xs, ys)
    _, count = ndimage.label(copper_mask)
    if count != 1:
        raise DisconnectedIslandError(f"patch copper splits into {count} islands")
    feed_mask = ndimage.binary_dilation(_cover(feed, xs, ys))
    if not (feed_mask & copper_mask).any():
        raise DisconnectedIslandError("patch copper does not reach the feed junction")


# --- layout construction --------------------------------------------------

def _feed_rects(substrate: SubstrateSpec, feed: FeedSpec) -> List[Rect]:
    xc = 0.5 * substrate.width_sub
    half = 0.5 * feed.feed_width_FW
    rects = [Rect(xc - half, 0.0, xc + half, feed.feed_length_FL + feed.inset_depth)]
    top = feed.feed_length_FL
    for stair in feed.stairs:
        rects.append(Rect(xc - 0.5 * stair.width, top - stair.length, xc + 0.5 * stair.width, top))
        top -= stair.length
    return rects


def _ground_rects(substrate: SubstrateSpec, ground: GroundSpec) -> Tuple[Rect, ...]:
    plane = Rect(0.0, 0.0, substrate.width_sub, ground.ground_length_Lg)
    if ground.slot_width_Gw <= 0 or ground.slot_depth <= 0:
        return normalize([plane])
    xc = 0.5 * substrate.width_sub
    slot = Rect(xc - 0.5 * ground.slot_width_Gw, ground.ground_length_Lg - ground.slot_depth,
                xc + 0.5 * ground.slot_width_Gw, ground.ground_length_Lg)
    return subtract([plane], [slot])


def _check_dimensions(substrate: SubstrateSpec, patch: PatchDimensions,
                      feed: FeedSpec, ground: GroundSpec) -> None:
    if feed.feed_width_FW >= substrate.width_sub:
        raise DimensionConflictError(
            f"feed width {feed.feed_width_FW * 1e3:.3f} mm exceeds substrate width "
            f"{substrate.width_sub * 1e3:.3f} mm")
    if patch.width_W >= substrate.width_sub:
        raise DimensionConflictError("patch is wider than the substrate")
    if feed.feed_length_FL + patch.length_L > substrate.length_sub:
        raise DimensionConflictError("feed line plus patch is longer than the substrate")
    if feed.feed_width_FW >= patch.width_W:
        raise DimensionConflictError("feed must be narrower than the patch")
    if feed.inset_depth >= patch.length_L:
        raise DimensionConflictError("inset depth must be shorter than the patch")
    if feed.inset_depth > 0 and feed.feed_width_FW + 2 * feed.inset_gap >= patch.width_W:
        raise DimensionConflictError("inset notch is wider than the patch")
    if any(s.width >= substrate.width_sub for s in feed.stairs):
        raise DimensionConflictError("feed stair is wider than the substrate")
    if ground.ground_length_Lg >= substrate.length_sub:
        raise DimensionConflictError("ground plane must be shorter than the substrate (partial ground)")
    if ground.slot_width_Gw >= substrate.width_sub:
        raise DimensionConflictError("ground slot is wider than the substrate")
    if not 1.0 < patch.eps_eff < substrate.eps_r:
        raise DimensionConflictError("eps_eff must lie between 1 and the substrate eps_r")


def build_baseline_layout(substrate: SubstrateSpec, patch: PatchDimensions,
                          feed: FeedSpec, ground: GroundSpec) -> AntennaLayout:
    """Unoptimized square patch with inset feed and slotted partial ground; no cuts."""
    _check_dimensions(substrate, patch, feed, ground)
    x0 = 0.5 * (substrate.width_sub - patch.width_W)
    y0 = feed.feed_length_FL
    outline = Rect(x0, y0, x0 + patch.width_W, y0 + patch.length_L)
    notches = []
    if feed.inset_depth > 0:
        half = 0.5 * feed.feed_width_FW + feed.inset_gap
        xc = 0.5 * substrate.width_sub
        notches.append(Rect(xc - half, y0, xc + half, y0 + feed.inset_depth))
    layout = AntennaLayout(
        substrate=substrate, patch=patch, feed=feed, ground=ground,
        copper_regions=subtract([outline], notches),
        feed_regions=normalize(_feed_rects(substrate, feed)),
        ground_regions=_ground_rects(substrate, ground),
    )
    logging.debug(f"基準佈局建立完成: 銅箔 {len(layout.copper_regions)} 塊, 面積 {copper_area(layout) * 1e6:.3f} mm^2")
    return layout


def table_i_stairs() -> Tuple[StairSpec, ...]:
    from .config import TABLE_I_STAIRS
    return tuple(StairSpec(length=l, width=w) for l, w in TABLE_I_STAIRS)


def copper_area(layout: AntennaLayout) -> float:
    return union_area(layout.copper_regions)


# --- pixels and chromosomes -----------------------------------------------

def pixel_rect(layout: AntennaLayout, n: int, row: int, col: int) -> Rect:
    outline = layout.patch_outline
    w, l = outline.width, outline.height
    return Rect(outline.x0 + w * col / n, outline.y0 + l * row / n,
                outline.x0 + w * (col + 1) / n, outline.y0 + l * (row + 1) / n)


def materialize(chromosome: Chromosome, base: AntennaLayout) -> AntennaLayout:
    """Removes every gene-0 pixel from the base copper; feed and ground are untouched."""
    n = chromosome.n
    removed = [pixel_rect(base, n, i, j) for i, j in zip(*np.nonzero(chromosome.genes == 0))]
    copper = subtract(base.copper_regions, removed) if removed else normalize(base.copper_regions)
    _check_single_island(copper, base.feed_regions)
    return base.model_copy(update={"copper_regions": copper})


def pixel_copper(base: AntennaLayout, n: int) -> np.ndarray:
    """Which pixels hold any base copper at all."""
    out = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            px = pixel_rect(base, n, i, j)
            out[i, j] = any(min(px.x1, r.x1) - max(px.x0, r.x0) > _EPS and
                            min(px.y1, r.y1) - max(px.y0, r.y0) > _EPS
                            for r in base.copper_regions)
    return out


def feed_attached_pixels(base: AntennaLayout, n: int) -> np.ndarray:
    """Pixels that touch the feed conductor (the junction)."""
    has_copper = pixel_copper(base, n)
    out = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            if has_copper[i, j]:
                px = pixel_rect(base, n, i, j)
                out[i, j] = any(touches(px, f) for f in base.feed_regions)
    return out


# --- fractal cuts ---------------------------------------------------------

def fractal_cut_rects(layout: AntennaLayout, cuts: FractalCutSpec) -> List[Rect]:
    """Four W1 x L1 corner cuts plus one W2 x L2 centre cut."""
    o = layout.patch_outline
    w1, l1 = cuts.edge_cut_w1, cuts.edge_cut_l1
    xc, yc = 0.5 * (o.x0 + o.x1), 0.5 * (o.y0 + o.y1)
    rects = [
        Rect(o.x0, o.y0, o.x0 + w1, o.y0 + l1),
        Rect(o.x1 - w1, o.y0, o.x1, o.y0 + l1),
        Rect(o.x0, o.y1 - l1, o.x0 + w1, o.y1),
        Rect(o.x1 - w1, o.y1 - l1, o.x1, o.y1),
        Rect(xc - 0.5 * cuts.center_cut_w2, yc - 0.5 * cuts.center_cut_l2,
             xc + 0.5 * cuts.center_cut_w2, yc + 0.5 * cuts.center_cut_l2),
    ]
    return [r for r in rects if r.area > 0]


def _check_cuts(layout: AntennaLayout, cuts: FractalCutSpec) -> List[Rect]:
    o = layout.patch_outline
    if 2 * cuts.edge_cut_w1 >= o.width or 2 * cuts.edge_cut_l1 >= o.height:
        raise DimensionConflictError("corner cuts overlap each other")
    if cuts.center_cut_w2 >= o.width - 2 * cuts.edge_cut_w1 and cuts.center_cut_w2 > 0:
        raise DimensionConflictError("centre cut does not fit between the corner cuts")
    if cuts.center_cut_l2 >= o.height - 2 * cuts.edge_cut_l1 and cuts.center_cut_l2 > 0:
        raise DimensionConflictError("centre cut does not fit between the corner cuts")
    rects = fractal_cut_rects(layout, cuts)
    for cut in rects:
        if any(touches(cut, f) for f in layout.feed_regions):
            raise DimensionConflictError("fractal cut overlaps the feed junction")
    return rects


def build_fractal_layout(base: AntennaLayout, cuts: FractalCutSpec) -> AntennaLayout:
    rects = _check_cuts(base, cuts)
    copper = subtract(base.copper_regions, rects)
    _check_single_island(copper, base.feed_regions)
    return base.model_copy(update={"copper_regions": copper})


def fractal_chromosome(n: int, base: AntennaLayout, cuts: FractalCutSpec) -> Chromosome:
    """Pixel encoding of the cuts: a pixel is removed when its centre lies in a cut."""
    rects = _check_cuts(base, cuts)
    genes = np.ones((n, n), dtype=np.uint8)
    for i in range(n):
        for j in range(n):
            px = pixel_rect(base, n, i, j)
            cx, cy = _r(0.5 * (px.x0 + px.x1)), _r(0.5 * (px.y0 + px.y1))
            if any(_r(c.x0) <= cx < _r(c.x1) and _r(c.y0) <= cy < _r(c.y1) for c in rects):
                genes[i, j] = 0
    return Chromosome(n, genes)


# --- rasterization --------------------------------------------------------

def cell_span(lo: float, hi: float, origin: float, cell: float, count: int) -> Tuple[int, int]:
    """Floor-snapped cell index range [i0, i1) covered by [lo, hi)."""
    i0 = int(math.floor((lo - origin) / cell + 1e-9))
    i1 = int(math.floor((hi - origin) / cell + 1e-9))
    return max(i0, 0), min(i1, count)


def cell_mask(rects: Iterable[Rect], origin: Tuple[float, float], cell: Tuple[float, float],
              shape: Tuple[int, int]) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    for rect in rects:
        i0, i1 = cell_span(rect.x0, rect.x1, origin[0], cell[0], shape[0])
        j0, j1 = cell_span(rect.y0, rect.y1, origin[1], cell[1], shape[1])
        if i1 > i0 and j1 > j0:
            mask[i0:i1, j0:j1] = True
    return mask


def layouts_equivalent(a: AntennaLayout, b: AntennaLayout, cell: float) -> bool:
    """Rasterized equality of both conductor layers at the given cell size."""
    width = max(a.substrate.width_sub, b.substrate.width_sub)
    length = max(a.substrate.length_sub, b.substrate.length_sub)
    shape = (int(math.ceil(width / cell)) + 1, int(math.ceil(length / cell)) + 1)

    def layers(layout: AntennaLayout):
        top = list(layout.copper_regions) + list(layout.feed_regions)
        return (cell_mask(top, (0.0, 0.0), (cell, cell), shape),
                cell_mask(layout.ground_regions, (0.0, 0.0), (cell, cell), shape))

    (ta, ga), (tb, gb) = layers(a), layers(b)
    return bool(np.array_equal(ta, tb) and np.array_equal(ga, gb))


# --- text format ----------------------------------------------------------

_MM_FIELDS = {
    "substrate": ("height_h", "length_sub", "width_sub"),
    "patch": ("width_W", "length_L", "delta_L"),
    "feed": ("feed_length_FL", "feed_width_FW", "inset_depth", "inset_gap"),
    "ground": ("ground_length_Lg", "slot_width_Gw", "slot_depth"),
}
_PLAIN_FIELDS = {
    "substrate": ("eps_r", "loss_tangent"),
    "patch": ("eps_eff", "design_freq_fr"),
}


def _rect_mm(rect: Rect) -> str:
    return " ".join(f"{v * 1e3:.6f}" for v in rect)


def dump_layout(layout: AntennaLayout) -> str:
    """Key/value document, lengths in millimeters with 6 decimals."""
    items = []
    for section in ("substrate", "patch", "feed", "ground"):
        model = getattr(layout, section)
        for name in _PLAIN_FIELDS.get(section, ()):
            items.append((f"{section}.{name}", f"{getattr(model, name):.6f}"))
        for name in _MM_FIELDS[section]:
            items.append((f"{section}.{name}", f"{getattr(model, name) * 1e3:.6f}"))
    for k, stair in enumerate(layout.feed.stairs):
        items.append((f"feed.stair.{k}", f"{stair.length * 1e3:.6f} {stair.width * 1e3:.6f}"))
    for name, rects in (("copper", layout.copper_regions), ("feed_region", layout.feed_regions),
                        ("ground_region", layout.ground_regions)):
        for k, rect in enumerate(rects):
            items.append((f"{name}.{k}", _rect_mm(rect)))
    return format_dotted(items, header="fractenna layout v1\nlengths in mm (x0 y0 x1 y1 for rectangles)")


def parse_layout(text: str) -> AntennaLayout:
    entries = {k: v for k, (v, _) in parse_dotted(text).items()}
    fields: Dict[str, Dict[str, float]] = {s: {} for s in _MM_FIELDS}
    for section, names in _MM_FIELDS.items():
        for name in names:
            fields[section][name] = float(entries[f"{section}.{name}"]) * 1e-3
    for section, names in _PLAIN_FIELDS.items():
        for name in names:
            fields[section][name] = float(entries[f"{section}.{name}"])

    def rect_list(prefix: str) -> Tuple[Rect, ...]:
        keys = sorted((k for k in entries if k.startswith(prefix + ".")), key=lambda k: int(k.split(".")[-1]))
        return tuple(Rect(*(float(v) * 1e-3 for v in entries[k].split())) for k in keys)

    stair_keys = sorted((k for k in entries if k.startswith("feed.stair.")), key=lambda k: int(k.split(".")[-1]))
    stairs = []
    for k in stair_keys:
        length, width = (float(v) * 1e-3 for v in entries[k].split())
        stairs.append(StairSpec(length=length, width=width))
    return AntennaLayout(
        substrate=SubstrateSpec(**fields["substrate"]),
        patch=PatchDimensions(**fields["patch"]),
        feed=FeedSpec(**fields["feed"], stairs=tuple(stairs)),
        ground=GroundSpec(**fields["ground"]),
        copper_regions=rect_list("copper"),
        feed_regions=rect_list("feed_region"),
        ground_regions=rect_list("ground_region"),
    )


def load_layout(path: Union[str, Path]) -> AntennaLayout:
    try:
        return parse_layout(Path(path).read_text(encoding="utf-8"))
    except KeyError as e:
        raise ValueError(f"{path}: missing layout key {e.args[0]}") from e
