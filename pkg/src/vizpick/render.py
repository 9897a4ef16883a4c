"""Deterministic rasterization of a normalized 2-column table into chart images.

White-on-black grayscale, no axes or labels: the downstream regressor gets
geometry only.  Rendering is a pure function of (table, plot type, config),
so identical inputs produce bit-identical pixel buffers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotNormalized, WrongArity
from .tables import DataTable, PlotType

try:
    from PIL import Image
except ImportError:  # pragma: no cover - Pillow is a hard dependency
    Image = None


@dataclass(frozen=True)
class RenderConfig:
    width: int = 64
    height: int = 64
    marker_radius: float = 1.5
    line_thickness: int = 1
    density_bins: int = 32
    density_sigma: float = 1.5

    def __post_init__(self) -> None:
        if self.width < 16 or self.height < 16:
            raise ValueError("render canvas must be at least 16x16")
        if self.width % self.density_bins != 0:
            raise ValueError("density_bins must divide the canvas width evenly")
        if self.marker_radius <= 0 or self.line_thickness < 1 or self.density_sigma <= 0:
            raise ValueError("marker_radius, line_thickness, density_sigma must be positive")


@dataclass(frozen=True)
class PlotImage:
    width: int
    height: int
    pixels: np.ndarray  # (height, width) intensities in [0, 1]
    plot_type: PlotType
    table_id: str

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.shape != (self.height, self.width):
            raise WrongArity(f"pixel buffer shape {px.shape} != (height, width)")
        px = px.copy()
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def image_id(self) -> str:
        return image_id(self.table_id, self.plot_type)


def image_id(table_id: str, plot_type: PlotType) -> str:
    return f"{table_id}__{plot_type.value}"


def _check_renderable(t: DataTable) -> None:
    if t.n_columns != 2:
        raise WrongArity(f"table {t.id!r} has {t.n_columns} columns; need exactly 2")
    if not t.is_normalized():
        raise NotNormalized(f"table {t.id!r} has values outside [0, 1]")


def _disk_offsets(radius: float) -> list[tuple[int, int]]:
    reach = int(math.floor(radius))
    r2 = radius * radius
    return [
        (dr, dc)
        for dr in range(-reach, reach + 1)
        for dc in range(-reach, reach + 1)
        if dr * dr + dc * dc <= r2
    ]


def _stamp_points(canvas: np.ndarray, rows: np.ndarray, cols: np.ndarray, radius: float) -> None:
    h, w = canvas.shape
    for dr, dc in _disk_offsets(radius):
        rr = rows + dr
        cc = cols + dc
        keep = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
        canvas[rr[keep], cc[keep]] = 1.0


def _draw_polyline(canvas: np.ndarray, rows: np.ndarray, cols: np.ndarray, thickness: int) -> None:
    """Connect consecutive points with integer-rasterized (DDA) segments."""
    for i in range(len(rows) - 1):
        steps = int(max(abs(int(rows[i + 1]) - int(rows[i])), abs(int(cols[i + 1]) - int(cols[i])))) + 1
        rr = np.rint(np.linspace(rows[i], rows[i + 1], steps)).astype(np.intp)
        cc = np.rint(np.linspace(cols[i], cols[i + 1], steps)).astype(np.intp)
        if thickness == 1:
            canvas[rr, cc] = 1.0
        else:
            _stamp_points(canvas, rr, cc, thickness / 2.0)


def _gaussian_kernel(sigma: float) -> np.ndarray:
    reach = max(1, int(math.ceil(3.0 * sigma)))
    xs = np.arange(-reach, reach + 1, dtype=np.float64)
    k = np.exp(-(xs**2) / (2.0 * sigma * sigma))
    return k / k.sum()


def _blur_separable(grid: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    rows = np.array([np.convolve(r, kernel, mode="same") for r in grid])
    cols = np.array([np.convolve(c, kernel, mode="same") for c in rows.T])
    return cols.T


def _bilinear_upsample(grid: np.ndarray, height: int, width: int) -> np.ndarray:
    gh, gw = grid.shape
    u = (np.arange(height) + 0.5) * gh / height - 0.5
    i0 = np.floor(u).astype(np.intp)
    fu = u - i0
    i0c = np.clip(i0, 0, gh - 1)
    i1c = np.clip(i0 + 1, 0, gh - 1)
    rows = grid[i0c] * (1.0 - fu)[:, None] + grid[i1c] * fu[:, None]

    v = (np.arange(width) + 0.5) * gw / width - 0.5
    j0 = np.floor(v).astype(np.intp)
    fv = v - j0
    j0c = np.clip(j0, 0, gw - 1)
    j1c = np.clip(j0 + 1, 0, gw - 1)
    return rows[:, j0c] * (1.0 - fv)[None, :] + rows[:, j1c] * fv[None, :]


def _density_grid(x: np.ndarray, y: np.ndarray, cfg: RenderConfig) -> np.ndarray:
    bins = cfg.density_bins
    bx = np.minimum((x * bins).astype(np.intp), bins - 1)
    by = np.minimum(((1.0 - y) * bins).astype(np.intp), bins - 1)
    hist = np.zeros((bins, bins), dtype=np.float64)
    np.add.at(hist, (by, bx), 1.0)
    return _blur_separable(hist, _gaussian_kernel(cfg.density_sigma))


def render(t: DataTable, p: PlotType, cfg: RenderConfig | None = None) -> PlotImage:
    """Rasterize one chart kind; pure and deterministic."""
    cfg = cfg or RenderConfig()
    _check_renderable(t)
    x = t.column_values(0)
    y = t.column_values(1)
    cols = np.rint(x * (cfg.width - 1)).astype(np.intp)
    rows = np.rint((1.0 - y) * (cfg.height - 1)).astype(np.intp)
    canvas = np.zeros((cfg.height, cfg.width), dtype=np.float64)

    if p is PlotType.SCATTER:
        _stamp_points(canvas, rows, cols, cfg.marker_radius)
    elif p is PlotType.LINE:
        _stamp_points(canvas, rows, cols, cfg.marker_radius)
        _draw_polyline(canvas, rows, cols, cfg.line_thickness)
    else:
        up = _bilinear_upsample(_density_grid(x, y, cfg), cfg.height, cfg.width)
        canvas = up / up.max()

    return PlotImage(cfg.width, cfg.height, canvas, p, t.id)


def render_candidates(t: DataTable, cfg: RenderConfig | None = None) -> dict[PlotType, PlotImage]:
    """All three candidate charts of one table."""
    return {p: render(t, p, cfg) for p in PlotType}


def quantize(img: PlotImage) -> np.ndarray:
    return np.rint(img.pixels * 255.0).astype(np.uint8)


def to_pgm_bytes(img: PlotImage) -> bytes:
    """Binary PGM (P5, maxval 255); the byte-exact golden format."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + quantize(img).tobytes()


def write_pgm(img: PlotImage, path) -> None:
    with open(path, "wb") as fh:
        fh.write(to_pgm_bytes(img))


def write_png(img: PlotImage, path) -> None:
    """Lossless PNG with the same quantization as the PGM format."""
    Image.fromarray(quantize(img), mode="L").save(path, format="PNG")
