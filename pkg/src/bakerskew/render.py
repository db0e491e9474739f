"""Escape-time rasterization of fiber slices and plain PNM output.

A RenderJob fixes one coordinate of the skew product and sweeps the other
over a pixel grid; each pixel is classified with the same semantics as
dynamics.iterate (return stops an orbit, escape is certified by a monotone
window above escape_re but the orbit keeps running, overflow counts as
escaped).  Images are written as plain ASCII PGM (P2) or PPM (P3): zero
dependencies and diff-able golden files.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bulging import _eval_g_grid, _eval_h_grid
from .core import SkewProduct
from .dynamics import ESCAPE_WINDOW

UNDECIDED, ESCAPED, RETURNED = 0, 1, 2


@dataclass(frozen=True)
class RenderJob:
    F: SkewProduct
    plane: str  # "z": sweep z at fixed w; "w": sweep w at fixed z
    fixed: complex
    center: complex
    width: float
    height: float
    px_w: int
    px_h: int
    max_iter: int
    escape_re: float
    return_radius: float

    def __post_init__(self) -> None:
        if self.plane not in ("z", "w"):
            raise ValueError("plane must be 'z' or 'w'")
        if self.px_w < 16 or self.px_h < 16:
            raise ValueError("resolution must be at least 16x16")
        if not (self.width > 0 and self.height > 0):
            raise ValueError("window width/height must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        if not self.escape_re > self.return_radius > 0:
            raise ValueError("need escape_re > return_radius > 0")


@dataclass
class ImageGrid:
    """Per-pixel class (0 undecided, 1 escaped, 2 returned) and the step at
    which the class was decided (0 for undecided pixels)."""

    classes: np.ndarray  # uint8, shape (px_h, px_w)
    steps: np.ndarray  # int32, shape (px_h, px_w)
    max_iter: int

    def counts(self) -> dict:
        return {
            "undecided": int(np.count_nonzero(self.classes == UNDECIDED)),
            "escaped": int(np.count_nonzero(self.classes == ESCAPED)),
            "returned": int(np.count_nonzero(self.classes == RETURNED)),
        }


def _render_rows(job: RenderJob, rows: np.ndarray) -> tuple:
    """Classify the given row indices; returns (classes, steps) blocks."""
    W, H = job.px_w, job.px_h
    i = np.arange(W)
    x = job.center.real - job.width / 2 + (i + 0.5) * job.width / W
    y = job.center.imag + job.height / 2 - (rows + 0.5) * job.height / H
    coord = x[None, :] + 1j * y[:, None]

    if job.plane == "z":
        z = coord.astype(complex).copy()
        w = np.full_like(z, complex(job.fixed))
    else:
        w = coord.astype(complex).copy()
        z = np.full_like(w, complex(job.fixed))

    shape = z.shape
    classes = np.zeros(shape, dtype=np.uint8)
    steps = np.zeros(shape, dtype=np.int32)
    active = np.ones(shape, dtype=bool)  # still iterating
    run = np.zeros(shape, dtype=np.int32)
    escape_step = np.zeros(shape, dtype=np.int32)  # 0 = not yet certified
    prev_re = z.real.copy()
    a = complex(job.F.f.a)

    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for k in range(1, job.max_iter + 1):
            if not active.any():
                break
            zn = z[active] + a + np.exp(-z[active]) + w[active] * _eval_h_grid(
                job.F.h, z[active], w[active]
            )
            wn = _eval_g_grid(job.F.g, w[active])
            z[active] = zn
            w[active] = wn

            cur = np.where(active, z, 0)
            finite = np.isfinite(z.real) & np.isfinite(z.imag)
            blown = active & ~finite
            if blown.any():  # overflow counts as escaped at this step
                classes[blown] = ESCAPED
                steps[blown] = k
                active &= ~blown

            returned = active & (np.abs(cur) <= job.return_radius)
            if returned.any():
                classes[returned] = RETURNED
                steps[returned] = k
                active &= ~returned

            growing = active & (cur.real > job.escape_re) & (cur.real > prev_re)
            run = np.where(growing, run + 1, 0)
            newly = active & (run >= ESCAPE_WINDOW) & (escape_step == 0)
            escape_step = np.where(newly, k, escape_step)
            prev_re = np.where(active, cur.real, prev_re)

    certified = active & (escape_step > 0)
    classes[certified] = ESCAPED
    steps[certified] = escape_step[certified]
    return classes, steps


def _thread_count() -> int:
    raw = os.environ.get("BAKER_SKEW_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, n)


def render(job: RenderJob) -> ImageGrid:
    """Classify every pixel; rows are processed in parallel blocks and
    reassembled in order, so the result is deterministic for a given job."""
    H = job.px_h
    classes = np.zeros((H, job.px_w), dtype=np.uint8)
    steps = np.zeros((H, job.px_w), dtype=np.int32)
    if job.max_iter == 0:
        return ImageGrid(classes, steps, job.max_iter)

    workers = _thread_count()
    block = max(1, math.ceil(H / (workers * 4)))
    starts = list(range(0, H, block))

    def work(s: int) -> tuple:
        rows = np.arange(s, min(s + block, H))
        return s, _render_rows(job, rows)

    if workers == 1:
        results = [work(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, starts))
    for s, (cb, sb) in results:
        classes[s : s + cb.shape[0]] = cb
        steps[s : s + sb.shape[0]] = sb
    return ImageGrid(classes, steps, job.max_iter)


# ---------------------------------------------------------------------------
# plain PNM serialization
# ---------------------------------------------------------------------------


def _intensity(grid: ImageGrid) -> np.ndarray:
    """255 * k / max_iter rounded half-up for classified pixels, 0 otherwise."""
    if grid.max_iter <= 0:
        return np.zeros_like(grid.steps)
    scaled = np.floor(255.0 * grid.steps / grid.max_iter + 0.5).astype(np.int64)
    scaled = np.clip(scaled, 0, 255)
    return np.where(grid.classes == UNDECIDED, 0, scaled)


def _wrap_tokens(tokens: list, limit: int = 70) -> list:
    lines: list = []
    cur = ""
    for t in tokens:
        if not cur:
            cur = t
        elif len(cur) + 1 + len(t) <= limit:
            cur += " " + t
        else:
            lines.append(cur)
            cur = t
    if cur:
        lines.append(cur)
    return lines


def image_text(grid: ImageGrid, fmt: str) -> str:
    """Serialize to plain PGM ('pgm', intensity only) or PPM ('ppm', class
    mapped to channel: escaped red, returned green, undecided blue)."""
    h, w = grid.classes.shape
    inten = _intensity(grid)
    if fmt == "pgm":
        header = f"P2\n{w} {h}\n255\n"
        body_lines: list = []
        for row in range(h):
            body_lines.extend(_wrap_tokens([str(int(v)) for v in inten[row]]))
        return header + "\n".join(body_lines) + "\n"
    if fmt == "ppm":
        header = f"P3\n{w} {h}\n255\n"
        body_lines = []
        for row in range(h):
            toks = []
            for col in range(w):
                c = grid.classes[row, col]
                i = int(inten[row, col])
                if c == ESCAPED:
                    toks += [str(i), "0", "0"]
                elif c == RETURNED:
                    toks += ["0", str(i), "0"]
                else:
                    toks += ["0", "0", "255"]
            body_lines.extend(_wrap_tokens(toks))
        return header + "\n".join(body_lines) + "\n"
    raise ValueError(f"unknown image format {fmt!r}")


def write_image(grid: ImageGrid, path: str, fmt: str | None = None) -> None:
    """Write a PGM/PPM file; the format follows the extension unless forced."""
    if fmt is None:
        ext = os.path.splitext(path)[1].lower()
        fmt = {"": "pgm", ".pgm": "pgm", ".ppm": "ppm"}.get(ext)
        if fmt is None:
            raise ValueError(f"cannot infer image format from {path!r}")
    text = image_text(grid, fmt)
    with open(path, "w") as fh:
        fh.write(text)


def _tokens(path: str) -> list:
    toks: list = []
    with open(path) as fh:
        for line in fh:
            hash_at = line.find("#")
            if hash_at >= 0:
                line = line[:hash_at]
            toks.extend(line.split())
    return toks


def read_image(path: str) -> dict:
    """Parse a plain PGM/PPM back into {format, width, height, maxval,
    values} with values as a (h, w) or (h, w, 3) integer array."""
    toks = _tokens(path)
    magic = toks[0]
    w, h, maxval = int(toks[1]), int(toks[2]), int(toks[3])
    data = np.array([int(t) for t in toks[4:]], dtype=np.int64)
    if magic == "P2":
        if data.size != w * h:
            raise ValueError("PGM payload size mismatch")
        values = data.reshape(h, w)
        fmt = "pgm"
    elif magic == "P3":
        if data.size != 3 * w * h:
            raise ValueError("PPM payload size mismatch")
        values = data.reshape(h, w, 3)
        fmt = "ppm"
    else:
        raise ValueError(f"unsupported magic {magic!r}")
    return {"format": fmt, "width": w, "height": h, "maxval": maxval, "values": values}


def classes_from_ppm(values: np.ndarray) -> np.ndarray:
    """Recover the class buckets from a PPM written by image_text."""
    blue = values[:, :, 2] == 255
    red = values[:, :, 0] > 0
    green = values[:, :, 1] > 0
    out = np.zeros(values.shape[:2], dtype=np.uint8)
    out[red] = ESCAPED
    out[green] = RETURNED
    out[blue & ~red & ~green] = UNDECIDED
    return out
