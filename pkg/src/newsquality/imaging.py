"""Per-image numeric kernels.

Everything here is a pure function of numpy arrays: RGB images are
``(h, w, 3) uint8`` and grayscale images are ``(h, w) float64`` luma in
[0, 255].  3x3 filters use edge-replicate padding so the frame itself never
reads as an edge.
"""
from __future__ import annotations

import numpy as np
from PIL import Image

NORMALIZED_SIZE = (240, 180)  # (width, height)
EDGE_FRACTION = 0.25
HARRIS_K = 0.04

SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=float)
SOBEL_Y = SOBEL_X.T.copy()
LAPLACIAN = np.array([[0, 1, 0], [1, -4, 1], [0, 1, 0]], dtype=float)

# (dy, dx) for the 8-neighbourhood
NEIGHBOURS = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]


def as_rgb(pixels) -> np.ndarray:
    arr = np.asarray(pixels)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) RGB array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    return arr.astype(np.uint8, copy=False)


def to_gray(pixels) -> np.ndarray:
    """Luma with fixed 0.299/0.587/0.114 weights, exact for integer input."""
    rgb = as_rgb(pixels).astype(np.int64)
    return (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2]) / 1000.0


def resize_bilinear(arr: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resample of an RGB uint8 or a 2-D float array.

    Pillow's bilinear filter widens its support when downscaling, which keeps
    the result free of aliasing. Same-size input is returned unchanged.
    """
    arr = np.asarray(arr)
    if arr.shape[1] == width and arr.shape[0] == height:
        return arr.copy()
    if arr.ndim == 3:
        im = Image.fromarray(as_rgb(arr), "RGB")
        return np.asarray(im.resize((width, height), Image.BILINEAR), dtype=np.uint8)
    im = Image.fromarray(arr.astype(np.float32), "F")
    return np.asarray(im.resize((width, height), Image.BILINEAR), dtype=np.float64)


def normalize(pixels, size: tuple[int, int] = NORMALIZED_SIZE) -> np.ndarray:
    """Resample an RGB image to ``size`` (width, height), 240x180 by default."""
    return resize_bilinear(as_rgb(pixels), size[0], size[1])


def filter3(gray: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """3x3 correlation with edge-replicate padding."""
    g = np.asarray(gray, dtype=float)
    p = np.pad(g, 1, mode="edge")
    h, w = g.shape
    out = np.zeros_like(g)
    for dy in range(3):
        for dx in range(3):
            c = kernel[dy, dx]
            if c:
                out += c * p[dy:dy + h, dx:dx + w]
    return out


def box3(arr: np.ndarray) -> np.ndarray:
    return filter3(arr, np.ones((3, 3)))


def sobel(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (gx, gy); gx grows left-to-right, gy grows top-to-bottom."""
    return filter3(gray, SOBEL_X), filter3(gray, SOBEL_Y)


def edge_map(gray: np.ndarray, fraction: float = EDGE_FRACTION):
    """Sobel gradients plus the edge mask ``magnitude > fraction * max``."""
    gx, gy = sobel(gray)
    mag = np.hypot(gx, gy)
    top = mag.max() if mag.size else 0.0
    if top <= 0:
        return gx, gy, mag, np.zeros(mag.shape, dtype=bool)
    return gx, gy, mag, mag > fraction * top


def edge_histogram(gray: np.ndarray) -> tuple[int, int, int, int]:
    """Edge pixel counts by edge direction: (vertical, horizontal, 45, 135).

    Direction is the gradient angle turned by 90 degrees, measured with the y
    axis pointing up, and snapped to the nearest multiple of 45 degrees.
    """
    gx, gy, _, edges = edge_map(gray)
    if not edges.any():
        return (0, 0, 0, 0)
    angle = np.degrees(np.arctan2(-gy[edges], gx[edges]))
    direction = np.mod(angle + 90.0, 180.0)
    bins = np.mod(np.rint(direction / 45.0).astype(int), 4)
    counts = np.bincount(bins, minlength=4)
    # bins: 0 horizontal, 1 -> 45, 2 vertical, 3 -> 135
    return int(counts[2]), int(counts[0]), int(counts[1]), int(counts[3])


def hough_hv_lines(gray: np.ndarray, min_points: int = 20) -> tuple[int, int]:
    """Axis-parallel Hough transform over the edge map.

    With theta restricted to 0 and 90 degrees and 1-pixel rho bins, the
    accumulator cells are exactly the image columns and rows, so each cell's
    vote is the number of edge pixels on that column/row.
    Returns (horizontal_lines, vertical_lines).
    """
    _, _, _, edges = edge_map(gray)
    rho_theta90 = edges.sum(axis=1)  # rho = y
    rho_theta0 = edges.sum(axis=0)   # rho = x
    return int((rho_theta90 >= min_points).sum()), int((rho_theta0 >= min_points).sum())


def harris_response(gray: np.ndarray, k: float = HARRIS_K) -> np.ndarray:
    gx, gy = sobel(gray)
    sxx = box3(gx * gx)
    syy = box3(gy * gy)
    sxy = box3(gx * gy)
    return sxx * syy - sxy * sxy - k * (sxx + syy) ** 2


def _local_maxima(resp: np.ndarray) -> np.ndarray:
    """3x3 non-maximum suppression; a flat plateau yields one maximum.

    A pixel must beat every neighbour that precedes it in raster order and
    tie-or-beat every neighbour after it.
    """
    h, w = resp.shape
    p = np.pad(resp, 1, mode="constant", constant_values=-np.inf)
    keep = np.ones(resp.shape, dtype=bool)
    for dy, dx in NEIGHBOURS:
        nb = p[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
        if dy < 0 or (dy == 0 and dx < 0):
            keep &= resp > nb
        else:
            keep &= resp >= nb
    return keep


def harris_corner_counts(gray: np.ndarray, fractions) -> list[int]:
    """Corner counts for several relative thresholds from one response map."""
    resp = harris_response(gray)
    top = resp.max()
    if top <= 0:
        return [0 for _ in fractions]
    peaks = resp[_local_maxima(resp)]
    return [int((peaks > f * top).sum()) for f in fractions]


def harris_corner_count(gray: np.ndarray, response_fraction: float = 0.1801) -> int:
    if not 0 < response_fraction <= 1:
        raise ValueError("response_fraction must be in (0, 1]")
    return harris_corner_counts(gray, [response_fraction])[0]


def color_distance_map(pixels) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel summed L1 RGB distance to existing 8-neighbours.

    Returns the distance map and the per-pixel neighbour count.
    """
    rgb = as_rgb(pixels).astype(np.int32)
    h, w, _ = rgb.shape
    dist = np.zeros((h, w), dtype=np.int64)
    count = np.zeros((h, w), dtype=np.int64)
    for dy, dx in NEIGHBOURS:
        ys = slice(max(0, -dy), h - max(0, dy))
        xs = slice(max(0, -dx), w - max(0, dx))
        yn = slice(max(0, dy), h - max(0, -dy))
        xn = slice(max(0, dx), w - max(0, -dx))
        dist[ys, xs] += np.abs(rgb[ys, xs] - rgb[yn, xn]).sum(axis=2)
        count[ys, xs] += 1
    return dist, count


def color_transitions(pixels) -> tuple[float, float, float]:
    """(f1, f2, f2/f1): fractions of pixels with any / strong colour change.

    "Strong" means more than a quarter of the largest possible distance for
    that pixel, 765 per existing neighbour (6120 in the interior).
    """
    rgb = as_rgb(pixels)
    if rgb.shape[0] < 2 or rgb.shape[1] < 2:
        raise ValueError("color_transitions needs an image of at least 2x2")
    dist, count = color_distance_map(rgb)
    n = dist.size
    f1 = np.count_nonzero(dist > 0) / n
    f2 = np.count_nonzero(4 * dist > 765 * count) / n
    ratio = f2 / f1 if f1 > 0 else 0.0
    return float(f1), float(f2), float(ratio)


def _packed(rgb: np.ndarray) -> np.ndarray:
    a = rgb.astype(np.int64)
    return (a[..., 0] << 16) | (a[..., 1] << 8) | a[..., 2]


def most_common_color_ratio(pixels) -> float:
    rgb = as_rgb(pixels)
    _, counts = np.unique(_packed(rgb).ravel(), return_counts=True)
    return float(counts.max() / counts.sum())


def rgb_to_hsv(pixels) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """H in degrees [0, 360), S and V in [0, 1]."""
    rgb = as_rgb(pixels).astype(float) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = rgb.max(axis=2)
    mn = rgb.min(axis=2)
    delta = mx - mn
    safe = np.where(delta > 0, delta, 1.0)
    hue = np.zeros_like(mx)
    rmax = (mx == r) & (delta > 0)
    gmax = (mx == g) & (delta > 0) & ~rmax
    bmax = (delta > 0) & ~rmax & ~gmax
    hue[rmax] = np.mod((g - b)[rmax] / safe[rmax], 6.0)
    hue[gmax] = (b - r)[gmax] / safe[gmax] + 2.0
    hue[bmax] = (r - g)[bmax] / safe[bmax] + 4.0
    hue = np.mod(hue * 60.0, 360.0)
    sat = np.where(mx > 0, delta / np.where(mx > 0, mx, 1.0), 0.0)
    return hue, sat, mx


def hsv_histogram(pixels, bins: int = 8) -> np.ndarray:
    """Joint HSV histogram with ``bins`` equal bins per axis (512 by default)."""
    hue, sat, val = rgb_to_hsv(pixels)
    hb = np.floor(hue / (360.0 / bins)).astype(int) % bins  # 360 wraps to bin 0
    sb = np.minimum((sat * bins).astype(int), bins - 1)
    vb = np.minimum((val * bins).astype(int), bins - 1)
    idx = (hb * bins + sb) * bins + vb
    return np.bincount(idx.ravel(), minlength=bins ** 3)


def dominant_colors(pixels, bin_threshold: int = 600) -> int:
    """Number of HSV bins holding more than ``bin_threshold`` pixels."""
    if bin_threshold < 0:
        raise ValueError("bin_threshold must be >= 0")
    return int((hsv_histogram(pixels) > bin_threshold).sum())


def entropy(gray: np.ndarray) -> float:
    """Shannon entropy (bits) of the 256-level grayscale histogram."""
    levels = np.clip(np.rint(gray), 0, 255).astype(np.int64)
    hist = np.bincount(levels.ravel(), minlength=256)
    p = hist[hist > 0] / levels.size
    h = float(-(p * np.log2(p)).sum())
    return min(max(h, 0.0), 8.0)


def luminance(gray: np.ndarray) -> float:
    return float(np.mean(gray))


def focus(gray: np.ndarray) -> float:
    """Variance of the 3x3 Laplacian, divided by 255**2."""
    lap = filter3(gray, LAPLACIAN)
    return float(lap.var() / 255.0 ** 2)


def simplicity(pixels, coverage: float = 0.95) -> float:
    """1 - k/512 where k is the fewest RGB bins covering 95% of the pixels."""
    rgb = as_rgb(pixels)
    idx = ((rgb[..., 0] >> 5).astype(np.int64) * 64
           + (rgb[..., 1] >> 5).astype(np.int64) * 8
           + (rgb[..., 2] >> 5).astype(np.int64))
    counts = np.sort(np.bincount(idx.ravel(), minlength=512))[::-1]
    cum = np.cumsum(counts)
    need = coverage * idx.size
    k = int(np.searchsorted(cum, need - 1e-9 * idx.size, side="left")) + 1
    return 1.0 - k / 512.0


def _third_bands(n: int) -> np.ndarray:
    centres = np.arange(n) + 0.5
    half = n / 24.0
    return (np.abs(centres - n / 3.0) <= half) | (np.abs(centres - 2.0 * n / 3.0) <= half)


def rule_of_thirds(gray: np.ndarray) -> float:
    """Share of edge strength that sits on the third-lines.

    Horizontal gradient strength (vertical edges) counts when it falls in a
    band around x = w/3 or 2w/3; vertical gradient strength counts when it
    falls in a band around y = h/3 or 2h/3. Bands are dim/12 wide.
    """
    gx, gy, _, edges = edge_map(gray)
    wx = np.where(edges, np.abs(gx), 0.0)
    wy = np.where(edges, np.abs(gy), 0.0)
    total = wx.sum() + wy.sum()
    if total <= 0:
        return 0.0
    h, w = gray.shape
    inside = wx[:, _third_bands(w)].sum() + wy[_third_bands(h), :].sum()
    return float(min(max(inside / total, 0.0), 1.0))


def colorfulness(pixels) -> float:
    """Hasler-Suesstrunk colourfulness on opponent channels rg and yb."""
    rgb = as_rgb(pixels).astype(float)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    rg = r - g
    yb = 0.5 * (r + g) - b
    std = np.sqrt(rg.var() + yb.var())
    mean = np.sqrt(rg.mean() ** 2 + yb.mean() ** 2)
    return float(std + 0.3 * mean)


def median_blur(gray: np.ndarray, k: int = 3) -> np.ndarray:
    """k x k median filter with edge-replicate padding."""
    if k < 1 or k % 2 == 0:
        raise ValueError("kernel size must be a positive odd integer")
    g = np.asarray(gray, dtype=float)
    r = k // 2
    p = np.pad(g, r, mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(p, (k, k))
    return np.median(windows.reshape(g.shape[0], g.shape[1], k * k), axis=2)
