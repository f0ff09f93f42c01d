"""Bit-plane statistics: the measurements that expose synthesized low bits.

Each sample is split into its two least-significant bits and the rest.
Square windows are summarized by three local statistics (mean of the high
part, spread of the low part, spread of the high part); windows whose high
part varies at all become points of an intensity-vs-low-bit-spread cloud.
Binning that cloud by intensity yields an entropy and two outlier counts
per channel, which is what separates sensor noise from synthetic fill.

All window sums run on integer integral images, so the statistics are exact
up to one final float division and square root.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateCloudError,
    DomainError,
    EmptyCloudError,
    FeatureError,
)
from .frames import Frame, Plane, plane_names


@dataclass(frozen=True)
class BitSplit:
    """A plane split into high bits (depth - 2 wide) and the two low bits."""

    high: np.ndarray
    low: np.ndarray
    bit_depth: int


def split_bits(plane: Plane) -> BitSplit:
    """Separate the two least-significant bits from the rest of each sample.

    Recombining as high * 4 + low restores the plane exactly.
    """
    s = plane.samples
    return BitSplit(
        high=(s >> 2).astype(np.int64),
        low=(s & np.uint16(3)).astype(np.int64),
        bit_depth=plane.bit_depth,
    )


@dataclass(frozen=True)
class WindowMaps:
    """Per-window statistics over the interior of a plane.

    Maps cover pixels whose full (2r+1)-square window fits inside the plane,
    so each has shape (height - 2r, width - 2r).

    intensity: window mean of the high bits.
    low_spread: population std of the two low bits within the window.
    high_spread: population std of the high bits within the window.
    """

    intensity: np.ndarray
    low_spread: np.ndarray
    high_spread: np.ndarray
    radius: int


def _window_sums(a: np.ndarray, radius: int, dtype: np.dtype) -> np.ndarray:
    h, w = a.shape
    ii = np.zeros((h + 1, w + 1), dtype)
    np.cumsum(np.cumsum(a, axis=0, dtype=dtype), axis=1, out=ii[1:, 1:])
    k = 2 * radius + 1
    return ii[k:, k:] - ii[:-k, k:] - ii[k:, :-k] + ii[:-k, :-k]


def window_stats(split: BitSplit, radius: int = 2) -> WindowMaps:
    """Slide a (2r+1)-square window and compute the three local statistics.

    Raises:
        DomainError: radius outside [1, 49], or the plane is too small to
            hold a single full window.
    """
    if not 1 <= radius <= 49:
        # 49 keeps area**2 * max_sample**2 inside int64 at 16-bit depth
        raise DomainError(f"window radius must be in [1, 49], got {radius}")
    h, w = split.high.shape
    if h <= 2 * radius or w <= 2 * radius:
        raise DomainError(f"plane {w}x{h} too small for radius {radius}")
    area = (2 * radius + 1) ** 2

    high = split.high
    s_high = _window_sums(high, radius, np.int64)
    s_high2 = _window_sums(high * high, radius, np.int64)
    # low bits are <= 3, so int32 sums never overflow below ~240 Mpixel planes
    low_dtype = np.int32 if split.low.size * 9 < 2**31 else np.int64
    low = split.low.astype(low_dtype)
    s_low = _window_sums(low, radius, low_dtype)
    s_low2 = _window_sums(low * low, radius, low_dtype)

    num_high = area * s_high2 - s_high * s_high
    num_low = area * s_low2.astype(np.int64) - s_low.astype(np.int64) * s_low
    return WindowMaps(
        intensity=s_high / area,
        low_spread=np.sqrt(num_low.astype(np.float64)) / area,
        high_spread=np.sqrt(num_high.astype(np.float64)) / area,
        radius=radius,
    )


@dataclass(frozen=True)
class PointCloud:
    """Normalized (intensity, low-bit spread) pairs for detail-bearing windows.

    Both coordinates are centered on their mean and scaled by the maximum
    absolute deviation (skipped when that maximum is zero), so every
    coordinate lies in [-1, 1] with mean 0.
    """

    x: np.ndarray
    y: np.ndarray


def _center_scale(v: np.ndarray) -> np.ndarray:
    v = v - v.mean()
    m = np.abs(v).max()
    return v / m if m > 0 else v


def build_point_cloud(maps: WindowMaps) -> PointCloud:
    """Keep windows whose high bits vary (high_spread > 0), then normalize.

    Raises:
        EmptyCloudError: no window shows any high-bit variation.
    """
    mask = maps.high_spread > 0
    if not mask.any():
        raise EmptyCloudError("no window has high-bit variation")
    return PointCloud(x=_center_scale(maps.intensity[mask]), y=_center_scale(maps.low_spread[mask]))


@dataclass(frozen=True)
class BinnedCloud:
    """Per-bin aggregates of a point cloud over equal-width intensity bins.

    Bin m (1-based) holds points with floor((x - min) / extent * n) + 1 == m,
    clamped so the maximum lands in bin n. Empty bins carry NaN aggregates
    and a zero count; counts always sum to the cloud size.
    """

    bins: int
    counts: np.ndarray
    y_mean: np.ndarray
    y_std: np.ndarray
    y_range: np.ndarray


def bin_cloud(cloud: PointCloud, bins: int = 100) -> BinnedCloud:
    """Partition the cloud along x and aggregate y within each bin.

    Raises:
        DomainError: fewer than 2 points or bins < 1.
        DegenerateCloudError: all x identical (zero horizontal extent).
    """
    if bins < 1:
        raise DomainError(f"bin count must be >= 1, got {bins}")
    x, y = cloud.x, cloud.y
    if x.size < 2:
        raise DomainError(f"binning needs at least 2 points, got {x.size}")
    lo = x.min()
    extent = x.max() - lo
    if extent == 0:
        raise DegenerateCloudError("point cloud has zero horizontal extent")
    idx = np.floor((x - lo) / extent * bins).astype(np.int64)
    np.minimum(idx, bins - 1, out=idx)

    counts = np.bincount(idx, minlength=bins)
    sums = np.bincount(idx, weights=y, minlength=bins)
    sqsums = np.bincount(idx, weights=y * y, minlength=bins)
    mins = np.full(bins, np.inf)
    maxs = np.full(bins, -np.inf)
    np.minimum.at(mins, idx, y)
    np.maximum.at(maxs, idx, y)

    filled = counts > 0
    y_mean = np.full(bins, np.nan)
    y_std = np.full(bins, np.nan)
    y_range = np.full(bins, np.nan)
    y_mean[filled] = sums[filled] / counts[filled]
    y_std[filled] = np.sqrt(np.maximum(sqsums[filled] / counts[filled] - y_mean[filled] ** 2, 0.0))
    y_range[filled] = maxs[filled] - mins[filled]
    return BinnedCloud(bins=bins, counts=counts, y_mean=y_mean, y_std=y_std, y_range=y_range)


@dataclass(frozen=True)
class ChannelFeatures:
    """The three cloud summaries for one channel."""

    entropy: float
    mean_outliers: int
    std_outliers: int

    def as_array(self) -> np.ndarray:
        return np.array([self.entropy, self.mean_outliers, self.std_outliers], dtype=np.float64)


def _three_sigma_count(values: np.ndarray) -> int:
    mu = values.mean()
    sd = values.std()
    if sd == 0:
        return 0
    return int(np.count_nonzero(np.abs(values - mu) > 3 * sd))


def channel_features(binned: BinnedCloud) -> ChannelFeatures:
    """Summarize a binned cloud: range entropy plus two outlier counts.

    Entropy is -sum(delta * ln(delta)) over per-bin y ranges, with zero
    ranges contributing zero. Outlier counts apply a three-sigma rule to
    the nonempty bins' y means and y stds; a zero sigma counts nobody.
    """
    filled = binned.counts > 0
    deltas = binned.y_range[filled]
    positive = deltas > 0
    entropy = float(-(deltas[positive] * np.log(deltas[positive])).sum()) if positive.any() else 0.0
    return ChannelFeatures(
        entropy=entropy,
        mean_outliers=_three_sigma_count(binned.y_mean[filled]),
        std_outliers=_three_sigma_count(binned.y_std[filled]),
    )


def plane_features(plane: Plane, radius: int = 2, bins: int = 100) -> ChannelFeatures:
    """Full chain for one plane: split, window, cloud, bin, summarize."""
    maps = window_stats(split_bits(plane), radius)
    return channel_features(bin_cloud(build_point_cloud(maps), bins))


def frame_feature_vector(frame: Frame, radius: int = 2, bins: int = 100) -> np.ndarray:
    """Concatenate per-channel cloud features in plane order.

    Returns a float64 vector of length 3 * plane count:
    [entropy, mean outliers, std outliers] per channel.

    Raises:
        FeatureError: a channel's cloud was empty or degenerate; the message
            names the channel.
    """
    names = plane_names(len(frame.planes))
    parts = []
    for name, plane in zip(names, frame.planes):
        try:
            parts.append(plane_features(plane, radius, bins).as_array())
        except (EmptyCloudError, DegenerateCloudError, DomainError) as exc:
            raise FeatureError(f"channel {name}: {exc}") from exc
    return np.concatenate(parts)


def frame_feature_names(plane_count: int) -> list[str]:
    """Feature labels matching frame_feature_vector's layout."""
    names = []
    for ch in plane_names(plane_count):
        names += [f"{ch}_entropy", f"{ch}_mean_outliers", f"{ch}_std_outliers"]
    return names
