"""Sequential inner loops compiled with numba."""
import numpy as np
from numba import njit


@njit(cache=True)
def dead_time_mask(channels, timestamps, dead_time):
    """Keep a tag only if it is >= dead_time after the last kept tag on its channel.

    ``timestamps`` must be sorted. ``dead_time`` is per channel id (length 256).
    """
    n = timestamps.shape[0]
    keep = np.zeros(n, dtype=np.bool_)
    last = np.empty(256, dtype=np.int64)
    seen = np.zeros(256, dtype=np.bool_)
    for k in range(n):
        ch = channels[k]
        t = timestamps[k]
        if not seen[ch] or t - last[ch] >= dead_time[ch]:
            keep[k] = True
            last[ch] = t
            seen[ch] = True
    return keep


@njit(cache=True)
def cross_histogram(ta, tb, bin_width, half_bins):
    """Histogram of t_b - t_a with bins centred on k * bin_width, |k| <= half_bins.

    Two-pointer sweep over sorted inputs: O(len(ta) + len(tb) + matches).
    A delay d falls in bin floor((2d + w) / 2w); the covered delay range is
    -(2K+1) w <= 2d < (2K+1) w.
    """
    nbins = 2 * half_bins + 1
    counts = np.zeros(nbins, dtype=np.int64)
    edge = (2 * half_bins + 1) * bin_width
    nb = tb.shape[0]
    start = 0
    for i in range(ta.shape[0]):
        a = ta[i]
        while start < nb and 2 * (tb[start] - a) < -edge:
            start += 1
        j = start
        while j < nb:
            d2 = 2 * (tb[j] - a)
            if d2 >= edge:
                break
            counts[(d2 + bin_width) // (2 * bin_width) + half_bins] += 1
            j += 1
    return counts
