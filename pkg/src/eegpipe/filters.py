"""IIR filter design and zero-phase application.

Butterworth designs are built from the analog prototype (unit-gain poles on
the left half circle), transformed to the requested kind, and discretized by
the bilinear transform with frequency pre-warping, so the realized magnitude
matches 1/sqrt(1 + (w/w_c)^(2n)) at the cutoffs. Filters are applied as a
cascade of second-order sections; expanding narrow low-frequency designs to a
single polynomial is numerically unsafe, so the b/a vectors are carried as
derived metadata only. Application is forward-backward (zero phase), which
squares the magnitude response.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

BAND_NAMES = ("delta", "theta", "alpha", "beta", "gamma")


@dataclass(frozen=True)
class BandSpec:
    """A named frequency band, edges in Hz."""
    name: str
    lo: float
    hi: float

    def __post_init__(self):
        if not 0 <= self.lo < self.hi:
            raise ValueError(f"band {self.name}: need 0 <= lo < hi, got ({self.lo}, {self.hi})")


# Canonical five-band table used for decomposition.
DEFAULT_BANDS: tuple[BandSpec, ...] = (
    BandSpec("delta", 0.1, 4.0),
    BandSpec("theta", 4.0, 7.5),
    BandSpec("alpha", 7.5, 12.0),
    BandSpec("beta", 12.0, 30.0),
    BandSpec("gamma", 30.0, 100.0),
)


@dataclass
class FilterCoefficients:
    """A realized digital filter.

    `sos` (second-order sections, rows [b0 b1 b2 a0 a1 a2] with a0 == 1) is
    the form actually applied; `b`/`a` are the expanded transfer-function
    vectors, exact for wide bands but ill-conditioned for very narrow
    low-frequency ones.
    """
    kind: str                 # lowpass | highpass | bandpass | bandstop
    order: int
    cutoffs: tuple[float, ...]
    fs: float
    sos: np.ndarray
    b: np.ndarray
    a: np.ndarray
    # Suggested per-edge transient length for callers that trim; not enforced.
    edge_transient: int = field(default=0)

    def pole_magnitudes(self) -> np.ndarray:
        mags = []
        for sec in self.sos:
            mags.extend(np.abs(np.roots(sec[3:])))
        return np.asarray(mags)


def _analog_lowpass_prototype(order: int) -> np.ndarray:
    m = np.arange(-order + 1, order, 2)
    return -np.exp(1j * np.pi * m / (2 * order))


def _bilinear_zpk(z: np.ndarray, p: np.ndarray, k: float, fs2: float):
    degree = len(p) - len(z)
    z_d = (fs2 + z) / (fs2 - z)
    p_d = (fs2 + p) / (fs2 - p)
    z_d = np.append(z_d, -np.ones(degree))
    k_d = k * np.real(np.prod(fs2 - z) / np.prod(fs2 - p))
    return z_d, p_d, k_d


def _conjugate_groups(roots: np.ndarray) -> list[np.ndarray]:
    """Split roots into conjugate pairs plus lone real roots."""
    pairs: list[np.ndarray] = []
    upper = sorted(roots[roots.imag > 1e-12], key=lambda r: (-abs(r), r.real))
    reals = sorted(roots[np.abs(roots.imag) <= 1e-12].real, key=lambda r: -abs(r))
    for r in upper:
        pairs.append(np.array([r, np.conj(r)]))
    i = 0
    while i + 1 < len(reals):
        pairs.append(np.array([reals[i], reals[i + 1]], dtype=complex))
        i += 2
    if i < len(reals):
        pairs.append(np.array([reals[i]], dtype=complex))
    return pairs


def _zpk_to_sos(z: np.ndarray, p: np.ndarray, k: float) -> np.ndarray:
    """Pair pole/zero conjugate groups into biquads; gain folded into the first."""
    pole_groups = _conjugate_groups(p)
    zero_groups = _conjugate_groups(z)
    # Pad with empty zero groups so every pole section has a numerator.
    while len(zero_groups) < len(pole_groups):
        zero_groups.append(np.array([], dtype=complex))
    if len(zero_groups) > len(pole_groups):
        raise ValueError("more zeros than poles after transform")
    # Most-damped sections first keeps intermediate signals bounded.
    order_idx = np.argsort([np.max(np.abs(g)) for g in pole_groups])
    sections = []
    for rank, gi in enumerate(order_idx):
        pg = pole_groups[gi]
        zg = zero_groups[gi] if gi < len(zero_groups) else np.array([], dtype=complex)
        bsec = np.poly(zg).real if len(zg) else np.array([1.0])
        asec = np.poly(pg).real
        bsec = np.pad(bsec, (0, 3 - len(bsec)))
        asec = np.pad(asec, (0, 3 - len(asec)))
        if rank == 0:
            bsec = bsec * k
        sections.append(np.concatenate([bsec, asec]))
    return np.asarray(sections)


def design_butterworth(kind: str, cutoffs, order: int, fs: float) -> FilterCoefficients:
    """Design a digital Butterworth filter.

    `cutoffs` is a single frequency in Hz for lowpass/highpass or a (lo, hi)
    pair for bandpass/bandstop. Raises if any cutoff is at or beyond Nyquist,
    if a bandpass/bandstop pair is not increasing, or if the realized filter
    is unstable.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if kind not in ("lowpass", "highpass", "bandpass", "bandstop"):
        raise ValueError(f"unknown filter kind {kind!r}")
    cut = np.atleast_1d(np.asarray(cutoffs, dtype=np.float64))
    nyq = fs / 2.0
    if np.any(cut <= 0) or np.any(cut >= nyq):
        raise ValueError(f"cutoffs must lie strictly inside (0, {nyq}) Hz, got {cut.tolist()}")
    if kind in ("lowpass", "highpass"):
        if cut.size != 1:
            raise ValueError(f"{kind} takes one cutoff, got {cut.size}")
    else:
        if cut.size != 2 or not cut[0] < cut[1]:
            raise ValueError(f"{kind} takes an increasing (lo, hi) pair, got {cut.tolist()}")

    p = _analog_lowpass_prototype(order)
    z = np.array([], dtype=complex)
    k = 1.0

    # Pre-warp so the bilinear transform lands the cutoffs exactly.
    fs_int = 2.0
    warped = 2.0 * fs_int * np.tan(np.pi * (cut / nyq) / fs_int)

    if kind == "lowpass":
        w0 = float(warped[0])
        z_t, p_t, k_t = z, p * w0, k * w0 ** order
    elif kind == "highpass":
        w0 = float(warped[0])
        z_t = np.zeros(order, dtype=complex)
        p_t = w0 / p
        k_t = k * np.real(1.0 / np.prod(-p))
    elif kind == "bandpass":
        bw = float(warped[1] - warped[0])
        w0 = float(np.sqrt(warped[0] * warped[1]))
        p_lp = p * bw / 2.0
        root = np.sqrt(p_lp ** 2 - w0 ** 2)
        p_t = np.concatenate((p_lp + root, p_lp - root))
        z_t = np.zeros(order, dtype=complex)
        k_t = k * bw ** order
    else:  # bandstop
        bw = float(warped[1] - warped[0])
        w0 = float(np.sqrt(warped[0] * warped[1]))
        p_inv = (bw / 2.0) / p
        root = np.sqrt(p_inv ** 2 - w0 ** 2)
        p_t = np.concatenate((p_inv + root, p_inv - root))
        z_t = np.concatenate((1j * w0 * np.ones(order), -1j * w0 * np.ones(order)))
        k_t = k * np.real(1.0 / np.prod(-p))

    z_d, p_d, k_d = _bilinear_zpk(z_t, p_t, k_t, 2.0 * fs_int)
    sos = _zpk_to_sos(z_d, p_d, k_d)
    b = (k_d * np.atleast_1d(np.poly(z_d)).real)
    a = np.atleast_1d(np.poly(p_d)).real
    b = b / a[0]
    a = a / a[0]

    coeffs = FilterCoefficients(kind=kind, order=order,
                                cutoffs=tuple(float(c) for c in cut),
                                fs=fs, sos=sos, b=b, a=a)
    mags = coeffs.pole_magnitudes()
    if mags.size and mags.max() >= 1.0:
        raise ValueError(
            f"unstable design: pole magnitude {mags.max():.6f} >= 1 "
            f"({kind} {coeffs.cutoffs} order {order} at fs={fs})")
    lo_edge = coeffs.cutoffs[0]
    coeffs.edge_transient = int(np.ceil(3 * order * fs / lo_edge))
    return coeffs


def freq_response(coeffs: FilterCoefficients, freqs_hz) -> np.ndarray:
    """Complex response H(e^jw) of the single-pass filter at the given Hz."""
    freqs_hz = np.atleast_1d(np.asarray(freqs_hz, dtype=np.float64))
    w = 2.0 * np.pi * freqs_hz / coeffs.fs
    zinv = np.exp(-1j * np.outer(w, np.arange(3)))
    resp = np.ones(len(w), dtype=complex)
    for sec in coeffs.sos:
        resp *= (zinv @ sec[:3]) / (zinv @ sec[3:])
    return resp


def _lfilter_zi(b: np.ndarray, a: np.ndarray) -> np.ndarray:
    # Steady-state DF2T state for a unit-step input; scaled by x[0] at use.
    n = len(a)
    companion_t = np.hstack([-a[1:, None],
                             np.vstack([np.eye(n - 2), np.zeros(n - 2)])
                             if n > 2 else np.zeros((n - 1, 0))])
    rhs = b[1:] - a[1:] * b[0]
    return np.linalg.solve(np.eye(n - 1) - companion_t, rhs)


def _sos_filter(sos: np.ndarray, x: np.ndarray) -> np.ndarray:
    y = x
    for sec in sos:
        bsec, asec = sec[:3], sec[3:]
        zi = _lfilter_zi(bsec, asec) * y[0]
        y = _kernels.lfilter(bsec, asec, np.ascontiguousarray(y), zi)
    return y


def apply_zero_phase(coeffs: FilterCoefficients, x, padlen: int | None = None) -> np.ndarray:
    """Forward-backward filtering; output length equals input length.

    Edge transients are reduced with odd reflection padding of `padlen`
    samples per side (default 3 * (2 * order + 1)) and steady-state initial
    conditions per section. The effective magnitude response is |H|^2 with
    zero phase.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a 1-D series")
    if padlen is None:
        padlen = 3 * (2 * coeffs.order + 1)
    min_len = max(padlen, 3 * coeffs.order)
    if len(x) <= min_len:
        raise ValueError(f"series of {len(x)} samples is too short for "
                         f"order-{coeffs.order} zero-phase filtering (need > {min_len})")
    if padlen > 0:
        head = 2.0 * x[0] - x[padlen:0:-1]
        tail = 2.0 * x[-1] - x[-2:-padlen - 2:-1]
        ext = np.concatenate((head, x, tail))
    else:
        ext = x
    y = _sos_filter(coeffs.sos, ext)
    y = _sos_filter(coeffs.sos, y[::-1])[::-1]
    if padlen > 0:
        y = y[padlen:-padlen]
    return np.ascontiguousarray(y)


def remove_drift(x, fs: float, cutoff_hz: float = 1.0, order: int = 5) -> np.ndarray:
    """Remove slow baseline drift with a zero-phase high-pass filter."""
    if fs <= 2.0:
        raise ValueError(f"sampling rate {fs} Hz is too low for drift removal")
    coeffs = design_butterworth("highpass", cutoff_hz, order, fs)
    return apply_zero_phase(coeffs, x)


def remove_line_noise(x, fs: float, line_hz: float = 60.0, half_width_hz: float = 1.0,
                      order: int = 5) -> np.ndarray:
    """Suppress mains interference with a zero-phase band-stop around line_hz."""
    if line_hz >= fs / 2:
        raise ValueError(f"line frequency {line_hz} Hz is at or above Nyquist ({fs / 2} Hz)")
    coeffs = design_butterworth("bandstop", (line_hz - half_width_hz, line_hz + half_width_hz),
                                order, fs)
    return apply_zero_phase(coeffs, x)


def _effective_band(band: BandSpec, fs: float) -> BandSpec:
    nyq = fs / 2.0
    if band.hi >= nyq:
        clipped = 0.99 * nyq
        warnings.warn(f"band {band.name} upper edge {band.hi} Hz >= Nyquist "
                      f"({nyq} Hz); clipping to {clipped} Hz")
        return BandSpec(band.name, band.lo, clipped)
    return band


def band_filter(band: BandSpec, fs: float, order: int = 5) -> FilterCoefficients:
    """Band-pass design for one band, clipping edges that reach Nyquist."""
    eff = _effective_band(band, fs)
    return design_butterworth("bandpass", (eff.lo, eff.hi), order, fs)


def band_decompose(x, fs: float, bands: tuple[BandSpec, ...] = DEFAULT_BANDS,
                   order: int = 5) -> list[np.ndarray]:
    """Split a series into one band-passed series per entry of `bands`.

    Output list is parallel to `bands`; every series has the input length.
    Bands whose upper edge reaches Nyquist are clipped with a warning.
    """
    if not bands:
        raise ValueError("empty band list")
    return [apply_zero_phase(band_filter(band, fs, order), x) for band in bands]
