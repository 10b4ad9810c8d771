"""Loop-based reference implementation of the short-time intelligibility measure.

Follows the classic published routine's conventions exactly (symmetric Hann
window without endpoints, nearest-bin band edges, octave-style polyphase
resampler).  Deliberately independent of the pararank.stoi code path: this
module is only used to produce the frozen expected scores committed in
tests/stoi_reference.csv, never imported by the package.
"""

import numpy as np
from scipy.signal import resample_poly

FS = 10000
N_FRAME = 256
HOP = 128
NFFT = 512
NUM_BANDS = 15
MIN_FREQ = 150.0
N_SEG = 30
BETA = -15.0
DYN_RANGE = 40.0
EPS = np.finfo(np.float64).eps


def _hanning_matlab(n):
    return np.hanning(n + 2)[1:-1]


def _resample_window(p, q):
    # Kaiser-windowed sinc sized for ~60 dB rejection, octave convention
    stopband = 1.0 / (2.0 * max(p, q))
    roll_off = stopband / 10.0
    rejection_db = 60.0
    half = int(np.ceil(rejection_db / (22.9 * roll_off)))
    t = np.arange(-half, half + 1)
    ideal = 2.0 * p * stopband * np.sinc(2.0 * stopband * t)
    beta = 0.1102 * (rejection_db - 8.7)
    return np.kaiser(2 * half + 1, beta) * ideal


def resample_reference(x, fs_in, fs_out):
    if fs_in == fs_out:
        return np.asarray(x, dtype=np.float64)
    g = np.gcd(int(fs_out), int(fs_in))
    p, q = fs_out // g, fs_in // g
    h = _resample_window(p, q)
    return resample_poly(x, p, q, window=h / np.sum(h) * p)


def thirdoct(fs, nfft, num_bands, min_freq):
    f = np.linspace(0, fs, nfft + 1)[: nfft // 2 + 1]
    k = np.arange(num_bands, dtype=float)
    cf = min_freq * 2.0 ** (k / 3.0)
    obm = np.zeros((num_bands, len(f)))
    for i in range(num_bands):
        f_low = min_freq * 2.0 ** ((2 * k[i] - 1) / 6.0)
        f_high = min_freq * 2.0 ** ((2 * k[i] + 1) / 6.0)
        fl_bin = int(np.argmin(np.square(f - f_low)))
        fh_bin = int(np.argmin(np.square(f - f_high)))
        obm[i, fl_bin:fh_bin] = 1.0
    return obm


def remove_silent_frames(x, y, dyn_range, framelen, hop):
    w = _hanning_matlab(framelen)
    starts = range(0, len(x) - framelen + 1, hop)
    x_frames = np.array([w * x[i : i + framelen] for i in starts])
    y_frames = np.array([w * y[i : i + framelen] for i in starts])
    energies = 20.0 * np.log10(np.linalg.norm(x_frames, axis=1) + EPS)
    mask = (np.max(energies) - dyn_range - energies) < 0
    x_frames = x_frames[mask]
    y_frames = y_frames[mask]
    n_sil = (len(x_frames) - 1) * hop + framelen
    x_sil = np.zeros(n_sil)
    y_sil = np.zeros(n_sil)
    for i in range(x_frames.shape[0]):
        x_sil[i * hop : i * hop + framelen] += x_frames[i]
        y_sil[i * hop : i * hop + framelen] += y_frames[i]
    return x_sil, y_sil


def stft(x, win_size, fft_size, hop):
    w = _hanning_matlab(win_size)
    frames = [
        np.fft.rfft(w * x[i : i + win_size], n=fft_size)
        for i in range(0, len(x) - win_size, hop)
    ]
    return np.array(frames)


def stoi_reference(x, y, fs_sig):
    """Reference score; inputs are 1-D arrays at a common sample rate."""
    if len(x) != len(y):
        raise ValueError("inputs must have the same length")
    x = resample_reference(x, fs_sig, FS)
    y = resample_reference(y, fs_sig, FS)
    x, y = remove_silent_frames(x, y, DYN_RANGE, N_FRAME, HOP)
    obm = thirdoct(FS, NFFT, NUM_BANDS, MIN_FREQ)
    x_spec = stft(x, N_FRAME, NFFT, HOP).T
    y_spec = stft(y, N_FRAME, NFFT, HOP).T
    x_tob = np.sqrt(obm @ np.square(np.abs(x_spec)))
    y_tob = np.sqrt(obm @ np.square(np.abs(y_spec)))
    n_frames = x_tob.shape[1]
    if n_frames < N_SEG:
        raise ValueError("signal too short after silence removal")
    c = 10.0 ** (-BETA / 20.0)
    cells = []
    for m in range(N_SEG, n_frames + 1):
        x_seg = x_tob[:, m - N_SEG : m]
        y_seg = y_tob[:, m - N_SEG : m]
        for j in range(NUM_BANDS):
            xs = x_seg[j]
            ys = y_seg[j] * (np.linalg.norm(x_seg[j]) / (np.linalg.norm(y_seg[j]) + EPS))
            ys = np.minimum(ys, xs * (1.0 + c))
            xs = xs - np.mean(xs)
            ys = ys - np.mean(ys)
            denom = (np.linalg.norm(xs) + EPS) * (np.linalg.norm(ys) + EPS)
            cells.append(float(np.dot(xs, ys) / denom))
    return float(np.mean(cells))
