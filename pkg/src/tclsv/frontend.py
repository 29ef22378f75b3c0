"""Cepstral frontend: framing, mel cepstra, RASTA filtering, deltas, energy VAD, CMVN.

The full chain turns a mono PCM signal into a 57-dimensional feature matrix:
pre-emphasized Hamming frames -> magnitude spectrum -> mel filterbank -> log
(optionally RASTA-filtered along time) -> DCT-II keeping C1..C19 -> delta and
delta-delta appended -> energy VAD -> per-utterance mean/variance normalization.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy.fft
import scipy.signal

from .errors import AllFramesRemoved, DataError, SignalTooShort

# Floor for log energies and log filterbank outputs.
LOG_FLOOR = 1e-10

# Variance floor below which a CMVN column is centered only.
CMVN_VARIANCE_FLOOR = 1e-8

# Band-pass H(z) = 0.1 * (2 + z^-1 - z^-3 - 2 z^-4) / (1 - 0.98 z^-1),
# applied along time to each log-filterbank trajectory (zero initial state).
RASTA_NUMERATOR = np.array([0.2, 0.1, 0.0, -0.1, -0.2])
RASTA_DENOMINATOR = np.array([1.0, -0.98])


@dataclass(frozen=True)
class AudioSignal:
    """Mono audio with amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        if len(self.samples) == 0:
            raise DataError("audio signal is empty")
        if self.sample_rate_hz <= 0:
            raise DataError(f"sample rate must be positive, got {self.sample_rate_hz}")


@dataclass(frozen=True)
class FrontendConfig:
    frame_shift_ms: float = 10.0
    frame_length_ms: float = 20.0
    window: str = "hamming"
    num_static_ceps: int = 19
    num_mel_filters: int = 24
    preemphasis_coeff: float = 0.97
    rasta_enabled: bool = True
    vad_threshold_db: float = 30.0
    delta_window: int = 2

    def __post_init__(self):
        if self.frame_length_ms < self.frame_shift_ms:
            raise DataError("frame_length_ms must be >= frame_shift_ms")
        if self.num_static_ceps >= self.num_mel_filters:
            raise DataError("num_static_ceps must be < num_mel_filters")
        if not 0.0 <= self.preemphasis_coeff < 1.0:
            raise DataError("preemphasis_coeff must be in [0, 1)")
        if self.window != "hamming":
            raise DataError(f"unsupported window {self.window!r}")
        if self.delta_window < 1:
            raise DataError("delta_window must be positive")


@dataclass(frozen=True)
class FeatureMatrix:
    """Per-utterance T x D matrix of frame vectors.

    ``frame_energies`` holds the per-frame log energy (natural log of the
    frame's sum of squares) and is only carried up to the VAD stage.
    """

    frames: np.ndarray
    utterance_id: str = ""
    frame_energies: np.ndarray | None = None

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]


@dataclass(frozen=True)
class WindowedFrames:
    """Output of :func:`frame_signal`: windowed frames plus pre-window energies."""

    frames: np.ndarray
    log_energies: np.ndarray
    sample_rate_hz: int


def read_wav(path: str | Path) -> AudioSignal:
    """Read a mono 16-bit PCM WAV file.

    Multi-channel, non-PCM or non-16-bit files raise :class:`DataError`.
    """
    try:
        with wave.open(str(path), "rb") as wf:
            if wf.getcomptype() != "NONE":
                raise DataError(f"{path}: compressed WAV is not supported")
            if wf.getnchannels() != 1:
                raise DataError(f"{path}: expected mono, got {wf.getnchannels()} channels")
            if wf.getsampwidth() != 2:
                raise DataError(f"{path}: expected 16-bit PCM, got {8 * wf.getsampwidth()}-bit")
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except wave.Error as exc:
        raise DataError(f"{path}: not a valid WAV file ({exc})") from exc
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return AudioSignal(samples=samples, sample_rate_hz=rate)


def write_wav(path: str | Path, signal: AudioSignal) -> None:
    """Write a mono 16-bit PCM WAV file."""
    pcm = np.clip(np.round(signal.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(signal.sample_rate_hz)
        wf.writeframes(pcm.tobytes())


def frame_signal(signal: AudioSignal, config: FrontendConfig) -> WindowedFrames:
    """Split a signal into pre-emphasized, Hamming-windowed frames.

    Frame count is ``1 + floor((len - frame_len) / frame_shift)``.  The
    per-frame log energy is computed after pre-emphasis but before windowing.
    """
    rate = signal.sample_rate_hz
    frame_len = int(round(config.frame_length_ms * rate / 1000.0))
    frame_shift = int(round(config.frame_shift_ms * rate / 1000.0))
    x = np.asarray(signal.samples, dtype=np.float64)
    if len(x) < frame_len:
        raise SignalTooShort(
            f"signal has {len(x)} samples, need at least {frame_len} for one frame"
        )

    pre = np.empty_like(x)
    pre[0] = x[0]
    pre[1:] = x[1:] - config.preemphasis_coeff * x[:-1]

    frames = np.lib.stride_tricks.sliding_window_view(pre, frame_len)[::frame_shift]
    frames = np.ascontiguousarray(frames)
    energies = np.log(np.maximum(np.sum(frames**2, axis=1), LOG_FLOOR))
    window = np.hamming(frame_len)
    return WindowedFrames(frames * window, energies, rate)


def _mel(hz: np.ndarray | float) -> np.ndarray | float:
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def _mel_inv(mel: np.ndarray | float) -> np.ndarray | float:
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(num_filters: int, n_fft: int, sample_rate_hz: int) -> np.ndarray:
    """Triangular mel filterbank spanning 0 Hz to Nyquist; num_filters x (n_fft//2+1)."""
    bin_freqs = np.arange(n_fft // 2 + 1) * (sample_rate_hz / n_fft)
    edges_hz = _mel_inv(np.linspace(0.0, _mel(sample_rate_hz / 2.0), num_filters + 2))
    weights = np.zeros((num_filters, len(bin_freqs)))
    for m in range(num_filters):
        lo, mid, hi = edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]
        rising = (bin_freqs - lo) / (mid - lo)
        falling = (hi - bin_freqs) / (hi - mid)
        weights[m] = np.maximum(0.0, np.minimum(rising, falling))
    return weights


def compute_mfcc(
    frames: WindowedFrames, config: FrontendConfig, utterance_id: str = ""
) -> FeatureMatrix:
    """Static mel cepstra C1..C_num_static_ceps for each windowed frame.

    Per frame: magnitude spectrum -> mel filterbank -> log (RASTA-filtered
    along time when enabled) -> DCT-II (orthonormal), dropping C0.
    """
    frame_len = frames.frames.shape[1]
    n_fft = 1 << (frame_len - 1).bit_length()
    spectrum = np.abs(np.fft.rfft(frames.frames, n=n_fft, axis=1))
    fbank = mel_filterbank(config.num_mel_filters, n_fft, frames.sample_rate_hz)
    log_mel = np.log(np.maximum(spectrum @ fbank.T, LOG_FLOOR))
    if config.rasta_enabled:
        log_mel = apply_rasta(log_mel)
    ceps = scipy.fft.dct(log_mel, type=2, norm="ortho", axis=1)
    static = ceps[:, 1 : config.num_static_ceps + 1]
    return FeatureMatrix(
        frames=np.ascontiguousarray(static),
        utterance_id=utterance_id,
        frame_energies=frames.log_energies,
    )


def apply_rasta(trajectories: np.ndarray) -> np.ndarray:
    """Filter each coefficient trajectory (column) with the RASTA band-pass IIR.

    Zero initial filter state; DC is rejected asymptotically.  The filter is
    linear, so applying it before or after the DCT gives the same cepstra.
    """
    x = np.atleast_2d(np.asarray(trajectories, dtype=np.float64))
    return scipy.signal.lfilter(RASTA_NUMERATOR, RASTA_DENOMINATOR, x, axis=0)


def append_deltas(static, delta_window: int = 2) -> FeatureMatrix:
    """Append delta and delta-delta regression coefficients.

    Standard regression formula over +/- delta_window frames with edge
    replication; a T x D input becomes a T x 3D FeatureMatrix.
    """
    if isinstance(static, FeatureMatrix):
        base, utt_id, energies = static.frames, static.utterance_id, static.frame_energies
    else:
        base, utt_id, energies = np.asarray(static, dtype=np.float64), "", None
    deltas = _delta(base, delta_window)
    ddeltas = _delta(deltas, delta_window)
    return FeatureMatrix(
        frames=np.hstack([base, deltas, ddeltas]),
        utterance_id=utt_id,
        frame_energies=energies,
    )


def _delta(feats: np.ndarray, window: int) -> np.ndarray:
    T = feats.shape[0]
    denom = 2.0 * sum(n * n for n in range(1, window + 1))
    out = np.zeros_like(feats)
    idx = np.arange(T)
    for n in range(1, window + 1):
        fwd = feats[np.minimum(idx + n, T - 1)]
        bwd = feats[np.maximum(idx - n, 0)]
        out += n * (fwd - bwd)
    return out / denom


def apply_vad(features: FeatureMatrix, config: FrontendConfig) -> FeatureMatrix:
    """Keep frames whose log energy is within vad_threshold_db of the maximum.

    Energies are natural-log, so the dB threshold is converted with
    ln(10)/10.  Raises :class:`AllFramesRemoved` when nothing passes.
    """
    if features.frame_energies is None:
        raise DataError("apply_vad requires frame_energies (pre-VAD features)")
    energies = features.frame_energies
    threshold_nats = config.vad_threshold_db * np.log(10.0) / 10.0
    keep = energies > energies.max() - threshold_nats
    if not np.any(keep):
        raise AllFramesRemoved(
            f"VAD removed all {features.num_frames} frames of {features.utterance_id!r}"
        )
    return FeatureMatrix(
        frames=features.frames[keep],
        utterance_id=features.utterance_id,
        frame_energies=None,
    )


def cmvn(features: FeatureMatrix) -> FeatureMatrix:
    """Normalize each column to zero mean and unit variance (population convention).

    Columns with variance below the floor are centered only.
    """
    x = features.frames
    mean = x.mean(axis=0)
    var = x.var(axis=0)
    scale = np.where(var < CMVN_VARIANCE_FLOOR, 1.0, np.sqrt(np.maximum(var, CMVN_VARIANCE_FLOOR)))
    return replace(features, frames=(x - mean) / scale)


def extract_features(
    signal: AudioSignal, config: FrontendConfig, utterance_id: str = ""
) -> FeatureMatrix:
    """Full frontend chain: framing -> MFCC -> deltas -> VAD -> CMVN."""
    windowed = frame_signal(signal, config)
    static = compute_mfcc(windowed, config, utterance_id)
    full = append_deltas(static, config.delta_window)
    voiced = apply_vad(full, config)
    return cmvn(voiced)
