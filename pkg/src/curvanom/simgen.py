"""Synthetic benchmark of bivariate piecewise-linear signals with injected anomalies.

Every segment is generated from its own random substream, keyed by
``(seed, segment index)``, so the content of one segment never depends on
how many others are generated or in which order.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .series import BivariateSegment, Dataset, Label

NORMAL_SHAPES = ("up_up", "up_down", "down_up", "down_down")
ANOMALY_TYPES = ("Sinusoidal", "Hat", "Linear")
ANOMALY_CHANNELS = ("X", "Y", "Both")

_CHANNEL_LABEL = {"X": Label.ANOMALOUS_X, "Y": Label.ANOMALOUS_Y, "Both": Label.ANOMALOUS_BOTH}

# substream tags
_PLAN_STREAM = 0
_SEGMENT_STREAM = 1


@dataclass(frozen=True)
class GeneratorConfig:
    n_signals: int = 2000
    n_anomalies: int = 50
    length_range: tuple[int, int] = (500, 3000)
    breakpoint_range: tuple[float, float] = (1 / 3, 2 / 3)
    ascending_slope_range: tuple[float, float] = (0.5, 4.0)
    descending_slope_range: tuple[float, float] = (-4.0, -0.5)
    noise_variance_range: tuple[float, float] = (10.0, 100.0)
    smoothing_degree: int | None = 5  # None disables smoothing
    shapes: tuple[str, ...] = NORMAL_SHAPES
    anomaly_types: tuple[str, ...] = ANOMALY_TYPES
    anomaly_channels: tuple[str, ...] = ANOMALY_CHANNELS
    sine_periods_range: tuple[float, float] = (3.0, 6.0)
    amplitude_factor_range: tuple[float, float] = (0.5, 1.5)
    hat_apex_range: tuple[float, float] = (0.4, 0.6)
    hat_width_range: tuple[float, float] = (0.2, 0.4)  # triangle base, fraction of the length
    linear_slope_range: tuple[float, float] = (4.0, 8.0)  # magnitude; the sign is random
    y_slope_signs: str = "random"  # "matched" to X's pieces, or "random"
    seed: int = 0
    id_prefix: str = "S"

    def __post_init__(self):
        for name in ("length_range", "breakpoint_range", "ascending_slope_range",
                     "descending_slope_range", "noise_variance_range", "sine_periods_range",
                     "amplitude_factor_range", "hat_apex_range", "hat_width_range",
                     "linear_slope_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name} must be ordered, got {(lo, hi)}")
            object.__setattr__(self, name, (lo, hi))
        if self.n_signals < 1:
            raise ValueError("n_signals must be positive")
        if not 0 <= self.n_anomalies <= self.n_signals:
            raise ValueError("n_anomalies must lie in [0, n_signals]")
        if self.length_range[0] < 2:
            raise ValueError("segments need at least 2 samples")
        if not (0 < self.breakpoint_range[0] and self.breakpoint_range[1] < 1):
            raise ValueError("breakpoint fractions must lie in (0, 1)")
        if self.ascending_slope_range[0] <= 0 or self.descending_slope_range[1] >= 0:
            raise ValueError("ascending slopes must be positive and descending ones negative")
        if self.noise_variance_range[0] < 0:
            raise ValueError("noise variance cannot be negative")
        if self.smoothing_degree is not None and self.smoothing_degree < 0:
            raise ValueError("smoothing_degree must be non-negative")
        for name, allowed in (("shapes", NORMAL_SHAPES), ("anomaly_types", ANOMALY_TYPES),
                              ("anomaly_channels", ANOMALY_CHANNELS)):
            vals = tuple(getattr(self, name))
            if not vals or any(v not in allowed for v in vals):
                raise ValueError(f"{name} must be a non-empty subset of {allowed}")
            object.__setattr__(self, name, vals)
        if self.y_slope_signs not in ("matched", "random"):
            raise ValueError("y_slope_signs must be 'matched' or 'random'")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        d = dict(d)
        for k, v in d.items():
            if isinstance(v, list):
                d[k] = tuple(v)
        return cls(**d)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def piecewise_linear(length: int, breakpoint: int, slope1: float, slope2: float,
                     start: float = 0.0) -> np.ndarray:
    """Two linear pieces joined at 1-based sample ``breakpoint``."""
    t = np.arange(1, length + 1, dtype=np.float64)
    before = start + slope1 * (t - 1)
    kink = start + slope1 * (breakpoint - 1)
    after = kink + slope2 * (t - breakpoint)
    return np.where(t <= breakpoint, before, after)


def smooth(values: np.ndarray, degree: int | None) -> np.ndarray:
    """Least-squares polynomial fit of ``values`` against ``t = 1..l``."""
    if degree is None:
        return values
    t = np.arange(1, values.size + 1, dtype=np.float64)
    deg = min(degree, values.size - 1)
    return np.polynomial.Polynomial.fit(t, values, deg)(t)


def _uniform(rng, bounds):
    lo, hi = bounds
    return lo if lo == hi else float(rng.uniform(lo, hi))


def _draw_breakpoint(rng, length, cfg):
    lo = max(1, int(np.ceil(cfg.breakpoint_range[0] * length)))
    hi = max(lo, int(np.floor(cfg.breakpoint_range[1] * length)))
    return int(rng.integers(lo, hi + 1))


def _shape_slopes(rng, shape, cfg):
    up, down = cfg.ascending_slope_range, cfg.descending_slope_range
    if shape == "up_up":
        s = sorted([_uniform(rng, up), _uniform(rng, up)])
        return s[0], s[1]
    if shape == "up_down":
        return _uniform(rng, up), _uniform(rng, down)
    if shape == "down_up":
        return _uniform(rng, down), _uniform(rng, up)
    s = sorted([_uniform(rng, down), _uniform(rng, down)], reverse=True)
    return s[0], s[1]


def _any_slope(rng, cfg):
    rng_range = cfg.ascending_slope_range if rng.random() < 0.5 else cfg.descending_slope_range
    return _uniform(rng, rng_range)


def _y_slopes(rng, shape, cfg):
    if cfg.y_slope_signs == "random":
        return _any_slope(rng, cfg), _any_slope(rng, cfg)
    up, down = cfg.ascending_slope_range, cfg.descending_slope_range
    first, second = shape.split("_")
    return (_uniform(rng, up if first == "up" else down),
            _uniform(rng, up if second == "up" else down))


def _noisy_smoothed(rng, clean, cfg):
    var = _uniform(rng, cfg.noise_variance_range)
    noisy = clean + rng.normal(0.0, np.sqrt(var), clean.size) if var > 0 else clean
    return smooth(noisy, cfg.smoothing_degree)


def anomaly_shape(rng, kind: str, normal: np.ndarray, cfg: GeneratorConfig) -> np.ndarray:
    """Noise-free atypical curve standing in for ``normal``.

    Sinusoid and hat amplitudes are a random multiple (in
    ``amplitude_factor_range``) of the replaced curve's dynamic range; the
    linear anomaly is a single straight piece with no breakpoint.
    """
    n = normal.size
    t = np.arange(n, dtype=np.float64)
    dyn = float(normal.max() - normal.min())
    dyn = dyn if dyn > 0 else 1.0
    amp = _uniform(rng, cfg.amplitude_factor_range) * dyn
    if kind == "Sinusoidal":
        periods = _uniform(rng, cfg.sine_periods_range)
        phase = float(rng.uniform(0, 2 * np.pi))
        return normal.mean() + amp * np.sin(2 * np.pi * periods * t / n + phase)
    if kind == "Hat":
        apex = _uniform(rng, cfg.hat_apex_range) * (n - 1)
        half = 0.5 * _uniform(rng, cfg.hat_width_range) * (n - 1)
        lo, hi = max(apex - half, 0.0), min(apex + half, n - 1.0)
        rise = np.where(t <= apex, (t - lo) / max(apex - lo, 1.0), (hi - t) / max(hi - apex, 1.0))
        sign = 1.0 if rng.random() < 0.5 else -1.0
        return normal[0] + sign * amp * np.clip(rise, 0.0, 1.0)
    if kind == "Linear":
        sign = 1.0 if rng.random() < 0.5 else -1.0
        return normal[0] + sign * _uniform(rng, cfg.linear_slope_range) * t
    raise ValueError(f"unknown anomaly type {kind!r}")


@dataclass
class _Plan:
    kinds: dict[int, tuple[str, str]] = field(default_factory=dict)  # index -> (type, channel)


def _plan(cfg: GeneratorConfig) -> _Plan:
    rng = np.random.default_rng([cfg.seed, _PLAN_STREAM])
    idx = np.sort(rng.choice(cfg.n_signals, size=cfg.n_anomalies, replace=False))
    plan = _Plan()
    for i in idx:
        kind = cfg.anomaly_types[int(rng.integers(len(cfg.anomaly_types)))]
        chan = cfg.anomaly_channels[int(rng.integers(len(cfg.anomaly_channels)))]
        plan.kinds[int(i)] = (kind, chan)
    return plan


def generate_segment(cfg: GeneratorConfig, index: int, anomaly: tuple[str, str] | None = None):
    """Build segment number ``index``; returns ``(segment, shape, anomaly_type)``."""
    rng = np.random.default_rng([cfg.seed, _SEGMENT_STREAM, index])
    length = int(rng.integers(cfg.length_range[0], cfg.length_range[1] + 1))
    shape = cfg.shapes[int(rng.integers(len(cfg.shapes)))]
    s1, s2 = _shape_slopes(rng, shape, cfg)
    x_clean = piecewise_linear(length, _draw_breakpoint(rng, length, cfg), s1, s2)
    y_clean = piecewise_linear(length, _draw_breakpoint(rng, length, cfg),
                               *_y_slopes(rng, shape, cfg))
    label, kind = Label.NORMAL, "None"
    if anomaly is not None:
        kind, chan = anomaly
        label = _CHANNEL_LABEL[chan]
        if chan in ("X", "Both"):
            x_clean = anomaly_shape(rng, kind, x_clean, cfg)
        if chan in ("Y", "Both"):
            y_clean = anomaly_shape(rng, kind, y_clean, cfg)
    x = _noisy_smoothed(rng, x_clean, cfg)
    y = _noisy_smoothed(rng, y_clean, cfg)
    sid = f"{cfg.id_prefix}{index:0{len(str(cfg.n_signals - 1))}d}"
    return BivariateSegment(sid, x, y, label), shape, kind


def generate(cfg: GeneratorConfig = GeneratorConfig()) -> Dataset:
    """Generate the full benchmark dataset.

    ``metadata`` records the seed, the config digest and the full config
    (as JSON), plus the anomaly ids and their injected types.
    """
    plan = _plan(cfg)
    segments, types, shapes = [], {}, {}
    for i in range(cfg.n_signals):
        seg, shape, kind = generate_segment(cfg, i, plan.kinds.get(i))
        segments.append(seg)
        shapes[seg.id] = shape
        if kind != "None":
            types[seg.id] = kind
    meta = {
        "seed": str(cfg.seed),
        "config_digest": cfg.digest(),
        "config": json.dumps(cfg.to_dict(), sort_keys=True),
        "anomaly_ids": ",".join(sorted(types)),
        "anomaly_types": json.dumps(types, sort_keys=True),
        "shapes": json.dumps(shapes, sort_keys=True),
    }
    return Dataset(segments, meta)
