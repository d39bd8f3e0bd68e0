"""Config-driven symmetrization experiments.

A run follows the four-step procedure: sample symmetries, build the circuit
variants, execute each variant on a simulated miscalibrated device, aggregate.
All randomness flows from one master seed through named sub-streams (see
``simulate.stream_rng``); the device noise is drawn once and shared by every
variant, only the mapping decides which ion pairs a variant's gates land on.
"""
from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .aggregate import (
    AggregationResult,
    VariantBatch,
    VoteConfig,
    average_histograms,
    plurality_vote,
)
from .analysis import hellinger_fidelity
from .circuit import GENERATORS, Circuit, parse_circuit, transpile_to_native
from .simulate import (
    Histogram,
    NoiseModel,
    ShotList,
    bitstring,
    derive_seed,
    parse_noise_model,
    sample_shots,
    simulate_ideal,
    simulate_noisy,
    stream_rng,
)
from .symmetry import (
    SymmetryTransform,
    VariantRealization,
    apply_symmetry,
    decomposition_mask_every_mth,
    sample_mappings_dissimilar,
    sample_mappings_random,
    serialize_transform,
)

MODES = ("random-maps", "dissimilar-maps", "maps+decomposition")
METHODS = ("average", "vote")
REPORT_SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    circuit_generator: str | None = "bell"
    circuit_params: tuple[tuple[str, str], ...] = ()
    circuit_file: str | None = None
    n_physical: int | None = None
    variants: int = 25
    shots: int = 100
    mode: str = "random-maps"
    stride: int = 2
    pool_size: int = 200
    noise_file: str | None = None
    delta_low: float = 0.0
    delta_high: float = 0.0
    depolarizing: float = 0.0
    calibrate_band: tuple[float, float] | None = None
    methods: tuple[str, ...] = METHODS
    threshold: int | None = None
    scrambles: int = 10
    infinite_shots: bool = False
    synthetic_shots: int = 2000
    out_dir: str = "out"
    fmt: str = "json"

    def __post_init__(self):
        if self.variants < 1 or self.shots < 1:
            raise ConfigError("variants and shots must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"unknown symmetry mode {self.mode!r}; choose from {MODES}")
        if self.stride < 1:
            raise ConfigError("decomposition stride must be >= 1")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise ConfigError(f"unknown aggregation methods {sorted(bad)}")
        if self.fmt not in ("json", "csv"):
            raise ConfigError(f"unknown output format {self.fmt!r}")
        if (self.circuit_file is None) == (self.circuit_generator is None):
            raise ConfigError("give exactly one of circuit.file or circuit.generator")
        if self.circuit_generator is not None and self.circuit_generator not in GENERATORS:
            raise ConfigError(f"unknown generator {self.circuit_generator!r}")
        if self.scrambles < 1:
            raise ConfigError("scrambles must be >= 1")
        if self.calibrate_band is not None:
            lo, hi = self.calibrate_band
            if not 0 < lo < hi < 1:
                raise ConfigError("calibrate_band must satisfy 0 < low < high < 1")
        if not 0 <= self.depolarizing < 1:
            raise ConfigError("depolarizing must lie in [0, 1)")
        if max(abs(self.delta_low), abs(self.delta_high)) >= 1 or self.delta_low > self.delta_high:
            raise ConfigError("need -1 < delta_low <= delta_high < 1")
        for path in (self.circuit_file, self.noise_file):
            if path is not None and not Path(path).is_file():
                raise ConfigError(f"file not found: {path}")

    @property
    def params(self) -> dict[str, str]:
        return dict(self.circuit_params)

    def to_text(self) -> str:
        """Canonical config text; its SHA-256 is the report's config hash."""
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        circuit = {}
        if self.circuit_file is not None:
            circuit["file"] = self.circuit_file
        else:
            circuit["generator"] = self.circuit_generator
        circuit.update(sorted(self.circuit_params))
        cp["circuit"] = circuit
        sym = {
            "mode": self.mode,
            "variants": str(self.variants),
            "stride": str(self.stride),
            "pool_size": str(self.pool_size),
        }
        if self.n_physical is not None:
            sym["n_physical"] = str(self.n_physical)
        cp["symmetry"] = sym
        noise = {}
        if self.noise_file is not None:
            noise["file"] = self.noise_file
        else:
            noise["delta_low"] = repr(self.delta_low)
            noise["delta_high"] = repr(self.delta_high)
        noise["depolarizing"] = repr(self.depolarizing)
        if self.calibrate_band is not None:
            noise["calibrate_band"] = f"{self.calibrate_band[0]!r}, {self.calibrate_band[1]!r}"
        cp["noise"] = noise
        cp["aggregation"] = {
            "methods": ", ".join(self.methods),
            "threshold": "auto" if self.threshold is None else str(self.threshold),
            "scrambles": str(self.scrambles),
        }
        cp["run"] = {
            "seed": str(self.seed),
            "shots": str(self.shots),
            "infinite_shots": str(self.infinite_shots).lower(),
            "synthetic_shots": str(self.synthetic_shots),
        }
        cp["output"] = {"dir": self.out_dir, "format": self.fmt}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


def _get(cp: configparser.ConfigParser, section: str, key: str, conv, default=None):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key).strip()
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not valid") from None


def _bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def _band(raw: str) -> tuple[float, float]:
    parts = [float(x) for x in raw.replace(" ", "").split(",")]
    if len(parts) != 2:
        raise ValueError(raw)
    return parts[0], parts[1]


KNOWN_KEYS = {
    "circuit": None,  # generator parameters are free-form
    "symmetry": {"mode", "n_physical", "variants", "stride", "pool_size"},
    "noise": {"file", "model", "delta_low", "delta_high", "depolarizing", "calibrate_band"},
    "aggregation": {"methods", "threshold", "scrambles"},
    "run": {"seed", "shots", "infinite_shots", "synthetic_shots"},
    "output": {"dir", "format"},
}


def load_config(
    text: str, base_dir: str | Path = ".", seed: int | None = None, out_dir: str | None = None,
    fmt: str | None = None,
) -> ExperimentConfig:
    """Parse the ``key = value`` config format; CLI overrides win over file values."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from None
    for section in cp.sections():
        if section not in KNOWN_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        allowed = KNOWN_KEYS[section]
        if allowed is not None:
            extra = set(cp[section]) - allowed
            if extra:
                raise ConfigError(f"unknown keys in [{section}]: {sorted(extra)}")
    base = Path(base_dir)

    def resolve(p: str | None) -> str | None:
        if p is None:
            return None
        path = Path(p)
        return str(path if path.is_absolute() else base / path)

    circuit_file = resolve(_get(cp, "circuit", "file", str))
    generator = _get(cp, "circuit", "generator", str)
    if circuit_file is None and generator is None:
        raise ConfigError("[circuit] needs 'file' or 'generator'")
    params = tuple(sorted((k, v.strip()) for k, v in cp["circuit"].items() if k not in ("file", "generator"))) if cp.has_section("circuit") else ()
    cfg_seed = _get(cp, "run", "seed", int)
    if seed is not None:
        cfg_seed = seed
    if cfg_seed is None:
        raise ConfigError("a seed is mandatory ([run] seed or --seed)")
    methods = _get(cp, "aggregation", "methods", lambda s: tuple(x.strip() for x in s.split(",") if x.strip()), METHODS)
    threshold = _get(cp, "aggregation", "threshold", lambda s: None if s == "auto" else int(s))
    model = _get(cp, "noise", "model", str, "uniform")
    if model != "uniform":
        raise ConfigError(f"unknown noise model {model!r}")
    return ExperimentConfig(
        seed=cfg_seed,
        circuit_generator=None if circuit_file else generator,
        circuit_params=params,
        circuit_file=circuit_file,
        n_physical=_get(cp, "symmetry", "n_physical", int),
        variants=_get(cp, "symmetry", "variants", int, 25),
        shots=_get(cp, "run", "shots", int, 100),
        mode=_get(cp, "symmetry", "mode", str, "random-maps"),
        stride=_get(cp, "symmetry", "stride", int, 2),
        pool_size=_get(cp, "symmetry", "pool_size", int, 200),
        noise_file=resolve(_get(cp, "noise", "file", str)),
        delta_low=_get(cp, "noise", "delta_low", float, 0.0),
        delta_high=_get(cp, "noise", "delta_high", float, 0.0),
        depolarizing=_get(cp, "noise", "depolarizing", float, 0.0),
        calibrate_band=_get(cp, "noise", "calibrate_band", _band),
        methods=methods,
        threshold=threshold,
        scrambles=_get(cp, "aggregation", "scrambles", int, 10),
        infinite_shots=_get(cp, "run", "infinite_shots", _bool, False),
        synthetic_shots=_get(cp, "run", "synthetic_shots", int, 2000),
        out_dir=out_dir or _get(cp, "output", "dir", str, "out"),
        fmt=fmt or _get(cp, "output", "format", str, "json"),
    )


def load_config_file(path: str | Path, **overrides) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return load_config(text, base_dir=path.parent, **overrides)


# ---------------------------------------------------------------------------
# pipeline pieces

def _read_input(path: str, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {what} {path}: {exc}") from None


def build_circuit(cfg: ExperimentConfig) -> Circuit:
    if cfg.circuit_file is not None:
        c = parse_circuit(_read_input(cfg.circuit_file, "circuit file"))
        return c if c.is_native else transpile_to_native(c)
    params = {}
    for k, v in cfg.circuit_params:
        if v.lower() in ("true", "false"):
            params[k] = v.lower() == "true"
        else:
            try:
                params[k] = int(v)
            except ValueError:
                params[k] = v
    try:
        return GENERATORS[cfg.circuit_generator](**params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameters for generator {cfg.circuit_generator!r}: {exc}") from None


def default_n_physical(n_logical: int) -> int:
    # small circuits get two spare ions for more diverse mappings
    return n_logical + 2 if n_logical <= 6 else n_logical


def sample_transforms(cfg: ExperimentConfig, c: Circuit, seed: int) -> list[SymmetryTransform]:
    n_phys = cfg.n_physical or default_n_physical(c.n_qubits)
    rng = stream_rng(seed, "symmetry")
    if cfg.mode == "dissimilar-maps":
        maps = sample_mappings_dissimilar(c, n_phys, cfg.variants, rng, cfg.pool_size)
    else:
        maps = sample_mappings_random(c.n_qubits, n_phys, cfg.variants, rng)
    if cfg.mode != "maps+decomposition":
        return [SymmetryTransform(m) for m in maps]
    # rotate the stride offset so each XX is sign-flipped in 1/stride of the variants
    return [
        SymmetryTransform(m, decomposition_mask_every_mth(c, cfg.stride, v % cfg.stride))
        for v, m in enumerate(maps)
    ]


def base_noise(cfg: ExperimentConfig, n_physical: int, seed: int) -> NoiseModel:
    if cfg.noise_file is not None:
        return parse_noise_model(_read_input(cfg.noise_file, "noise file"))
    return NoiseModel.random_uniform(
        n_physical, cfg.delta_low, cfg.delta_high, derive_seed(seed, "noise"), cfg.depolarizing
    )


def variant_histograms(
    c: Circuit, realizations: Sequence[VariantRealization], nm: NoiseModel
) -> list[Histogram]:
    return [r.relabel(simulate_noisy(r.physical_circuit, None, nm)) for r in realizations]


def _target(ideal: Histogram) -> int:
    return ideal.argmax()


def unsymmetrized_target(hists: Sequence[Histogram], target: int) -> float:
    return float(np.mean([h[target] for h in hists]))


@dataclass(frozen=True)
class Calibration:
    band: tuple[float, float]
    delta_scale: float
    depolarizing: float
    target_probability: float
    in_band: bool


def calibrate_noise(
    realizations: Sequence[VariantRealization],
    c: Circuit,
    nm: NoiseModel,
    target: int,
    band: tuple[float, float],
    iters: int = 40,
) -> tuple[NoiseModel, Calibration]:
    """Scale the pair errors (then, if needed, raise eps) until the mean
    per-variant target probability falls inside ``band``.

    Works on exact variant histograms; aims for the band's geometric centre.
    """
    lo, hi = band
    goal = math.sqrt(lo * hi)
    max_delta = max((abs(d) for d in nm.pair_error.values()), default=0.0)
    if max_delta == 0:
        raise ConfigError("calibration needs a nonzero pair-error range")
    max_scale = 0.995 / max_delta

    def prob(scale: float, eps: float) -> float:
        return unsymmetrized_target(variant_histograms(c, realizations, nm.scaled(scale, eps)), target)

    eps = nm.depolarizing_eps
    # coarse scan: coherent errors need not be monotone in scale
    grid = np.linspace(0.0, max_scale, 41)[1:]
    probs = [prob(float(s), eps) for s in grid]
    inside = [i for i, p in enumerate(probs) if lo <= p <= hi]
    if inside:
        i = min(inside)
        a, b = (float(grid[i - 1]) if i else 0.0), float(grid[i])
        pa = prob(a, eps) if a else 1.0
        scale = b
        # refine between the last point above the band and the first inside it
        for _ in range(iters):
            mid = 0.5 * (a + b)
            pm = prob(mid, eps)
            if lo <= pm <= hi and abs(math.log(pm / goal)) < abs(math.log(prob(scale, eps) / goal)):
                scale = mid
            if (pm > goal) == (pa > goal):
                a, pa = mid, pm
            else:
                b = mid
        final = prob(scale, eps)
        return nm.scaled(scale), Calibration(band, scale, eps, final, lo <= final <= hi)
    scale = float(grid[int(np.argmin(probs))])
    if min(probs) < lo:
        # overshoot without landing: take the scale closest to the band centre
        scale = float(grid[int(np.argmin([abs(math.log(max(p, 1e-300) / goal)) for p in probs]))])
        final = prob(scale, eps)
        return nm.scaled(scale), Calibration(band, scale, eps, final, lo <= final <= hi)
    # coherent errors alone cannot push the target low enough: add depolarizing.
    # The uniform mix is linear in eps, p(eps) = (1 - eps) p0 + eps / 2^n, and
    # never goes below 1 / 2^n, so aim at a point of the band above that floor.
    floor = 1.0 / (1 << c.n_qubits)
    p0 = prob(scale, 0.0)
    q = math.sqrt(max(lo, floor * 1.05) * hi) if floor * 1.05 < hi else hi
    eps = min(0.999, max(0.0, (p0 - q) / (p0 - floor))) if p0 > floor else 0.0
    final = prob(scale, eps)
    return nm.scaled(scale, eps), Calibration(band, scale, eps, final, lo <= final <= hi)


@dataclass(frozen=True, eq=False)
class VariantData:
    circuit: Circuit
    ideal: Histogram
    transforms: tuple[SymmetryTransform, ...]
    noise: NoiseModel
    histograms: tuple[Histogram, ...]  # exact logical distribution per variant
    shots: tuple[ShotList, ...] | None
    calibration: Calibration | None = None

    @property
    def target(self) -> int:
        return _target(self.ideal)

    def batch(self, n_shots: int | None = None) -> VariantBatch:
        if self.shots is None:
            return VariantBatch(histograms=self.histograms)
        shots = self.shots if n_shots is None else tuple(s.head(n_shots) for s in self.shots)
        return VariantBatch(shots=shots)


def prepare_variants(cfg: ExperimentConfig, c: Circuit | None = None, seed: int | None = None,
                     shot_seed: int | None = None) -> VariantData:
    """Sample symmetries, build the variants and execute them under noise.

    ``shot_seed`` (default: ``seed``) drives only the shot sampling, so a sweep
    can resample shots on one fixed device and set of variants.
    """
    seed = cfg.seed if seed is None else seed
    shot_seed = seed if shot_seed is None else shot_seed
    c = build_circuit(cfg) if c is None else c
    ideal = simulate_ideal(c)
    transforms = sample_transforms(cfg, c, seed)
    realizations = [apply_symmetry(c, t) for t in transforms]
    n_phys = transforms[0].mapping.n_physical
    nm = base_noise(cfg, n_phys, seed)
    calibration = None
    if cfg.calibrate_band is not None:
        nm, calibration = calibrate_noise(realizations, c, nm, _target(ideal), cfg.calibrate_band)
    hists = variant_histograms(c, realizations, nm)
    shots = None
    if not cfg.infinite_shots:
        shots = tuple(
            sample_shots(h, cfg.shots, stream_rng(shot_seed, "shots", v)) for v, h in enumerate(hists)
        )
    return VariantData(c, ideal, tuple(transforms), nm, tuple(hists), shots, calibration)


def vote_config(cfg: ExperimentConfig, seed: int, threshold: int | None = None) -> VoteConfig:
    t0 = cfg.threshold if threshold is None else threshold
    if t0 is not None and cfg.variants >= 2:
        t0 = min(t0, cfg.variants)
    return VoteConfig(t0, cfg.scrambles, derive_seed(seed, "scramble"))


def vote_batch(data: VariantData, cfg: ExperimentConfig, seed: int, threshold: int | None = None,
               n_shots: int | None = None) -> AggregationResult:
    batch = data.batch(n_shots)
    if batch.shots is None:
        # infinite-shot mode: vote on synthetic shots drawn from the exact histograms
        synth = tuple(
            sample_shots(h, cfg.synthetic_shots, stream_rng(seed, "synthetic", v))
            for v, h in enumerate(data.histograms)
        )
        batch = VariantBatch(shots=synth, histograms=data.histograms)
    return plurality_vote(batch, vote_config(cfg, seed, threshold))


# ---------------------------------------------------------------------------
# report

@dataclass(frozen=True, eq=False)
class StrategyResult:
    histogram: Histogram
    fidelity: float
    target_probability: float
    method_used: str
    winner_count: int = 0


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    config_hash: str
    seed: int
    n_bits: int
    target: int
    ideal: Histogram
    transforms: tuple[SymmetryTransform, ...]
    variant_histograms: tuple[Histogram, ...]
    variant_fidelities: tuple[float, ...]
    variant_target_probabilities: tuple[float, ...]
    strategies: dict[str, StrategyResult]
    calibration: Calibration | None = None
    flags: tuple[str, ...] = ()

    @property
    def unsymmetrized_fidelity(self) -> float:
        return float(np.mean(self.variant_fidelities))

    @property
    def unsymmetrized_target_probability(self) -> float:
        return float(np.mean(self.variant_target_probabilities))

    def fidelity(self, strategy: str) -> float:
        return self.strategies[strategy].fidelity

    def to_dict(self) -> dict:
        def hist(h: Histogram) -> dict[str, float]:
            return {bitstring(k, h.n_bits): v for k, v in h.entries.items()}

        out = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "n_bits": self.n_bits,
            "target": bitstring(self.target, self.n_bits),
            "ideal": hist(self.ideal),
            "unsymmetrized": {
                "fidelity": self.unsymmetrized_fidelity,
                "target_probability": self.unsymmetrized_target_probability,
            },
            "variants": [
                {
                    "index": i,
                    "transform": serialize_transform(t),
                    "histogram": hist(h),
                    "fidelity": f,
                    "target_probability": p,
                }
                for i, (t, h, f, p) in enumerate(
                    zip(self.transforms, self.variant_histograms, self.variant_fidelities,
                        self.variant_target_probabilities)
                )
            ],
            "aggregated": {
                name: {
                    "method_used": s.method_used,
                    "winner_count": s.winner_count,
                    "fidelity": s.fidelity,
                    "target_probability": s.target_probability,
                    "histogram": hist(s.histogram),
                }
                for name, s in sorted(self.strategies.items())
            },
            "flags": list(self.flags),
        }
        if self.calibration is not None:
            cal = self.calibration
            out["calibration"] = {
                "band": list(cal.band),
                "delta_scale": cal.delta_scale,
                "depolarizing": cal.depolarizing,
                "target_probability": cal.target_probability,
                "in_band": cal.in_band,
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def run_experiment(cfg: ExperimentConfig, c: Circuit | None = None) -> ExperimentReport:
    data = prepare_variants(cfg, c)
    return report_from_data(data, cfg, cfg.seed)


def report_from_data(data: VariantData, cfg: ExperimentConfig, seed: int,
                     n_shots: int | None = None) -> ExperimentReport:
    ideal, target = data.ideal, data.target
    batch = data.batch(n_shots)
    observed = batch.variant_histograms()
    strategies: dict[str, StrategyResult] = {}
    for name in cfg.methods:
        if name == "average":
            res = average_histograms(batch)
        else:
            res = vote_batch(data, cfg, seed, n_shots=n_shots)
        strategies[name] = StrategyResult(
            res.histogram,
            hellinger_fidelity(res.histogram, ideal),
            res.histogram[target],
            res.method_used,
            res.winner_count,
        )
    flags = []
    if "vote" in strategies and "average" in strategies:
        if strategies["vote"].fidelity < strategies["average"].fidelity:
            flags.append("vote-lowers-fidelity")
    if "vote" in strategies and strategies["vote"].method_used == "vote-fallback-average":
        flags.append("vote-fallback")
    if data.calibration is not None and not data.calibration.in_band:
        flags.append("calibration-out-of-band")
    return ExperimentReport(
        config_hash=cfg.config_hash(),
        seed=seed,
        n_bits=ideal.n_bits,
        target=target,
        ideal=ideal,
        transforms=data.transforms,
        variant_histograms=tuple(observed),
        variant_fidelities=tuple(hellinger_fidelity(h, ideal) for h in observed),
        variant_target_probabilities=tuple(h[target] for h in observed),
        strategies=strategies,
        calibration=data.calibration,
        flags=tuple(flags),
    )


def histogram_rows(rep: ExperimentReport) -> list[tuple[str, str, float]]:
    rows = [("ideal", bitstring(k, rep.n_bits), v) for k, v in rep.ideal.entries.items()]
    for i, h in enumerate(rep.variant_histograms):
        rows += [(f"variant{i}", bitstring(k, rep.n_bits), v) for k, v in h.entries.items()]
    for name, s in sorted(rep.strategies.items()):
        rows += [(name, bitstring(k, rep.n_bits), v) for k, v in s.histogram.entries.items()]
    return rows


def emit_report(rep: ExperimentReport, out_dir: str | Path, fmt: str = "json") -> list[Path]:
    """Write ``report.json`` or ``histograms.csv`` + ``fidelities.csv`` under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = out / "report.json"
        path.write_text(rep.to_json())
        return [path]
    if fmt != "csv":
        raise ConfigError(f"unknown format {fmt!r}")
    hist_path, fid_path = out / "histograms.csv", out / "fidelities.csv"
    with hist_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "bitstring", "frequency"])
        for src, bits, v in histogram_rows(rep):
            w.writerow([src, bits, repr(v)])
    with fid_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "fidelity", "target_probability", "method_used", "config_hash"])
        for i, (f, p) in enumerate(zip(rep.variant_fidelities, rep.variant_target_probabilities)):
            w.writerow([f"variant{i}", repr(f), repr(p), "", rep.config_hash])
        w.writerow(["unsymmetrized", repr(rep.unsymmetrized_fidelity),
                    repr(rep.unsymmetrized_target_probability), "", rep.config_hash])
        for name, s in sorted(rep.strategies.items()):
            w.writerow([name, repr(s.fidelity), repr(s.target_probability), s.method_used, rep.config_hash])
    return [hist_path, fid_path]


# ---------------------------------------------------------------------------
# threshold training and shot sweeps

@dataclass(frozen=True)
class ThresholdTraining:
    recommended: int
    scores: dict[int, float]  # threshold -> mean voted fidelity


def train_threshold(cfg: ExperimentConfig, circuits: Sequence[Circuit]) -> ThresholdTraining:
    """Sweep the initial vote threshold over [2, m]; maximize mean voted fidelity.

    Ties (within 1e-12) go to the larger threshold.
    """
    if not circuits:
        raise ConfigError("threshold training needs at least one circuit")
    m = cfg.variants
    if m < 2:
        raise ConfigError("threshold training needs at least two variants")
    data = [prepare_variants(cfg, c, derive_seed(cfg.seed, "circuit", i)) for i, c in enumerate(circuits)]
    scores: dict[int, float] = {}
    for t in range(2, m + 1):
        fids = [
            hellinger_fidelity(vote_batch(d, cfg, cfg.seed, threshold=t).histogram, d.ideal)
            for d in data
        ]
        scores[t] = float(np.mean(fids))
    best = max(scores.values())
    recommended = max(t for t, s in scores.items() if s >= best - 1e-12)
    return ThresholdTraining(recommended, scores)


@dataclass(frozen=True)
class SweepRow:
    shots: int
    vote_mean: float
    vote_std: float
    average_mean: float
    average_std: float
    unsymmetrized_mean: float
    vote_values: tuple[float, ...]
    average_values: tuple[float, ...]


def replica_seed(seed: int, replica: int) -> int:
    return seed if replica == 0 else derive_seed(seed, "replica", replica)


def run_shot_sweep(cfg: ExperimentConfig, shot_grid: Sequence[int], replicas: int = 10) -> list[SweepRow]:
    """Target probability vs shots per variant.

    Replicas share the device and the symmetry draw and differ only in their
    shot and scramble seeds, so the dispersion measures sampling noise. Each
    grid point subsamples the first ``s`` shots of every variant of a full-size
    run. Replica 0 uses the master seed and so reproduces ``run_experiment``
    at ``s = cfg.shots``."""
    grid = sorted(set(int(s) for s in shot_grid))
    if not grid or grid[0] < 1:
        raise ConfigError("shot grid must contain positive integers")
    if grid[-1] > cfg.shots:
        raise ConfigError(f"grid value {grid[-1]} exceeds the {cfg.shots} shots per variant")
    if cfg.infinite_shots:
        raise ConfigError("shot sweeps need sampled shots (infinite_shots = false)")
    runs = []
    for r in range(replicas):
        seed = replica_seed(cfg.seed, r)
        runs.append((seed, prepare_variants(cfg, shot_seed=seed)))
    rows = []
    for s in grid:
        votes, avgs, unsym = [], [], []
        for seed, data in runs:
            batch = data.batch(s)
            avgs.append(average_histograms(batch).histogram[data.target])
            votes.append(vote_batch(data, cfg, seed, n_shots=s).histogram[data.target])
            unsym.append(float(np.mean([h[data.target] for h in batch.variant_histograms()])))
        rows.append(SweepRow(
            s, float(np.mean(votes)), float(np.std(votes)), float(np.mean(avgs)),
            float(np.std(avgs)), float(np.mean(unsym)), tuple(votes), tuple(avgs),
        ))
    return rows


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["shots", "vote_mean", "vote_std", "average_mean", "average_std", "unsymmetrized_mean"])
    for r in rows:
        w.writerow([r.shots, repr(r.vote_mean), repr(r.vote_std), repr(r.average_mean),
                    repr(r.average_std), repr(r.unsymmetrized_mean)])
    return buf.getvalue()
