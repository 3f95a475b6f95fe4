"""Run configuration: an INI-style ``key = value`` file with bracketed sections.

Every key is optional; missing keys fall back to the defaults below. Example::

    [schedule]
    beta0 = 0.05
    beta1 = 20.0
    steps = 1000

    [prior]
    n_freq = 80
    baseline = -1.0
    ; duration:center_bin:bandwidth:amplitude, comma separated
    phonemes = 12:22:3:2.5, 12:38:3.5:2, 12:40:3:3

    [target]
    phonemes = 12:34:3:2, 12:20:3:2.5, 8:42:3.5:2.5

    [model]
    components = 3
    sigma = 0.05
    stripe_amplitude = 0.2
    stripe_period = 4

    [edit]
    regions = 24:36, 48:60
    ; one kernel for all regions, or one per region
    kernel = up, down
    ramp_g = 16
    ramp_c = 9

    [content]
    src_gap = 24:36
    trg_chunk = 30:44
    alg2_mask_convention = printed

    [run]
    seed = 0
    trials = 1
    out = out
    jobs = 1
    save_grids = true
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

from .diffusion import NoiseSchedule
from .edit import MASK_CONVENTIONS
from .errors import EdittsError, ValidationError
from .grid import NAMED_KERNELS, EditSpec, FrameRange, PitchKernel, check_range
from .oracle import Phoneme, ToyPriorSpec, default_prior_spec, default_target_spec


class ConfigError(ValidationError):
    pass


@dataclass(frozen=True)
class ModelParams:
    components: int = 3
    sigma: float = 0.05
    stripe_amplitude: float = 0.2
    stripe_period: float = 4.0


@dataclass(frozen=True)
class RunConfig:
    schedule: NoiseSchedule = field(default_factory=NoiseSchedule)
    prior: ToyPriorSpec = field(default_factory=default_prior_spec)
    target: ToyPriorSpec = field(default_factory=default_target_spec)
    model: ModelParams = field(default_factory=ModelParams)
    regions: tuple[FrameRange, ...] = ((24, 36),)
    kernels: tuple[PitchKernel, ...] = (PitchKernel.named("up"),)
    ramp_g: int = 16
    ramp_c: int = 9
    src_gap: FrameRange = (24, 36)
    trg_chunk: FrameRange = (30, 44)
    alg2_mask_convention: str = "printed"
    seed: int = 0
    trials: int = 1
    out: str = "out"
    jobs: int = 1
    save_grids: bool = True

    @property
    def edit_spec(self) -> EditSpec:
        return EditSpec(self.regions, ramp_g=self.ramp_g, ramp_c=self.ramp_c)

    @property
    def kernel_arg(self):
        """A single kernel when all regions share one, else the per-region list."""
        return self.kernels[0] if len(self.kernels) == 1 else list(self.kernels)

    @property
    def kernel_label(self) -> str:
        return "+".join(k.name for k in self.kernels)

    @property
    def seeds(self) -> list[int]:
        return [self.seed + i for i in range(self.trials)]

    def validate(self) -> "RunConfig":
        try:
            spec = self.edit_spec
            spec.check_fits(self.prior.n_frames)
            if len(self.kernels) not in (1, len(self.regions)):
                raise ConfigError(f"{len(self.kernels)} kernels for {len(self.regions)} regions")
            if self.prior.n_freq != self.target.n_freq:
                raise ConfigError("prior and target must share n_freq")
            check_range(self.src_gap, self.prior.n_frames)
            check_range(self.trg_chunk, self.target.n_frames)
        except ConfigError:
            raise
        except EdittsError as exc:
            raise ConfigError(str(exc)) from exc
        if self.alg2_mask_convention not in MASK_CONVENTIONS:
            raise ConfigError(f"alg2_mask_convention must be one of {MASK_CONVENTIONS}")
        if self.trials < 1 or self.jobs < 1:
            raise ConfigError("trials and jobs must be positive")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.model.components < 1 or self.model.sigma < 0 or self.model.stripe_period <= 0:
            raise ConfigError("invalid [model] parameters")
        return self

    def to_ini(self) -> str:
        """Canonical text form; its hash identifies the configuration in manifests."""
        lines = [
            "[schedule]",
            f"beta0 = {self.schedule.beta0!r}",
            f"beta1 = {self.schedule.beta1!r}",
            f"steps = {self.schedule.steps}",
            "",
            "[prior]",
            f"n_freq = {self.prior.n_freq}",
            f"baseline = {self.prior.baseline!r}",
            f"phonemes = {_format_phonemes(self.prior)}",
            "",
            "[target]",
            f"n_freq = {self.target.n_freq}",
            f"baseline = {self.target.baseline!r}",
            f"phonemes = {_format_phonemes(self.target)}",
            "",
            "[model]",
            f"components = {self.model.components}",
            f"sigma = {self.model.sigma!r}",
            f"stripe_amplitude = {self.model.stripe_amplitude!r}",
            f"stripe_period = {self.model.stripe_period!r}",
            "",
            "[edit]",
            f"regions = {', '.join(f'{s}:{e}' for s, e in self.regions)}",
            f"kernel = {'; '.join(_format_kernel(k) for k in self.kernels)}",
            f"ramp_g = {self.ramp_g}",
            f"ramp_c = {self.ramp_c}",
            "",
            "[content]",
            f"src_gap = {self.src_gap[0]}:{self.src_gap[1]}",
            f"trg_chunk = {self.trg_chunk[0]}:{self.trg_chunk[1]}",
            f"alg2_mask_convention = {self.alg2_mask_convention}",
            "",
            "[run]",
            f"seed = {self.seed}",
            f"trials = {self.trials}",
        ]
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_ini().encode("utf-8")).hexdigest()


def _format_kernel(kernel: PitchKernel) -> str:
    if NAMED_KERNELS.get(kernel.name) == kernel.weights:
        return kernel.name
    return ",".join(repr(w) for w in kernel.weights)


def _format_phonemes(spec: ToyPriorSpec) -> str:
    return ", ".join(f"{p.duration}:{p.center_bin!r}:{p.bandwidth!r}:{p.amplitude!r}" for p in spec.phonemes)


def parse_range(text: str) -> FrameRange:
    try:
        start, end = text.split(":")
        return int(start), int(end)
    except ValueError:
        raise ConfigError(f"frame range must look like start:end, got {text!r}") from None


def parse_ranges(text: str) -> tuple[FrameRange, ...]:
    return tuple(parse_range(part.strip()) for part in text.split(",") if part.strip())


def parse_phonemes(text: str) -> tuple[Phoneme, ...]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            dur, center, bw, amp = part.split(":")
            out.append(Phoneme(int(dur), float(center), float(bw), float(amp)))
        except ValueError:
            raise ConfigError(f"phoneme must be duration:center:bandwidth:amplitude, got {part!r}") from None
    return tuple(out)


def parse_kernels(text: str) -> tuple[PitchKernel, ...]:
    """``up``, ``up, down``, ``0.2,0.2,0.6,0,0`` or ``w1,...,w5; w1,...,w5``."""
    text = text.strip()
    if ";" in text:
        parts = [p for p in text.split(";") if p.strip()]
    elif all(tok.strip() in NAMED_KERNELS for tok in text.split(",")):
        parts = text.split(",")
    else:
        parts = [text]
    try:
        return tuple(PitchKernel.parse(p) for p in parts)
    except EdittsError as exc:
        raise ConfigError(str(exc)) from exc


def _prior_section(
    cp: configparser.ConfigParser, name: str, default: Callable[[int], ToyPriorSpec], n_freq: int
) -> ToyPriorSpec:
    """``default(n_freq)`` is only built for whatever the section leaves out."""
    if not cp.has_section(name):
        return default(n_freq)
    sec = cp[name]
    n_freq = sec.getint("n_freq", n_freq)
    phonemes = parse_phonemes(sec["phonemes"]) if "phonemes" in sec else default(n_freq).phonemes
    return ToyPriorSpec(
        phonemes,
        n_freq=n_freq,
        baseline=sec.getfloat("baseline", ToyPriorSpec.baseline),
    )


def load_config(path: Optional[str | Path] = None, text: Optional[str] = None) -> RunConfig:
    """Read a config file (or text). Unknown sections or keys are rejected."""
    cp = configparser.ConfigParser(delimiters=("=",), inline_comment_prefixes=("#",))
    try:
        if path is not None:
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh)
        elif text is not None:
            cp.read_string(text)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    known = {
        "schedule": {"beta0", "beta1", "steps"},
        "prior": {"n_freq", "baseline", "phonemes"},
        "target": {"n_freq", "baseline", "phonemes"},
        "model": {"components", "sigma", "stripe_amplitude", "stripe_period"},
        "edit": {"regions", "kernel", "ramp_g", "ramp_c"},
        "content": {"src_gap", "trg_chunk", "alg2_mask_convention"},
        "run": {"seed", "trials", "out", "jobs", "save_grids"},
    }
    for section in cp.sections():
        if section not in known:
            raise ConfigError(f"unknown config section [{section}]")
        extra = set(cp[section]) - known[section]
        if extra:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(extra)}")

    base = RunConfig()
    try:
        sched = cp["schedule"] if cp.has_section("schedule") else {}
        schedule = NoiseSchedule(
            float(sched.get("beta0", base.schedule.beta0)),
            float(sched.get("beta1", base.schedule.beta1)),
            int(sched.get("steps", base.schedule.steps)),
        )
        prior = _prior_section(cp, "prior", default_prior_spec, base.prior.n_freq)
        target = _prior_section(cp, "target", default_target_spec, prior.n_freq)
        m = cp["model"] if cp.has_section("model") else {}
        model = ModelParams(
            int(m.get("components", base.model.components)),
            float(m.get("sigma", base.model.sigma)),
            float(m.get("stripe_amplitude", base.model.stripe_amplitude)),
            float(m.get("stripe_period", base.model.stripe_period)),
        )
        e = cp["edit"] if cp.has_section("edit") else {}
        c = cp["content"] if cp.has_section("content") else {}
        r = cp["run"] if cp.has_section("run") else {}
        cfg = RunConfig(
            schedule=schedule,
            prior=prior,
            target=target,
            model=model,
            regions=parse_ranges(e["regions"]) if "regions" in e else base.regions,
            kernels=parse_kernels(e["kernel"]) if "kernel" in e else base.kernels,
            ramp_g=int(e.get("ramp_g", base.ramp_g)),
            ramp_c=int(e.get("ramp_c", base.ramp_c)),
            src_gap=parse_range(c["src_gap"]) if "src_gap" in c else base.src_gap,
            trg_chunk=parse_range(c["trg_chunk"]) if "trg_chunk" in c else base.trg_chunk,
            alg2_mask_convention=c.get("alg2_mask_convention", base.alg2_mask_convention).strip(),
            seed=int(r.get("seed", base.seed)),
            trials=int(r.get("trials", base.trials)),
            out=str(r.get("out", base.out)).strip(),
            jobs=int(r.get("jobs", base.jobs)),
            save_grids=_parse_bool(r.get("save_grids", "true")),
        )
    except ConfigError:
        raise
    except (EdittsError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _parse_bool(text) -> bool:
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def with_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Apply CLI flag overrides (``None`` means "not given")."""
    sched = {k: overrides.pop(k) for k in ("beta0", "beta1", "steps") if overrides.get(k) is not None}
    for k in ("beta0", "beta1", "steps"):
        overrides.pop(k, None)
    try:
        if sched:
            cfg = replace(cfg, schedule=replace(cfg.schedule, **sched))
        if overrides.get("kernel") is not None:
            overrides["kernels"] = parse_kernels(overrides.pop("kernel"))
        overrides.pop("kernel", None)
        cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    except ConfigError:
        raise
    except EdittsError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg
