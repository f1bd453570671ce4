"""Model configuration, config-file parsing, and bundled presets.

Config files are flat `key = value` text, one parameter per line, with `#`
comments.  Unknown keys are hard errors so typos cannot silently fall back
to defaults.
"""

import dataclasses
from dataclasses import dataclass
from importlib import resources


@dataclass
class ModelConfig:
    """Event-model parameters.

    theta_on / theta_off     nominal log-intensity contrast thresholds (both
                             stored as positive magnitudes)
    sigma_theta              std of the fixed-pattern threshold mismatch
    f3db_max                 photoreceptor corner frequency in Hz at full
                             intensity; 0 disables the lowpass entirely
    bw_floor                 fraction of f3db_max retained at zero intensity
    leak_rate                ON-event background rate from the leaking pixel
                             memory, in Hz at the nominal threshold
    shot_rate                total temporal-noise event rate in Hz per pixel
                             in darkness (split evenly between polarities)
    shot_bright_factor       fraction of shot_rate remaining at full intensity
    theta_min                lower clip for sampled thresholds; keeps mismatch
                             from creating hot pixels with near-zero thresholds
    linlog_knee              luma below which the log mapping becomes linear
    seed                     64-bit seed for all randomness
    """

    theta_on: float = 0.3
    theta_off: float = 0.3
    sigma_theta: float = 0.03
    f3db_max: float = 0.0
    bw_floor: float = 0.1
    leak_rate: float = 0.1
    shot_rate: float = 1.0
    shot_bright_factor: float = 0.25
    theta_min: float = 0.01
    linlog_knee: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.theta_on <= 0 or self.theta_off <= 0:
            raise ValueError("theta_on and theta_off must be positive")
        if self.sigma_theta < 0:
            raise ValueError("sigma_theta cannot be negative")
        if self.f3db_max < 0:
            raise ValueError("f3db_max cannot be negative")
        if not 0.0 < self.bw_floor <= 1.0:
            raise ValueError("bw_floor must be in (0, 1]")
        if self.leak_rate < 0:
            raise ValueError("leak_rate cannot be negative")
        if self.shot_rate < 0:
            raise ValueError("shot_rate cannot be negative")
        if not 0.0 <= self.shot_bright_factor <= 1.0:
            raise ValueError("shot_bright_factor must be in [0, 1]")
        if self.theta_min <= 0:
            raise ValueError("theta_min must be positive")
        if self.linlog_knee <= 1:
            raise ValueError("linlog_knee must exceed 1")
        self.seed = int(self.seed)

    @classmethod
    def field_names(cls):
        return tuple(f.name for f in dataclasses.fields(cls))

    @classmethod
    def from_mapping(cls, mapping):
        """Build a config from string or numeric values; unknown keys raise."""
        known = {f.name: f.type for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in mapping.items():
            if key not in known:
                raise ValueError(f"unknown model parameter {key!r}")
            conv = int if known[key] == "int" or known[key] is int else float
            try:
                kwargs[key] = conv(value)
            except (TypeError, ValueError) as exc:
                raise ValueError(f"bad value for {key!r}: {value!r}") from exc
        return cls(**kwargs)

    def replaced(self, **changes):
        return dataclasses.replace(self, **changes)

    def as_dict(self):
        return dataclasses.asdict(self)


def parse_config_text(text, source="<config>"):
    """Parse flat key=value text into a string-to-string dict."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ValueError(f"{source}:{lineno}: expected key = value, got {raw!r}")
        out[key] = value
    return out


def parse_config_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=str(path))


def _preset_dir():
    return resources.files("evgen") / "presets"


def available_presets():
    names = [p.name[:-4] for p in _preset_dir().iterdir() if p.name.endswith(".cfg")]
    return tuple(sorted(names))


def load_preset(name):
    """Key-value dict for a bundled preset."""
    path = _preset_dir() / f"{name}.cfg"
    if not path.is_file():
        raise ValueError(
            f"unknown preset {name!r}; available: {', '.join(available_presets())}")
    return parse_config_text(path.read_text(encoding="utf-8"), source=f"preset {name}")
