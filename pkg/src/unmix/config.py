"""Run configuration: defaults for every stage plus INI-file loading."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields

from unmix.dnn import TrainConfig
from unmix.energymin import SolverConfig
from unmix.signal import StftConfig


@dataclass(frozen=True)
class NmfSettings:
    rank: int = 128
    train_iters: int = 200
    separate_iters: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.rank, self.train_iters, self.separate_iters) < 1:
            raise ValueError("rank and iteration counts must be >= 1")


@dataclass(frozen=True)
class DnnSettings:
    # hidden_sizes=None picks the frame-count-dependent default below.
    hidden_sizes: tuple[int, ...] | None = None
    frames: int = 1
    rbm_epochs: int = 150
    bp_epochs: int = 500
    output_only_epochs: int = 5
    learning_rate: float = 0.05
    momentum: float = 0.9
    batch_size: int = 128
    seed: int = 0

    def __post_init__(self) -> None:
        if self.frames < 1 or self.frames % 2 == 0:
            raise ValueError("frames must be odd and >= 1")
        if self.hidden_sizes is not None and (
            len(self.hidden_sizes) == 0 or min(self.hidden_sizes) < 1
        ):
            raise ValueError("hidden_sizes must be positive")
        self.train_config()  # validates the remaining fields

    def resolved_hidden_sizes(self) -> tuple[int, ...]:
        if self.hidden_sizes is not None:
            return self.hidden_sizes
        return (100, 50, 200) if self.frames == 1 else (100, 50, 500)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            rbm_epochs=self.rbm_epochs,
            bp_epochs=self.bp_epochs,
            output_only_epochs=self.output_only_epochs,
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            batch_size=self.batch_size,
            seed=self.seed,
        )


@dataclass(frozen=True)
class EnergySettings:
    lam: float = 5.0
    beta: float = 3.0
    max_iter: int = 200
    grad_tol: float = 1e-6
    history: int = 10

    def __post_init__(self) -> None:
        self.solver_config()

    def solver_config(self) -> SolverConfig:
        return SolverConfig(max_iter=self.max_iter, grad_tol=self.grad_tol, history=self.history)


@dataclass(frozen=True)
class RunConfig:
    stft: StftConfig = field(default_factory=StftConfig)
    nmf: NmfSettings = field(default_factory=NmfSettings)
    dnn: DnnSettings = field(default_factory=DnnSettings)
    energy: EnergySettings = field(default_factory=EnergySettings)
    threads: int = 1

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @property
    def dnn_input_dim(self) -> int:
        return self.dnn.frames * self.stft.n_bins


# INI key -> dataclass field, for names that differ.
_KEY_ALIASES = {"lambda": "lam"}


def _parse_value(raw: str, py_type: str):
    raw = raw.strip()
    if py_type == "int":
        return int(raw)
    if py_type == "float":
        return float(raw)
    # tuple[int, ...] | None
    if raw.lower() in ("", "none", "auto"):
        return None
    return tuple(int(tok) for tok in raw.replace(",", " ").split())


def _section_to_dataclass(cls, section: configparser.SectionProxy):
    spec = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, raw in section.items():
        name = _KEY_ALIASES.get(key, key)
        if name not in spec:
            raise ValueError(f"unknown config key [{section.name}] {key}")
        base = str(spec[name].type)
        if base.startswith("int"):
            kwargs[name] = _parse_value(raw, "int")
        elif base.startswith("float"):
            kwargs[name] = _parse_value(raw, "float")
        else:
            kwargs[name] = _parse_value(raw, base)
    return cls(**kwargs)


def load_config(path) -> RunConfig:
    """Parse a sectioned key=value config file; unknown keys are errors."""
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    known = {"stft": StftConfig, "nmf": NmfSettings, "dnn": DnnSettings, "energy": EnergySettings}
    kwargs = {}
    for section in parser.sections():
        if section in known:
            kwargs[section] = _section_to_dataclass(known[section], parser[section])
        elif section == "run":
            for key, raw in parser[section].items():
                if key != "threads":
                    raise ValueError(f"unknown config key [run] {key}")
                kwargs["threads"] = int(raw)
        else:
            raise ValueError(f"unknown config section [{section}]")
    return RunConfig(**kwargs)


def default_config_text() -> str:
    """A commented template with every default, suitable for editing."""
    cfg = RunConfig()
    lines = [
        "[stft]",
        f"window_len = {cfg.stft.window_len}",
        f"hop = {cfg.stft.hop}",
        f"fft_len = {cfg.stft.fft_len}",
        f"sample_rate = {cfg.stft.sample_rate}",
        "",
        "[nmf]",
        f"rank = {cfg.nmf.rank}",
        f"train_iters = {cfg.nmf.train_iters}",
        f"separate_iters = {cfg.nmf.separate_iters}",
        f"seed = {cfg.nmf.seed}",
        "",
        "[dnn]",
        "; auto = 100,50,200 for frames=1 and 100,50,500 for frames=3",
        "hidden_sizes = auto",
        f"frames = {cfg.dnn.frames}",
        f"rbm_epochs = {cfg.dnn.rbm_epochs}",
        f"bp_epochs = {cfg.dnn.bp_epochs}",
        f"output_only_epochs = {cfg.dnn.output_only_epochs}",
        f"learning_rate = {cfg.dnn.learning_rate}",
        f"momentum = {cfg.dnn.momentum}",
        f"batch_size = {cfg.dnn.batch_size}",
        f"seed = {cfg.dnn.seed}",
        "",
        "[energy]",
        f"lambda = {cfg.energy.lam}",
        f"beta = {cfg.energy.beta}",
        f"max_iter = {cfg.energy.max_iter}",
        f"grad_tol = {cfg.energy.grad_tol}",
        f"history = {cfg.energy.history}",
        "",
        "[run]",
        f"threads = {cfg.threads}",
        "",
    ]
    return "\n".join(lines)
