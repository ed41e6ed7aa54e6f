"""Experiment runner CLI.

Subcommands configure simulations, expected-occupancy evolutions,
collapses, exponent fits, reference curves, and the three preset
scaling-figure panels, writing CSV/JSON artifacts whose headers embed
the full resolved configuration (see artifacts module).

Configuration may come from a flat ``key=value`` file via ``--config``;
explicit flags override file values.  Exit codes: 0 success, 1 invalid
configuration, 2 runtime or I/O failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import analytics, artifacts, meanfield
from .model import ModelParams, ensemble_run, run
from .regimes import scaling_regime
from .rng import rng_config

PANELS = {
    # Times match the published scaling figure; the agent count is not
    # reported there, so the presets pin A=1000 for all three panels.
    "top-left": {"r": 0.25, "agents": 1000,
                 "checkpoints": (100_000, 200_000, 400_000, 800_000)},
    "top-right": {"r": 0.75, "agents": 1000,
                  "checkpoints": (100_000, 200_000, 400_000, 800_000)},
    "bottom": {"r": 0.5, "agents": 1000,
               "checkpoints": (10_000_000, 40_000_000, 160_000_000)},
}

FIT_TARGETS = ("tail", "stretched", "width")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


@dataclass
class ExperimentConfig:
    mode: str
    agents: int | None = None
    r: float | None = None
    seed: int = 0
    t_max: int | None = None
    checkpoints: tuple[int, ...] = ()
    replicas: int = 1
    k_max: int | None = None
    binning: str = "unit"
    tail_fraction: float = 0.01
    mad_window: tuple[float, float] = (-3.0, -1.0)
    x_window: tuple[float, float] | None = None
    what: str | None = None
    panel: str | None = None
    num: int = 512
    inputs: tuple[str, ...] = ()
    output: str = "."

    def as_dict(self) -> dict:
        d = asdict(self)
        d["checkpoints"] = list(self.checkpoints)
        d["inputs"] = list(self.inputs)
        d["mad_window"] = list(self.mad_window)
        d["x_window"] = None if self.x_window is None else list(self.x_window)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        d = {k: v for k, v in d.items() if k in known}
        d["checkpoints"] = tuple(d.get("checkpoints") or ())
        d["inputs"] = tuple(d.get("inputs") or ())
        d["mad_window"] = tuple(d.get("mad_window") or (-3.0, -1.0))
        if d.get("x_window") is not None:
            d["x_window"] = tuple(d["x_window"])
        return cls(**d)

    def model_params(self) -> ModelParams:
        if self.agents is None:
            raise ConfigError("agents: required for this mode")
        if self.r is None:
            raise ConfigError("r: required for this mode")
        try:
            return ModelParams(agents=self.agents, r=self.r, seed=self.seed)
        except ValueError as err:
            raise ConfigError(str(err)) from err


def _parse_step_count(text, name: str) -> int:
    """Integer step counts, accepting scientific notation like 1e5."""
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a number, got {text!r}") from None
    if not value.is_integer() or value < 0:
        raise ConfigError(f"{name}: expected a nonnegative integer, got {text!r}")
    return int(value)


def parse_checkpoints(text, name: str = "checkpoints") -> tuple[int, ...]:
    if text in (None, ""):
        return ()
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).split(",")
    cps = tuple(_parse_step_count(p, name) for p in parts)
    if any(b < a for a, b in zip(cps, cps[1:])):
        raise ConfigError(f"{name}: must be sorted, got {list(cps)}")
    return cps


def _parse_window(text, name: str) -> tuple[float, float]:
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).split(",")
    if len(parts) != 2:
        raise ConfigError(f"{name}: expected LO,HI, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"{name}: expected numbers, got {text!r}") from None
    if not lo < hi:
        raise ConfigError(f"{name}: needs LO < HI, got {text!r}")
    return lo, hi


def load_config_file(path) -> dict:
    """Flat key=value configuration; '#' starts a comment line."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"config: cannot read {path}: {err}") from err
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config: line {lineno} is not key=value: {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


_COERCERS = {
    "agents": lambda v: _parse_step_count(v, "agents"),
    "r": lambda v: float(v),
    "seed": lambda v: _parse_step_count(v, "seed"),
    "t_max": lambda v: _parse_step_count(v, "t_max"),
    "checkpoints": lambda v: parse_checkpoints(v),
    "replicas": lambda v: _parse_step_count(v, "replicas"),
    "k_max": lambda v: _parse_step_count(v, "k_max"),
    "binning": str,
    "tail_fraction": float,
    "mad_window": lambda v: _parse_window(v, "mad_window"),
    "x_window": lambda v: _parse_window(v, "x_window"),
    "what": str,
    "panel": str,
    "num": lambda v: _parse_step_count(v, "num"),
    "inputs": lambda v: tuple(v) if isinstance(v, (list, tuple)) else tuple(str(v).split(",")),
    "output": str,
}


def resolve_config(mode: str, file_values: dict, flag_values: dict) -> ExperimentConfig:
    merged = {}
    for source in (file_values, flag_values):
        for key, value in source.items():
            if value is None:
                continue
            if key not in _COERCERS:
                raise ConfigError(f"{key}: unknown configuration key")
            try:
                merged[key] = _COERCERS[key](value)
            except ConfigError:
                raise
            except (TypeError, ValueError) as err:
                raise ConfigError(f"{key}: {err}") from err
    config = ExperimentConfig(mode=mode, **merged)
    _validate(config)
    return config


def _validate(config: ExperimentConfig) -> None:
    if config.mode in ("simulate", "meanfield", "figure1"):
        if config.mode != "figure1" and config.t_max is None:
            raise ConfigError("t_max: required for this mode")
    if config.replicas < 1:
        raise ConfigError(f"replicas: must be >= 1, got {config.replicas}")
    if config.r is not None and not 0.0 <= config.r <= 1.0:
        raise ConfigError(f"r: must lie in [0, 1], got {config.r}")
    if config.t_max is not None and config.checkpoints:
        if config.checkpoints[-1] > config.t_max:
            raise ConfigError(
                f"checkpoints: last checkpoint {config.checkpoints[-1]} exceeds "
                f"t_max {config.t_max}"
            )
    if config.binning not in ("unit", "log"):
        raise ConfigError(f"binning: must be 'unit' or 'log', got {config.binning!r}")
    if config.mode == "fit" and config.what not in FIT_TARGETS:
        raise ConfigError(f"what: must be one of {FIT_TARGETS}, got {config.what!r}")
    if config.mode == "figure1" and config.panel not in PANELS:
        raise ConfigError(f"panel: must be one of {sorted(PANELS)}, got {config.panel!r}")
    if config.mode in ("collapse", "fit") and not config.inputs:
        raise ConfigError("inputs: at least one input file is required")


# ----------------------------------------------------------------------
# artifact emission
# ----------------------------------------------------------------------

def _out_dir(config: ExperimentConfig) -> Path:
    out = Path(config.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _artifact_config(config: ExperimentConfig) -> dict:
    d = config.as_dict()
    d["rng"] = rng_config(config.seed)
    return d


def _simulate(config: ExperimentConfig) -> list[Path]:
    params = config.model_params()
    cps = config.checkpoints or (config.t_max,)
    out = _out_dir(config)
    header = _artifact_config(config)
    written = []
    if config.replicas == 1:
        hists = run(params, config.t_max, cps)
        for hist in hists:
            written.append(artifacts.write_histogram_csv(
                out / f"hist_t{hist.t}.csv", hist.t, hist.counts, header))
    else:
        for ens in ensemble_run(params, config.t_max, cps, config.replicas):
            written.append(artifacts.write_histogram_csv(
                out / f"hist_t{ens.t}.csv", ens.t, ens.pooled, header))
    return written


def _meanfield(config: ExperimentConfig) -> list[Path]:
    params = config.model_params()
    cps = config.checkpoints or (config.t_max,)
    out = _out_dir(config)
    header = _artifact_config(config)
    written = []
    for occ in meanfield.evolve_expected(params, config.t_max, config.k_max, cps):
        written.append(artifacts.write_histogram_csv(
            out / f"hist_t{occ.t}.csv", occ.t, occ.counts, header))
    return written


def _pooled_inputs(config: ExperimentConfig):
    """Load input histograms; returns (file config, t, summed counts)."""
    base_config = None
    t_ref = None
    total = np.zeros(1)
    for path in config.inputs:
        file_config, t, counts = artifacts.read_histogram_csv(path)
        if base_config is None:
            base_config, t_ref = file_config, t
        elif t != t_ref:
            raise ConfigError(
                f"inputs: histograms recorded at different times ({t_ref} vs {t})")
        if counts.size > total.size:
            grown = np.zeros(counts.size)
            grown[: total.size] = total
            total = grown
        total[: counts.size] += counts
    return base_config, t_ref, total


def _input_params(config: ExperimentConfig, file_config: dict):
    agents = config.agents if config.agents is not None else file_config.get("agents")
    r = config.r if config.r is not None else file_config.get("r")
    if agents is None:
        raise ConfigError("agents: not given and absent from the input header")
    if r is None:
        raise ConfigError("r: not given and absent from the input header")
    return int(agents), float(r)


def _collapse(config: ExperimentConfig) -> list[Path]:
    file_config, t, counts = _pooled_inputs(config)
    agents, r = _input_params(config, file_config)
    regime = scaling_regime(r)
    sd = analytics.collapse(counts, t, agents, regime, binning=config.binning)
    out = _out_dir(config)
    header = _artifact_config(config)
    header["resolved"] = {"agents": agents, "r": r, "t": t}
    return [artifacts.write_scaled_csv(out / f"scaled_t{t}.csv", sd.x, sd.f, header)]


def _fit(config: ExperimentConfig) -> list[Path]:
    out = _out_dir(config)
    header = _artifact_config(config)
    results: dict = {}
    if config.what == "width":
        pairs = []
        for path in config.inputs:
            file_config, t, counts = artifacts.read_histogram_csv(path)
            pairs.append((t, analytics.robust_width(counts)))
        pairs.sort()
        fit = analytics.width_exponent_fit(pairs)
        results["width"] = fit.as_dict()
        results["width"]["points"] = [[t, w] for t, w in pairs]
    else:
        file_config, t, counts = _pooled_inputs(config)
        agents, r = _input_params(config, file_config)
        header["resolved"] = {"agents": agents, "r": r, "t": t}
        if config.what == "tail":
            samples = np.repeat(np.arange(counts.size), np.rint(counts).astype(np.int64))
            samples = samples[samples > 0].astype(float)
            fit = analytics.HillEstimator(tail_fraction=config.tail_fraction).fit(samples)
            results["tail"] = fit.result_.as_dict()
        else:
            regime = scaling_regime(r)
            sd = analytics.collapse(counts, t, agents, regime, binning=config.binning)
            est = analytics.StretchedExponentialFit(
                x_window=config.x_window, mad_window=config.mad_window).fit(sd)
            results["stretched"] = est.result_.as_dict()
    path = artifacts.write_fit_json(out / f"fit_{config.what}.json",
                                    header, rng_config(config.seed), results)
    return [path]


def emit_reference_curves(r: float, A: int, t: float, output,
                          num: int = 512, regime=None) -> Path:
    """Limiting-curve overlay in scaled coordinates.

    At and below the critical point this is the limiting Gaussian (with
    the logarithmic width convention exactly at the critical point); above
    it, the parametric scaled distribution on the default grid.
    """
    regime = regime or scaling_regime(r)
    config = {"mode": "reference", "r": r, "agents": int(A), "t": float(t), "num": int(num)}
    if r <= 0.5:
        coeff = A if r == 0.5 else A * (1.0 - 2.0 * r)
        sigma = 1.0 / np.sqrt(coeff)
        w = regime.width(t)
        x_lo = max(-(t / A) / w, -6.0 * sigma)
        x = np.linspace(x_lo, 6.0 * sigma, num)
        f = np.sqrt(coeff / (2.0 * np.pi)) * np.exp(-0.5 * coeff * x**2)
    else:
        curve = meanfield.parametric_scaling_curve(A, r, meanfield.default_t_grid(A, r, num))
        order = np.argsort(curve.x)
        x, f = curve.x[order], curve.f[order]
    return artifacts.write_scaled_csv(output, x, f, config)


def _reference(config: ExperimentConfig) -> list[Path]:
    if config.r is None:
        raise ConfigError("r: required for reference curves")
    if config.agents is None:
        raise ConfigError("agents: required for reference curves")
    if config.t_max is None:
        raise ConfigError("t_max: required for reference curves (sets the k >= 0 edge)")
    out = _out_dir(config)
    return [emit_reference_curves(config.r, config.agents, config.t_max,
                                  out / "reference.csv", num=config.num)]


def _figure1(config: ExperimentConfig) -> list[Path]:
    preset = PANELS[config.panel]
    agents = config.agents if config.agents is not None else preset["agents"]
    r = preset["r"]
    cps = config.checkpoints or preset["checkpoints"]
    t_max = config.t_max if config.t_max is not None else cps[-1]
    resolved = ExperimentConfig(
        mode="figure1", agents=agents, r=r, seed=config.seed, t_max=t_max,
        checkpoints=tuple(cps), replicas=config.replicas, binning=config.binning,
        panel=config.panel, num=config.num, output=config.output)
    params = resolved.model_params()
    out = _out_dir(resolved)
    header = _artifact_config(resolved)
    regime = scaling_regime(r)
    written = []
    ens = ensemble_run(params, t_max, cps, resolved.replicas)
    for e in ens:
        tag = f"{resolved.panel}_t{e.t}"
        written.append(artifacts.write_histogram_csv(
            out / f"{tag}_hist.csv", e.t, e.pooled, header))
        sd = analytics.collapse(e.pooled, e.t, agents, regime, binning=resolved.binning)
        written.append(artifacts.write_scaled_csv(
            out / f"{tag}_scaled.csv", sd.x, sd.f, header))
    written.append(emit_reference_curves(
        r, agents, t_max, out / f"{resolved.panel}_reference.csv", num=resolved.num,
        regime=regime))
    return written


_RUNNERS = {
    "simulate": _simulate,
    "meanfield": _meanfield,
    "collapse": _collapse,
    "fit": _fit,
    "reference": _reference,
    "figure1": _figure1,
}


def run_experiment(config: ExperimentConfig) -> list[Path]:
    """Execute one resolved experiment; returns the written artifact paths."""
    _validate(config)
    runner = _RUNNERS.get(config.mode)
    if runner is None:
        raise ConfigError(f"mode: unknown mode {config.mode!r}")
    return runner(config)


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rgrsim",
        description="Rich-get-richer disbursement experiments to CSV/JSON artifacts.",
    )
    sub = parser.add_subparsers(dest="mode", required=True)

    def common(p, *names):
        p.add_argument("--config", default=None, help="flat key=value config file")
        p.add_argument("--output", "-o", default=None, help="output directory")
        if "model" in names:
            p.add_argument("--agents", default=None, help="number of agents")
            p.add_argument("--r", default=None, help="preferential fraction in [0,1]")
            p.add_argument("--seed", default=None, help="64-bit RNG seed")
        if "time" in names:
            p.add_argument("--t-max", dest="t_max", default=None,
                           help="total steps (accepts 1e6 style)")
            p.add_argument("--checkpoints", default=None,
                           help="comma-separated step counts, e.g. 1e5,2e5")

    p = sub.add_parser("simulate", help="run the stochastic process")
    common(p, "model", "time")
    p.add_argument("--replicas", default=None, help="independent replicas (pooled output)")

    p = sub.add_parser("meanfield", help="evolve the expected occupancies")
    common(p, "model", "time")
    p.add_argument("--k-max", dest="k_max", default=None, help="occupancy truncation index")

    p = sub.add_parser("collapse", help="collapse histogram artifacts onto (x, f)")
    common(p, "model")
    p.add_argument("--input", dest="inputs", action="append", required=True,
                   help="histogram CSV (repeatable; pooled when repeated)")
    p.add_argument("--binning", default=None, help="'unit' or 'log'")

    p = sub.add_parser("fit", help="estimate exponents from histogram artifacts")
    common(p, "model")
    p.add_argument("--input", dest="inputs", action="append", required=True)
    p.add_argument("--what", default=None, help="tail | stretched | width")
    p.add_argument("--tail-fraction", dest="tail_fraction", default=None)
    p.add_argument("--mad-window", dest="mad_window", default=None,
                   help="stretched-fit window in robust widths, e.g. -3,-1")
    p.add_argument("--x-window", dest="x_window", default=None,
                   help="stretched-fit window in x, e.g. -0.02,-0.01")
    p.add_argument("--binning", default=None)

    p = sub.add_parser("reference", help="emit the limiting reference curve")
    common(p, "model", "time")
    p.add_argument("--num", default=None, help="number of curve points")

    p = sub.add_parser("figure1", help="reproduce a scaling-figure panel as data files")
    common(p, "model", "time")
    p.add_argument("--panel", default=None, help="top-left | top-right | bottom")
    p.add_argument("--replicas", default=None)
    p.add_argument("--num", default=None)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    values = vars(args)
    mode = values.pop("mode")
    config_path = values.pop("config", None)
    try:
        file_values = load_config_file(config_path) if config_path else {}
        config = resolve_config(mode, file_values, values)
        written = run_experiment(config)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001 - runtime/I-O boundary
        print(f"runtime error: {err}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
