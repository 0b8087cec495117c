"""Benchmark command line: seeded multi-run experiments and sweep exports.

Subcommands
-----------
``run``      execute one experiment per seed, writing per-seed convergence
             CSVs, a mean curve, final reconstruction PGMs and a summary.
``curves``   sweep the error response of randomly chosen SLM pixels of the
             initial back-projected state, one CSV per pixel.
``compare``  execute several experiments that differ only in algorithm and
             tabulate final-error and iterations-to-target ratios.

Configuration is a flat ``key=value`` text file ('#' comments allowed);
every key can also be given (or overridden) as ``--key value`` on the
command line.  CSV outputs start with a '#'-prefixed header echoing the
full configuration and seed, and contain only deterministic columns, so
rerunning an experiment reproduces them byte for byte.  Wall-clock timing
goes to the summary file only and is informational.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from . import __version__
from .field import DomainSpec
from .metrics import error_report
from .oracle import pixel_sweep, write_sweep_csv
from .search import new_run_state, run
from .slm import SlmSpec, make_rng
from .targets import (
    TargetField,
    build_target,
    embed_central_quadrant,
    load_image,
    resize_bilinear,
    save_image,
    symmetrize_point,
    synthetic_amplitude,
    synthetic_phase,
    write_atomic,
)


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


class InternalError(RuntimeError):
    """An internal invariant was violated while producing outputs."""


# key: (type, default, help)
CONFIG_KEYS = {
    "algorithm": (str, "ds", "optimiser: ds | sa | hps"),
    "modulation": (str, "phase", "SLM modulation: phase | amplitude"),
    "sensitivity": (str, "insensitive", "target sensitivity: sensitive | insensitive"),
    "domain": (str, "fraunhofer", "propagation: fraunhofer | fresnel"),
    "wavelength": (float, 633e-9, "illumination wavelength in metres (fresnel)"),
    "distance": (float, 0.1, "propagation distance in metres (fresnel)"),
    "pitch": (float, 8e-6, "SLM pixel pitch in metres (fresnel)"),
    "levels": (int, 256, "number of discrete SLM levels (>= 2)"),
    "nx": (int, 128, "SLM / replay grid size, axis 0"),
    "ny": (int, 128, "SLM / replay grid size, axis 1"),
    "amplitude_image": (str, "builtin", "PGM path for |T|, or 'builtin'"),
    "phase_image": (str, "auto", "PGM path for target phase, 'builtin', 'none' or 'auto'"),
    "symmetrize": (str, "auto", "point-symmetrise the target: auto | on | off"),
    "quadrant": (str, "auto", "embed target in central quadrant: auto | on | off"),
    "iterations": (int, 100_000, "optimisation steps per run (>= 1)"),
    "seeds": (str, "0,1,2,3,4", "comma-separated RNG seeds, one run each"),
    "checkpoint_every": (int, 1000, "iterations between convergence-log rows"),
    "resync_every": (int, 10_000, "iterations between full replay recomputations"),
    "init": (str, "backprojection", "initial hologram: backprojection | random"),
    "sa_t0": (str, "auto", "SA start temperature, or 'auto'"),
    "sa_decay": (str, "auto", "SA geometric decay per iteration, or 'auto'"),
    "workers": (int, 0, "parallel seed runs (0 = one per CPU, capped by seeds)"),
    "output_dir": (str, "out", "directory for CSVs, images and summaries"),
}

_TRISTATE = ("auto", "on", "off")


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: str = "ds"
    modulation: str = "phase"
    sensitivity: str = "insensitive"
    domain: str = "fraunhofer"
    wavelength: float = 633e-9
    distance: float = 0.1
    pitch: float = 8e-6
    levels: int = 256
    nx: int = 128
    ny: int = 128
    amplitude_image: str = "builtin"
    phase_image: str = "auto"
    symmetrize: str = "auto"
    quadrant: str = "auto"
    iterations: int = 100_000
    seeds: str = "0,1,2,3,4"
    checkpoint_every: int = 1000
    resync_every: int = 10_000
    init: str = "backprojection"
    sa_t0: str = "auto"
    sa_decay: str = "auto"
    workers: int = 0
    output_dir: str = "out"

    # -- validation and derived views ------------------------------------

    def __post_init__(self):
        if self.algorithm not in ("ds", "sa", "hps"):
            raise ConfigError(f"algorithm must be ds|sa|hps, got {self.algorithm!r}")
        if self.modulation not in ("phase", "amplitude"):
            raise ConfigError(f"modulation must be phase|amplitude, got {self.modulation!r}")
        if self.sensitivity not in ("sensitive", "insensitive"):
            raise ConfigError(
                f"sensitivity must be sensitive|insensitive, got {self.sensitivity!r}")
        if self.domain not in ("fraunhofer", "fresnel"):
            raise ConfigError(f"domain must be fraunhofer|fresnel, got {self.domain!r}")
        if self.levels < 2:
            raise ConfigError("levels must be >= 2")
        if self.nx < 1 or self.ny < 1:
            raise ConfigError("nx and ny must be positive")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.checkpoint_every < 1 or self.resync_every < 1:
            raise ConfigError("checkpoint_every and resync_every must be >= 1")
        if self.symmetrize not in _TRISTATE or self.quadrant not in _TRISTATE:
            raise ConfigError("symmetrize and quadrant must be auto|on|off")
        if self.init not in ("backprojection", "random"):
            raise ConfigError(f"init must be backprojection|random, got {self.init!r}")
        if self.workers < 0:
            raise ConfigError("workers must be >= 0")
        self.seed_list()  # validates
        for key in ("sa_t0", "sa_decay"):
            v = getattr(self, key)
            if v != "auto":
                try:
                    x = float(v)
                except ValueError:
                    raise ConfigError(f"{key} must be 'auto' or a number, got {v!r}") from None
                if not x > 0:
                    raise ConfigError(f"{key} must be positive")
        if self.domain == "fresnel":
            DomainSpec.fresnel(self.wavelength, self.distance, self.pitch)

    @classmethod
    def from_mapping(cls, mapping) -> "ExperimentConfig":
        kwargs = {}
        for key, value in mapping.items():
            if key not in CONFIG_KEYS:
                raise ConfigError(f"unknown configuration key {key!r}")
            typ = CONFIG_KEYS[key][0]
            try:
                kwargs[key] = typ(value)
            except ValueError:
                raise ConfigError(f"bad value for {key}: {value!r}") from None
        return cls(**kwargs)

    def seed_list(self) -> list[int]:
        try:
            seeds = [int(s) for s in str(self.seeds).split(",") if s.strip() != ""]
        except ValueError:
            raise ConfigError(f"seeds must be comma-separated integers, got {self.seeds!r}") from None
        if not seeds:
            raise ConfigError("at least one seed is required")
        return seeds

    @property
    def phase_sensitive(self) -> bool:
        return self.sensitivity == "sensitive"

    def slm_spec(self) -> SlmSpec:
        return SlmSpec(self.modulation, self.levels, self.nx, self.ny)

    def domain_spec(self) -> DomainSpec:
        if self.domain == "fresnel":
            return DomainSpec.fresnel(self.wavelength, self.distance, self.pitch)
        return DomainSpec.fraunhofer()

    def hps_variant(self) -> str:
        mod = "pm" if self.modulation == "phase" else "am"
        sens = "ps" if self.phase_sensitive else "pi"
        return f"{mod}_{sens}"

    def echo_lines(self) -> list[str]:
        return [f"{f.name}={getattr(self, f.name)}" for f in fields(self)]


def parse_config_file(path) -> dict:
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
                key, value = line.split("=", 1)
                out[key.strip()] = value.strip()
    except OSError as exc:
        raise OSError(f"cannot read config {path!r}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# Target preparation (the benchmark protocol)

def prepare_target(cfg: ExperimentConfig) -> TargetField:
    """Load/synthesise images and apply the preparation protocol.

    Symmetrisation defaults to on for amplitude SLMs; quadrant embedding
    defaults to on for phase-sensitive targets.  Images are resampled to
    the replay plane before either step.
    """
    nx, ny = cfg.nx, cfg.ny
    if cfg.amplitude_image == "builtin":
        amp = synthetic_amplitude(nx, ny)
    else:
        amp = resize_bilinear(load_image(cfg.amplitude_image), nx, ny)

    phase_key = cfg.phase_image
    if phase_key == "auto":
        phase_key = "builtin" if cfg.phase_sensitive else "none"
    if phase_key == "none":
        ph = None
    elif phase_key == "builtin":
        ph = synthetic_phase(nx, ny)
    else:
        ph = resize_bilinear(load_image(phase_key), nx, ny)

    do_sym = cfg.symmetrize == "on" or (
        cfg.symmetrize == "auto" and cfg.modulation == "amplitude")
    do_quad = cfg.quadrant == "on" or (
        cfg.quadrant == "auto" and cfg.phase_sensitive)

    if do_sym:
        amp = symmetrize_point(amp)
        if ph is not None:
            ph = symmetrize_point(ph)
    if do_quad:
        amp = embed_central_quadrant(resize_bilinear(amp, nx // 2, ny // 2), nx, ny)
        if ph is not None:
            ph = embed_central_quadrant(resize_bilinear(ph, nx // 2, ny // 2), nx, ny)

    try:
        return build_target(amp, ph, cfg.slm_spec(), cfg.phase_sensitive,
                            cfg.domain_spec())
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Experiment execution

@dataclass
class SeedResult:
    seed: int
    iterations: list
    mse: list
    accepted: list
    final_mse: float
    final_ssim: float
    replay_magnitude: np.ndarray
    replay_phase: np.ndarray | None
    mean_step_seconds: float
    max_resync_drift: float


def _single_run(cfg: ExperimentConfig, seed: int) -> SeedResult:
    spec = cfg.slm_spec()
    domain = cfg.domain_spec()
    target = prepare_target(cfg)
    state = new_run_state(spec, domain, target, make_rng(seed), init=cfg.init)
    sa_t0 = None if cfg.sa_t0 == "auto" else float(cfg.sa_t0)
    sa_decay = None if cfg.sa_decay == "auto" else float(cfg.sa_decay)
    log = run(
        cfg.algorithm, state, cfg.iterations,
        checkpoint_every=cfg.checkpoint_every,
        resync_every=cfg.resync_every,
        variant=cfg.hps_variant() if cfg.algorithm == "hps" else None,
        sa_t0=sa_t0, sa_decay=sa_decay,
    )
    report = error_report(target.field, state.R, cfg.phase_sensitive)
    return SeedResult(
        seed=seed,
        iterations=log.iterations,
        mse=log.mse,
        accepted=log.accepted,
        final_mse=log.mse[-1],
        final_ssim=report.ssim,
        replay_magnitude=np.abs(state.R),
        replay_phase=np.angle(state.R) if cfg.phase_sensitive else None,
        mean_step_seconds=log.elapsed[-1] / cfg.iterations,
        max_resync_drift=log.max_resync_drift,
    )


def execute_experiment(cfg: ExperimentConfig) -> list[SeedResult]:
    """Run every seed (in parallel where allowed) and return their results."""
    seeds = cfg.seed_list()
    workers = cfg.workers if cfg.workers > 0 else (os.cpu_count() or 1)
    workers = min(workers, len(seeds))
    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_single_run, [cfg] * len(seeds), seeds))
    else:
        results = [_single_run(cfg, s) for s in seeds]
    return results


# ---------------------------------------------------------------------------
# Output files

def _write_text_atomic(path, text: str) -> None:
    write_atomic(path, text.encode())


def _csv_text(header_lines, colnames, rows) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(colnames)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def write_seed_csv(path, cfg: ExperimentConfig, res: SeedResult) -> None:
    header = cfg.echo_lines() + [f"seed={res.seed}"]
    rows = [
        (it, repr(m), acc)
        for it, m, acc in zip(res.iterations, res.mse, res.accepted)
    ]
    _write_text_atomic(path, _csv_text(header, ["iteration", "mse", "accepted"], rows))


def write_mean_csv(path, cfg: ExperimentConfig, results: list[SeedResult]) -> None:
    grids = {tuple(r.iterations) for r in results}
    if len(grids) != 1:
        raise InternalError("seed runs produced different checkpoint grids")
    mean_mse = np.mean([r.mse for r in results], axis=0)
    mean_acc = np.mean([r.accepted for r in results], axis=0)
    header = cfg.echo_lines() + [f"seeds={cfg.seeds}", "curve=mean"]
    rows = [
        (it, repr(float(m)), repr(float(a)))
        for it, m, a in zip(results[0].iterations, mean_mse, mean_acc)
    ]
    _write_text_atomic(path, _csv_text(header, ["iteration", "mse", "accepted"], rows))


def write_summary(path, cfg: ExperimentConfig, results: list[SeedResult]) -> None:
    lines = list(cfg.echo_lines())
    lines.append(f"holosearch_version={__version__}")
    for r in results:
        lines.append(f"final_mse_seed{r.seed}={r.final_mse!r}")
        lines.append(f"ssim_seed{r.seed}={r.final_ssim!r}")
    mean_mse = float(np.mean([r.final_mse for r in results]))
    mean_ssim = float(np.mean([r.final_ssim for r in results]))
    mean_step = float(np.mean([r.mean_step_seconds for r in results]))
    lines.append(f"mean_final_mse={mean_mse!r}")
    lines.append(f"mean_ssim={mean_ssim!r}")
    lines.append(f"mean_step_seconds={mean_step!r}")
    lines.append(f"max_resync_drift={max(r.max_resync_drift for r in results)!r}")
    _write_text_atomic(path, "".join(f"{s}\n" for s in lines))


def _save_norm_pgm(path, img: np.ndarray) -> None:
    peak = float(img.max())
    save_image(path, img / peak if peak > 0 else img, maxval=65535)


def write_reconstructions(outdir: str, results: list[SeedResult],
                          prefix: str = "") -> None:
    for r in results:
        _save_norm_pgm(os.path.join(outdir, f"{prefix}recon_magnitude_seed{r.seed}.pgm"),
                       r.replay_magnitude)
        if r.replay_phase is not None:
            ph = (r.replay_phase + np.pi) / (2.0 * np.pi)
            save_image(os.path.join(outdir, f"{prefix}recon_phase_seed{r.seed}.pgm"),
                       ph, maxval=65535)


def run_and_write(cfg: ExperimentConfig, tag: str = "") -> list[SeedResult]:
    outdir = cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    results = execute_experiment(cfg)
    prefix = f"{tag}_" if tag else ""
    for r in results:
        write_seed_csv(os.path.join(outdir, f"{prefix}convergence_seed{r.seed}.csv"),
                       cfg, r)
    write_mean_csv(os.path.join(outdir, f"{prefix}convergence_mean.csv"), cfg, results)
    write_summary(os.path.join(outdir, f"{prefix}summary.txt"), cfg, results)
    write_reconstructions(outdir, results, prefix)
    return results


# ---------------------------------------------------------------------------
# Subcommands

def cmd_run(cfg: ExperimentConfig) -> int:
    results = run_and_write(cfg)
    mean_mse = float(np.mean([r.final_mse for r in results]))
    print(f"{cfg.algorithm}: {len(results)} run(s), mean final mse {mean_mse:.6g} "
          f"-> {cfg.output_dir}/")
    return 0


def cmd_curves(cfg: ExperimentConfig, n_pixels: int, n_samples: int) -> int:
    if n_pixels < 1 or n_samples < 2:
        raise ConfigError("curves needs n_pixels >= 1 and n_samples >= 2")
    os.makedirs(cfg.output_dir, exist_ok=True)
    seed = cfg.seed_list()[0]
    target = prepare_target(cfg)
    state = new_run_state(cfg.slm_spec(), cfg.domain_spec(), target,
                          make_rng(seed), init=cfg.init)
    rng = make_rng(seed + 1)
    header = cfg.echo_lines() + [f"seed={seed}"]
    for i in range(n_pixels):
        x = int(rng.integers(cfg.nx))
        y = int(rng.integers(cfg.ny))
        curve = pixel_sweep(state, x, y, n_samples)
        write_sweep_csv(curve, os.path.join(cfg.output_dir, f"curve_pixel{i:02d}.csv"),
                        header_lines=header + [f"pixel=({x},{y})"])
    print(f"wrote {n_pixels} sweep CSV(s) -> {cfg.output_dir}/")
    return 0


def _comparable(a: ExperimentConfig, b: ExperimentConfig) -> bool:
    skip = {"algorithm", "sa_t0", "sa_decay", "output_dir", "workers"}
    for f in fields(ExperimentConfig):
        if f.name in skip:
            continue
        if getattr(a, f.name) != getattr(b, f.name):
            return False
    return True


def _first_crossing(iterations, mse, threshold: float):
    for it, m in zip(iterations, mse):
        if m <= threshold:
            return it
    return None


def cmd_compare(configs: list[ExperimentConfig]) -> int:
    if len(configs) < 2:
        raise ConfigError("compare needs at least two configs")
    base = configs[0]
    for other in configs[1:]:
        if not _comparable(base, other):
            raise ConfigError(
                "compare requires configs that differ only in algorithm "
                "(and SA schedule)")

    outdir = base.output_dir
    os.makedirs(outdir, exist_ok=True)
    curves = []
    for i, cfg in enumerate(configs):
        cfg = replace(cfg, output_dir=outdir)
        results = run_and_write(cfg, tag=f"{i}_{cfg.algorithm}")
        mean_mse = np.mean([r.mse for r in results], axis=0)
        curves.append((cfg, results[0].iterations, mean_mse))

    target_error = float(curves[0][2][-1])  # baseline's final mean error
    base_cross = _first_crossing(curves[0][1], curves[0][2], target_error)
    rows = []
    for cfg, its, mse in curves:
        final = float(mse[-1])
        cross = _first_crossing(its, mse, target_error)
        ratio_mse = final / target_error if target_error > 0 else float("nan")
        if cross is None:
            ratio_it = "not_reached"
        elif base_cross is None or base_cross == 0:
            # degenerate baseline (flat curve): only the identity is well defined
            ratio_it = repr(1.0) if cross == base_cross else "not_reached"
        else:
            ratio_it = repr(cross / base_cross)
        rows.append([
            cfg.algorithm, repr(final), repr(ratio_mse),
            cross if cross is not None else "not_reached", ratio_it,
        ])
    header = base.echo_lines() + [f"target_error={target_error!r}",
                                  "baseline=" + base.algorithm]
    _write_text_atomic(
        os.path.join(outdir, "compare.csv"),
        _csv_text(header,
                  ["algorithm", "final_mse", "final_mse_ratio",
                   "iterations_to_target", "iterations_ratio"],
                  rows))
    for row in rows:
        print(f"{row[0]}: final_mse={row[1]} ratio={row[2]} "
              f"iters_to_target={row[3]} iters_ratio={row[4]}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing

def _add_config_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", action="append", default=[],
                   help="key=value config file (repeatable; later files win)")
    for key, (typ, default, help_text) in CONFIG_KEYS.items():
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None,
                       metavar=typ.__name__.upper(),
                       help=f"{help_text} (default: {default})")


def _config_from_args(args) -> ExperimentConfig:
    mapping = {}
    for path in args.config:
        mapping.update(parse_config_file(path))
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            mapping[key] = v
    return ExperimentConfig.from_mapping(mapping)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holosearch",
        description="Benchmark search-based hologram generation "
                    "(direct search, simulated annealing, predictive search).",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment per seed")
    _add_config_options(p_run)

    p_curves = sub.add_parser("curves", help="per-pixel error sweeps of the initial state")
    _add_config_options(p_curves)
    p_curves.add_argument("--pixels", type=int, default=10,
                          help="number of random pixels to sweep (default: 10)")
    p_curves.add_argument("--samples", type=int, default=256,
                          help="sweep samples per pixel (default: 256)")

    p_cmp = sub.add_parser("compare", help="run and compare algorithm variants")
    p_cmp.add_argument("configs", nargs="+",
                       help="two or more key=value config files differing only in algorithm")
    _add_config_options(p_cmp)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(_config_from_args(args))
        if args.command == "curves":
            return cmd_curves(_config_from_args(args), args.pixels, args.samples)
        if args.command == "compare":
            cfgs = []
            for path in args.configs:
                mapping = parse_config_file(path)
                for key in CONFIG_KEYS:
                    v = getattr(args, key, None)
                    if v is not None:
                        mapping[key] = v
                cfgs.append(ExperimentConfig.from_mapping(mapping))
            return cmd_compare(cfgs)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
