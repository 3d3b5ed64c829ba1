"""Command line front end.

Three modes:

``dehaze``      dehaze each input image, optionally writing diagnostics
``synthesize``  add synthetic haze to clean inputs (or to generated scenes)
``evaluate``    dehaze hazy inputs and score them against ground truth

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dehaze import DehazeResult, SolverConfig, dehaze_image
from .exceptions import ConfigError, DehazeError, NumericalError
from .images import ImageIOError, quantize, read_image, write_image
from .synth import DEPTH_KINDS, SynthSpec, make_depth, mse, structured_scene, synthesize_haze

log = logging.getLogger("tvdehaze")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3
MODES = ("dehaze", "synthesize", "evaluate")
CHANNEL_NAMES = "RGB"


@dataclass
class RunManifest:
    inputs: list[Path]
    output_dir: Path
    mode: str = "dehaze"
    config: SolverConfig = field(default_factory=SolverConfig)
    synth: SynthSpec | None = None
    truths: list[Path] = field(default_factory=list)
    emit_transmission: bool = False
    emit_fields: bool = False
    emit_energy: bool = False
    patterns: int = 0
    pattern_size: tuple[int, int] = (128, 128)
    seed: int = 0
    jobs: int = 1

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.mode == "evaluate":
            if not self.truths:
                raise ConfigError("evaluate mode needs ground-truth images (--truth)")
            if len(self.truths) != len(self.inputs):
                raise ConfigError(
                    f"{len(self.inputs)} hazy inputs but {len(self.truths)} ground truths"
                )
        if self.mode == "synthesize" and self.synth is None:
            raise ConfigError("synthesize mode needs a synthesis spec")
        if not self.inputs and not (self.mode == "synthesize" and self.patterns > 0):
            raise ConfigError("no input images given")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")


def _output_suffix(src: Path, gray: bool) -> str:
    suffix = src.suffix.lower()
    if suffix in (".ppm", ".pgm", ".pnm"):
        return ".pgm" if gray else ".ppm"
    return ".png"


def _field_levels(fld: np.ndarray, i_min: float) -> np.ndarray:
    # fields live in [i_min, 0]; 255 encodes 0 and 0 encodes i_min
    if i_min >= 0:
        return np.full(fld.shape, 255.0)
    return 255.0 * (1.0 - fld / i_min)


def write_dehaze_outputs(
    src: Path, result: DehazeResult, out_dir: Path, manifest: RunManifest
) -> Path:
    gray = len(result.channels) == 1
    suffix = _output_suffix(src, gray)
    stem = src.stem
    target = out_dir / f"{stem}_dehazed{suffix}"
    write_image(target, result.radiance)

    if manifest.emit_transmission:
        write_image(out_dir / f"{stem}_transmission{suffix}", 255.0 * result.transmission)

    if manifest.emit_fields:
        meta = {"encoding": "level = round(255 * (1 - field / i_min))", "channels": []}
        eta_levels, gamma_levels = [], []
        for name, ch in zip(CHANNEL_NAMES if not gray else "Y", result.channels):
            i_min = float(ch.log_image.min())
            eta_levels.append(_field_levels(ch.eta, i_min))
            gamma_levels.append(_field_levels(ch.gamma_field, i_min))
            meta["channels"].append(
                {"channel": name, "i_min": i_min, "atmospheric_light": ch.atmospheric_light}
            )
        stack = (lambda a: a[0]) if gray else (lambda a: np.stack(a, axis=-1))
        write_image(out_dir / f"{stem}_eta{suffix}", stack(eta_levels))
        write_image(out_dir / f"{stem}_gamma{suffix}", stack(gamma_levels))
        (out_dir / f"{stem}_fields.json").write_text(json.dumps(meta, indent=2, sort_keys=True))

    if manifest.emit_energy:
        names = ["" if gray else f"_{n}" for n in CHANNEL_NAMES[: len(result.channels)]]
        for name, ch in zip(names, result.channels):
            with open(out_dir / f"{stem}_energy{name}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["iteration", "E"])
                for k, e in enumerate(ch.energy_trace):
                    w.writerow([k, repr(e)])
    return target


def _map_jobs(fn, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _guard(fn):
    """Wrap a per-file task so that it returns ``(exit_code, value)``."""

    def inner(item):
        try:
            return EXIT_OK, fn(item)
        except ImageIOError as exc:
            log.error("%s", exc)
            return EXIT_IO, None
        except NumericalError as exc:
            log.error("%s: %s", item, exc)
            return EXIT_NUMERIC, None
        except (ConfigError, ValueError) as exc:
            log.error("%s: %s", item, exc)
            return EXIT_CONFIG, None

    return inner


def _run_dehaze(m: RunManifest) -> int:
    def task(src):
        result = dehaze_image(read_image(src), m.config)
        out = write_dehaze_outputs(src, result, m.output_dir, m)
        log.info("%s -> %s (%d outer iterations)", src, out, result.outer_iterations)

    return max(code for code, _ in _map_jobs(_guard(task), m.inputs, m.jobs))


def _run_synthesize(m: RunManifest) -> int:
    spec = m.synth

    def emit(stem, clean, suffix):
        depth = make_depth(clean.shape[0], clean.shape[1], spec)
        hazy, t = synthesize_haze(clean, depth, spec)
        write_image(m.output_dir / f"{stem}_hazy{suffix}", hazy)
        t_suffix = ".png" if suffix == ".png" else ".pgm"
        write_image(m.output_dir / f"{stem}_t{t_suffix}", 255.0 * t)

    def task(src):
        clean = read_image(src)
        emit(src.stem, clean, _output_suffix(src, clean.ndim == 2))

    codes = [code for code, _ in _map_jobs(_guard(task), m.inputs, m.jobs)]
    rng = np.random.default_rng(m.seed)
    rows, cols = m.pattern_size
    for k in range(m.patterns):
        clean = quantize(structured_scene(rows, cols, rng))
        stem = f"scene_{k:03d}"
        write_image(m.output_dir / f"{stem}_clean.png", clean)
        emit(stem, clean.astype(np.float64), ".png")
    meta = {"synth": asdict(spec), "seed": m.seed, "patterns": m.patterns}
    (m.output_dir / "synth.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return max(codes, default=EXIT_OK)


def _run_evaluate(m: RunManifest) -> int:
    def task(pair):
        hazy_path, truth_path = pair
        hazy = read_image(hazy_path)
        truth = read_image(truth_path)
        if hazy.shape != truth.shape:
            raise ImageIOError(f"{hazy_path} and {truth_path} differ in shape")
        result = dehaze_image(hazy, m.config)
        write_dehaze_outputs(hazy_path, result, m.output_dir, m)
        dehazed = quantize(result.radiance).astype(np.float64)
        return {
            "image": hazy_path.name,
            "mse_hazy": mse(hazy, truth),
            "mse_dehazed": mse(dehazed, truth),
            "iterations": result.outer_iterations,
            "energy_final": sum(tr[-1] for tr in result.energy_traces),
        }

    outcomes = _map_jobs(_guard(task), list(zip(m.inputs, m.truths)), m.jobs)
    rows = [row for _, row in outcomes if row is not None]
    write_metrics(rows, m.output_dir)
    return max(code for code, _ in outcomes)


METRIC_COLUMNS = ("image", "mse_hazy", "mse_dehazed", "iterations", "energy_final")


def average_row(rows: list[dict]) -> dict:
    avg = {"image": "Average"}
    for col in METRIC_COLUMNS[1:]:
        avg[col] = float(np.mean([r[col] for r in rows])) if rows else float("nan")
    return avg


def write_metrics(rows: list[dict], out_dir: Path) -> None:
    """Write ``metrics.csv`` (per-image rows plus an Average row) and ``metrics.txt``."""
    table = rows + [average_row(rows)]
    with open(out_dir / "metrics.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=METRIC_COLUMNS)
        w.writeheader()
        for r in table:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})

    lines = [f"{'image':<32} {'MSE hazy':>12} {'MSE dehazed':>12} {'iters':>6}"]
    for r in table:
        lines.append(
            f"{r['image']:<32} {r['mse_hazy']:>12.4f} {r['mse_dehazed']:>12.4f} {r['iterations']:>6g}"
        )
    better = sum(r["mse_dehazed"] < r["mse_hazy"] for r in rows)
    lines.append(f"\ndehazed result closer to ground truth on {better} of {len(rows)} images")
    (out_dir / "metrics.txt").write_text("\n".join(lines) + "\n")


def run(manifest: RunManifest) -> int:
    """Execute a manifest and return the process exit code."""
    try:
        manifest.validate()
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    try:
        manifest.output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("cannot create %s: %s", manifest.output_dir, exc)
        return EXIT_IO
    handler = {"dehaze": _run_dehaze, "synthesize": _run_synthesize, "evaluate": _run_evaluate}
    try:
        return handler[manifest.mode](manifest)
    except ImageIOError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except DehazeError as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC


def _atmospheric(value: str) -> float | None:
    if value.lower() == "auto":
        return None
    return float(value)


def build_parser() -> argparse.ArgumentParser:
    d = SolverConfig()
    ap = argparse.ArgumentParser(
        prog="tvdehaze",
        description="Single image dehazing with depth and reflection total variation.",
    )
    ap.add_argument("inputs", nargs="*", type=Path, help="input images (PNG, PPM, PGM)")
    ap.add_argument("-o", "--output-dir", type=Path, default=Path("out"))
    ap.add_argument("--mode", choices=MODES, default="dehaze")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    ap.add_argument("--jobs", type=int, default=1, help="images processed concurrently")

    s = ap.add_argument_group("solver")
    s.add_argument("--alpha", type=float, default=d.alpha, help="TV weight of the depth field")
    s.add_argument("--beta", type=float, default=d.beta, help="TV weight of the reflection field")
    s.add_argument("--lambda", dest="lam", type=float, default=0.0, help=argparse.SUPPRESS)
    s.add_argument("--t0", type=float, default=d.t0, help="transmission floor")
    s.add_argument("--gamma-correction", type=float, default=d.gamma_correction)
    s.add_argument("--n1", type=int, default=d.n1, help="max outer iterations")
    s.add_argument("--n2", type=int, default=d.n2, help="max FGP iterations")
    s.add_argument("--eps", type=float, default=d.eps, help="outer relative-change tolerance")
    s.add_argument("--dual-tol", type=float, default=d.dual_tol)
    s.add_argument(
        "--A", dest="a", type=_atmospheric, default=d.a_override,
        help="atmospheric light, or 'auto' for max(I) + c0 per channel (default 255)",
    )
    s.add_argument("--c0", type=float, default=d.c0)
    s.add_argument("--unconstrained", action="store_true", help="drop the box constraints (diagnostic)")
    s.add_argument("--no-monotone", action="store_true", help="accept every inner solve")

    e = ap.add_argument_group("diagnostics")
    e.add_argument("--emit-transmission", action="store_true")
    e.add_argument("--emit-fields", action="store_true", help="write eta and gamma maps")
    e.add_argument("--emit-energy", action="store_true")

    y = ap.add_argument_group("synthesis / evaluation")
    y.add_argument("--depth-kind", choices=DEPTH_KINDS, default="linear-vertical")
    y.add_argument("--beta-scatter", type=float, default=1.0)
    y.add_argument("--depth-min", type=float, default=-np.log(0.9))
    y.add_argument("--depth-max", type=float, default=-np.log(0.3))
    y.add_argument("--haze-A", dest="haze_a", type=float, default=255.0)
    y.add_argument("--patterns", type=int, default=0, help="generate N random scenes")
    y.add_argument("--size", type=int, nargs=2, default=(128, 128), metavar=("ROWS", "COLS"))
    y.add_argument("--seed", type=int, default=0)
    y.add_argument("--truth", type=Path, nargs="+", default=[], help="ground truth for evaluate")
    return ap


def manifest_from_args(args: argparse.Namespace) -> RunManifest:
    config = SolverConfig(
        alpha=args.alpha, beta=args.beta, lam=args.lam, n1=args.n1, n2=args.n2,
        eps=args.eps, t0=args.t0, gamma_correction=args.gamma_correction,
        c0=args.c0, a_override=args.a, dual_tol=args.dual_tol,
        constrained=not args.unconstrained, monotone=not args.no_monotone,
    )
    synth = None
    if args.mode == "synthesize":
        synth = SynthSpec(args.depth_kind, args.beta_scatter, args.depth_min, args.depth_max, args.haze_a)
    return RunManifest(
        inputs=list(args.inputs), output_dir=args.output_dir, mode=args.mode,
        config=config, synth=synth, truths=list(args.truth),
        emit_transmission=args.emit_transmission, emit_fields=args.emit_fields,
        emit_energy=args.emit_energy, patterns=args.patterns,
        pattern_size=tuple(args.size), seed=args.seed, jobs=args.jobs,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s: %(message)s",
    )
    try:
        manifest = manifest_from_args(args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    return run(manifest)


if __name__ == "__main__":
    sys.exit(main())
