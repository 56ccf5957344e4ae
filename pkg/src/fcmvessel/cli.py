"""
Command-line interface::

    fcmvessel segment IMAGE -o MASK [--overlay PNG] [--figure PNG]
    fcmvessel evaluate MANIFEST --report CSV [--table TXT] [--figures DIR]
    fcmvessel phantom --seed N --image PNG --truth PNG

Pipeline settings come from built-in defaults, then a ``key = value``
config file (``--config`` or ``$FCMVESSEL_CONFIG``), then command-line flags.

Exit codes: 0 success, 1 I/O or configuration error, 2 pipeline error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import imageio
from .fcm import FcmConfig
from .preprocess import ClaheParams
from .segmentation import PipelineConfig

log = logging.getLogger("fcmvessel")

CONFIG_ENV = "FCMVESSEL_CONFIG"
EXIT_OK, EXIT_IO, EXIT_PIPELINE = 0, 1, 2

# config key -> (type, default)
SETTINGS = {
    "tile_cols": (int, 8),
    "tile_rows": (int, 8),
    "clip_limit": (float, 4.0),
    "bins": (int, 256),
    "median_window": (int, 75),
    "clusters": (int, 2),
    "fuzzifier": (float, 2.0),
    "epsilon": (float, 1e-5),
    "max_iter": (int, 100),
    "seed": (int, 0),
    "min_component_px": (int, 30),
    "fov": (str, None),
}


class ConfigError(Exception):
    pass


def read_config(path) -> dict:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in SETTINGS:
            raise ConfigError(f"{path}:{lineno}: unrecognised setting {raw.strip()!r}")
        kind = SETTINGS[key][0]
        try:
            values[key] = kind(value.strip())
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value.strip()!r}") from exc
    return values


def resolve_settings(args) -> dict:
    settings = {k: default for k, (_, default) in SETTINGS.items()}
    config_path = args.config or os.environ.get(CONFIG_ENV)
    if config_path:
        settings.update(read_config(config_path))
    for key in SETTINGS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def build_pipeline_config(settings: dict) -> PipelineConfig:
    try:
        fov = imageio.load_mask(settings["fov"]) if settings.get("fov") else None
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load FOV mask: {exc}") from exc
    try:
        return PipelineConfig(
            clahe=ClaheParams(tile_cols=settings["tile_cols"], tile_rows=settings["tile_rows"],
                              clip_limit=settings["clip_limit"], bins=settings["bins"]),
            median_window=settings["median_window"],
            fcm=FcmConfig(c=settings["clusters"], m=settings["fuzzifier"],
                          epsilon=settings["epsilon"], max_iter=settings["max_iter"],
                          seed=settings["seed"]),
            min_component_px=settings["min_component_px"],
            fov_mask=fov,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def read_manifest(path) -> list:
    """``image, truth[, fov]`` per line; relative paths are taken from the manifest's folder."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) not in (2, 3) or not all(parts[:2]):
            raise ConfigError(f"{path}:{lineno}: expected 'image, truth[, fov]'")
        entries.append(tuple(str(path.parent / p) if p else "" for p in parts))
    return entries


def _pipeline_options(parser):
    g = parser.add_argument_group("pipeline settings (override the config file)")
    g.add_argument("--config", help=f"key=value config file (default: ${CONFIG_ENV})")
    g.add_argument("--tile-cols", dest="tile_cols", type=int)
    g.add_argument("--tile-rows", dest="tile_rows", type=int)
    g.add_argument("--clip-limit", dest="clip_limit", type=float)
    g.add_argument("--bins", type=int)
    g.add_argument("--median-window", dest="median_window", type=int)
    g.add_argument("--clusters", type=int, help="FCM cluster count")
    g.add_argument("--fuzzifier", type=float, help="FCM weighting exponent m")
    g.add_argument("--epsilon", type=float, help="objective improvement threshold")
    g.add_argument("--max-iter", dest="max_iter", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--min-component-px", dest="min_component_px", type=int)
    g.add_argument("--fov", help="field-of-view mask applied to every image")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fcmvessel",
                                     description="FCM retinal vessel segmentation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment one fundus image")
    p.add_argument("image")
    p.add_argument("-o", "--output", required=True, help="output mask (PNG)")
    p.add_argument("--overlay", help="write the image with vessels painted red")
    p.add_argument("--figure", help="write a diagnostic figure")
    _pipeline_options(p)

    p = sub.add_parser("evaluate", help="segment and score a manifest of images")
    p.add_argument("manifest")
    p.add_argument("--report", required=True, help="comma-separated report file")
    p.add_argument("--table", help="text table (default: report path with .txt)")
    p.add_argument("--figures", help="folder for per-image and summary figures")
    p.add_argument("--workers", type=int, default=1)
    _pipeline_options(p)

    p = sub.add_parser("phantom", help="write a synthetic image and its vessel mask")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--image", required=True)
    p.add_argument("--truth", required=True)
    return parser


def cmd_segment(args) -> int:
    from .segmentation import segment_vessels, shade_corrected

    cfg = build_pipeline_config(resolve_settings(args))
    img = imageio.load_rgb(args.image)
    try:
        mask, result = segment_vessels(img, cfg)
    except (ValueError, ArithmeticError) as exc:
        print(f"error: segmentation of {args.image} failed: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    imageio.save_mask(mask, args.output)
    if args.overlay:
        imageio.save_overlay(img, mask, args.overlay)
    if args.figure:
        from .plotting import save_segmentation_figure
        save_segmentation_figure(img, shade_corrected(img, cfg), mask, result, args.figure)
    print(f"iterations: {result.iterations}")
    print(f"converged: {str(result.converged).lower()}")
    print(f"objective: {result.objective:.10g}")
    print(f"vessel pixels: {int(mask.sum())}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from . import metrics

    cfg = build_pipeline_config(resolve_settings(args))
    pairs = read_manifest(args.manifest)
    if not pairs:
        print(f"warning: manifest {args.manifest} lists no images", file=sys.stderr)
    figure_dir = Path(args.figures) if args.figures else None
    report = metrics.batch_evaluate(pairs, cfg, workers=args.workers, figure_dir=figure_dir)

    metrics.write_csv(report, args.report)
    table_path = args.table or str(Path(args.report).with_suffix(".txt"))
    Path(table_path).write_text(metrics.format_table(report))
    if figure_dir is not None and report.average is not None:
        from .plotting import save_summary_figure
        save_summary_figure(report, figure_dir / "summary.png")

    failed = [r for r in report.rows if not r.ok]
    if report.average is not None:
        head = metrics.format_table(metrics.BatchReport(rows=[])).splitlines()[0]
        print(head)
        print(metrics.average_line(report, len("Image")))
    print(f"{len(report.rows) - len(failed)} of {len(report.rows)} images evaluated; "
          f"report written to {args.report}")
    return EXIT_OK


def cmd_phantom(args) -> int:
    from .phantom import make_phantom

    try:
        img, mask = make_phantom(seed=args.seed, width=args.width, height=args.height)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    imageio.save_rgb(img, args.image)
    imageio.save_mask(mask, args.truth)
    print(f"phantom seed {args.seed}: {int(mask.sum())} vessel pixels of {mask.size}")
    return EXIT_OK


COMMANDS = {"segment": cmd_segment, "evaluate": cmd_evaluate, "phantom": cmd_phantom}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, OSError, ValueError) as exc:
        # OSError covers missing files and write failures; ValueError covers
        # undecodable images (ImageDecodeError, ChannelError).
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
