"""Command-line front end: synth, convert, render, bench, diff, info.

Exit codes: 0 success, 1 validation error, 2 IO or file-format error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .amr import (
    AMRFormatError,
    AMRValidationError,
    SynthSpec,
    g3_dataset,
    load_amr,
    save_amr,
    synth_amr,
)
from .bench import default_cameras, default_shader, load_uniform_file, run_benchmark
from .levels import AlignmentError, BuildConfig, convert_dataset, load_levels, verify_alignment
from .render import (
    Camera,
    RenderSettings,
    ShaderConfig,
    TransferFunction,
    image_diff,
    read_image,
    render_image,
    write_image,
)
from .sparse import active_stats
from .svol import SvolFormatError, read_svol

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 1, 2
MASK_FLAG = {"index": "index", "interp": "interpolated", "off": "off"}

log = logging.getLogger("amrvox")


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _triple(text: str, flag: str) -> tuple[float, float, float]:
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError:
        vals = ()
    if len(vals) != 3:
        raise UsageError(f"{flag}: expected three comma-separated numbers, got {text!r}")
    return vals


def _size(text: str) -> tuple[int, int]:
    try:
        w, h = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"--size: expected WxH, got {text!r}") from None
    if w < 1 or h < 1:
        raise UsageError(f"--size: dimensions must be positive, got {text!r}")
    return w, h


def _add_build_flags(p):
    p.add_argument("--field", default=None, help="field to convert (must match the bundle)")
    p.add_argument("--scale", type=float, default=1.0, help="voxel-size multiplier")
    p.add_argument("--min-level", type=int, default=0)
    p.add_argument("--max-level", type=int, default=None)
    p.add_argument("--no-mask", action="store_true", help="write all-ones masks")
    p.add_argument("--no-ghost", action="store_true", help="skip ghost zones")
    p.add_argument("--no-shift", action="store_true", help="skip the alignment translations")


def _add_render_flags(p):
    p.add_argument("--camera", default=None,
                   help="pos/lookat/up/fov, e.g. '0.4,0.5,-2/0.375,0.375,0.375/0,1,0/40'")
    p.add_argument("--size", default="256x256", help="image size WxH")
    p.add_argument("--dt", type=float, default=1.0 / 256, help="ray step in world units")
    p.add_argument("--tf", default=None, help="ramp file with 'value opacity r g b' lines")
    p.add_argument("--sigma", type=float, default=4.0, help="extinction scale")
    p.add_argument("--emission", type=float, default=1.0, help="emission scale")
    p.add_argument("--background", default="0,0,0", help="background colour r,g,b")
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="amrvox", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a synthetic AMRI bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--preset", choices=["g3", "none"], default="g3")
    p.add_argument("--kind", choices=["constant", "linear-x", "gaussian"], default="constant")
    p.add_argument("--value", type=float, default=1.0)
    p.add_argument("--dims", type=int, default=8, help="level-0 cells per axis")
    p.add_argument("--refine-by", type=int, default=2)
    p.add_argument("--max-level", type=int, default=0)
    p.add_argument("--center", default="0.5,0.5,0.5")
    p.add_argument("--width", type=float, default=0.1)
    p.add_argument("--thresholds", default="", help="comma-separated, one per refined level")
    p.add_argument("--pad", type=int, default=0)
    p.add_argument("--field-name", default="density")

    p = sub.add_parser("convert", help="AMRI bundle to level{L}.svol files")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    _add_build_flags(p)

    p = sub.add_parser("render", help="render level files to an image")
    p.add_argument("inputs", nargs="+", help="level*.svol files, a directory of them, or uniform.svol")
    _add_render_flags(p)
    p.add_argument("--mask-sample", choices=sorted(MASK_FLAG), default="index")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["ppm", "pfm"], default=None)

    p = sub.add_parser("bench", help="uniform vs multiresolution benchmark")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--uniform-level", type=int, default=None)
    _add_build_flags(p)
    _add_render_flags(p)

    p = sub.add_parser("diff", help="compare two images")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--tolerance", type=float, default=0.0, help="max abs difference allowed")

    p = sub.add_parser("info", help="print dataset validation or volume statistics")
    p.add_argument("inputs", nargs="+")
    return parser


def _build_config(args) -> BuildConfig:
    return BuildConfig(
        field=args.field,
        min_level=args.min_level,
        max_level=args.max_level,
        scale=args.scale,
        with_mask=not args.no_mask,
        with_ghost=not args.no_ghost,
        with_shift=not args.no_shift,
    )


def _settings(args) -> RenderSettings:
    if not args.dt > 0 or not np.isfinite(args.dt):
        raise UsageError(f"--dt must be a positive finite number, got {args.dt}")
    if args.threads < 1:
        raise UsageError(f"--threads must be >= 1, got {args.threads}")
    return RenderSettings(
        dt=args.dt, background=_triple(args.background, "--background"), threads=args.threads
    )


def _camera(args, fallback: Camera) -> Camera:
    w, h = _size(args.size)
    if args.camera is None:
        return Camera(fallback.position, fallback.look_at, fallback.up, fallback.vfov, w, h)
    parts = args.camera.split("/")
    if len(parts) != 4:
        raise UsageError("--camera: expected pos/lookat/up/fov")
    try:
        fov = float(parts[3])
    except ValueError:
        raise UsageError(f"--camera: bad fov {parts[3]!r}") from None
    try:
        return Camera(
            _triple(parts[0], "--camera"), _triple(parts[1], "--camera"),
            _triple(parts[2], "--camera"), fov, w, h,
        )
    except ValueError as exc:
        raise UsageError(f"--camera: {exc}") from None


def _expand_inputs(inputs) -> list[Path]:
    paths = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            paths.extend(sorted(p.glob("level*.svol")) or sorted(p.glob("*.svol")))
        else:
            paths.append(p)
    if not paths:
        raise FileNotFoundError(f"no .svol files found in {', '.join(inputs)}")
    for p in paths:
        if not p.exists():
            raise FileNotFoundError(f"{p}: no such file")
    return paths


def _load_render_levels(paths):
    if len(paths) == 1 and len(read_svol(paths[0])) == 1:
        return [load_uniform_file(paths[0])]
    return load_levels(paths)


def _shader(args, levels, mask_mode="index") -> ShaderConfig:
    if args.tf:
        try:
            tf = TransferFunction.from_ramp_file(args.tf)
        except FileNotFoundError:
            raise
        except ValueError as exc:
            raise UsageError(f"--tf: {exc}") from None
        return ShaderConfig(tf, args.sigma, args.emission, mask_mode)
    base = default_shader(levels)
    return ShaderConfig(base.transfer, args.sigma, args.emission, mask_mode)


def _auto_camera(levels) -> Camera:
    lo = np.min([p.data.index_to_world(p.data.active_bounds()[0]) for p in levels], axis=0)
    hi = np.max([p.data.index_to_world(p.data.active_bounds()[1]) for p in levels], axis=0)
    centre = (lo + hi) / 2
    ext = float(np.max(hi - lo))
    eye = centre + np.array([0.35, 0.45, -2.4]) * ext
    return Camera(tuple(eye), tuple(centre), vfov=40.0)


def cmd_synth(args) -> int:
    if args.preset == "g3":
        ds = g3_dataset(args.kind, args.value, field_name=args.field_name)
    else:
        thresholds = tuple(float(t) for t in args.thresholds.split(",") if t.strip())
        spec = SynthSpec(
            domain_dimensions=(args.dims,) * 3,
            refine_by=args.refine_by,
            max_level=args.max_level,
            kind=args.kind,
            value=args.value,
            center=_triple(args.center, "--center"),
            width=args.width,
            thresholds=thresholds,
            pad=args.pad,
            field_name=args.field_name,
        )
        ds = synth_amr(spec)
    out = save_amr(ds, args.out)
    print(f"wrote {out} ({ds.max_level + 1} levels, {sum(1 for _ in ds.iter_grids())} grids)")
    return EXIT_OK


def cmd_convert(args) -> int:
    ds = load_amr(args.input)
    cfg = _build_config(args)
    paths = convert_dataset(ds, cfg, args.out)
    if cfg.with_shift and cfg.with_ghost:
        rep = verify_alignment(load_levels(paths))
        print(f"alignment max deviation {rep.max_deviation:.3e}")
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_render(args) -> int:
    settings = _settings(args)
    paths = _expand_inputs(args.inputs)
    levels = _load_render_levels(paths)
    cam = _camera(args, _auto_camera(levels))
    shader = _shader(args, levels, MASK_FLAG[args.mask_sample])
    img = render_image(levels, shader, cam, settings)
    out = write_image(img, args.out, args.format)
    print(f"wrote {out} ({img.width}x{img.height})")
    return EXIT_OK


def cmd_bench(args) -> int:
    settings = _settings(args)
    ds = load_amr(args.input)
    cfg = _build_config(args)
    w, h = _size(args.size)
    outside, inside = default_cameras(ds, cfg.scale, (w, h))
    if args.camera is not None:
        outside = _camera(args, outside)
    shader = None
    if args.tf:
        shader = _shader(args, [], "index")
    report = run_benchmark(
        ds, cfg, outside, inside, settings, args.out, args.repeats, args.uniform_level, shader
    )
    for row in report.rows():
        print(",".join(str(x) for x in row))
    return EXIT_OK


def cmd_diff(args) -> int:
    a = read_image(args.a)
    b = read_image(args.b)
    stats = image_diff(a, b)
    print(json.dumps(stats))
    if stats["max_abs"] > args.tolerance:
        print(f"images differ: max abs {stats['max_abs']:.6g} > tolerance {args.tolerance:g}")
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_info(args) -> int:
    status = EXIT_OK
    for item in args.inputs:
        p = Path(item)
        if p.is_dir() and (p / "index.json").exists():
            try:
                ds = load_amr(p)
            except AMRValidationError as exc:
                print(f"{p}: INVALID: {exc}")
                status = EXIT_VALIDATION
                continue
            print(f"{p}: valid AMR dataset, field {ds.field_name!r}, "
                  f"domain {ds.domain_dimensions}, refine_by {ds.refine_by}")
            for level, grids in enumerate(ds.levels):
                cells = sum(int(np.prod(g.dims)) for g in grids)
                print(f"  level {level}: {len(grids)} grids, {cells} cells")
            continue
        for f in _expand_inputs([item]):
            vols = read_svol(f)
            for v in vols:
                s = active_stats([v])
                print(f"{f}: {v.name}: voxel_size {v.voxel_size:g} translation {v.translation} "
                      f"active {s['active_voxels']} leaves {s['leaf_count']}")
            s = active_stats(vols)
            print(f"{f}: total active {s['active_voxels']} leaves {s['leaf_count']} bytes {s['bytes']}")
    return status


COMMANDS = {
    "synth": cmd_synth,
    "convert": cmd_convert,
    "render": cmd_render,
    "bench": cmd_bench,
    "diff": cmd_diff,
    "info": cmd_info,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    print("config: " + json.dumps({k: v for k, v in vars(args).items()}, default=str))
    try:
        return COMMANDS[args.command](args)
    except (AMRFormatError, SvolFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, AMRValidationError, AlignmentError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def run_cli(args) -> int:
    """Programmatic entry point; returns the exit code."""
    return main(list(args))


if __name__ == "__main__":
    sys.exit(main())
