"""Command-line front end.

Subcommands: render, sweep, metrics (energy | monotonicity | consistency |
theorem-check), ingest, serve. Errors print a single machine-parsable line
``error: <code> [detail]`` to stderr and exit with a per-code status.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import imageio, metrics
from .errors import InvalidApertureList, ThinLensError, TooFewImages
from .exif import PartitionConfig, partition_corpus
from .lens import APERTURE_SWEEP
from .pipeline import render_scene

EXIT_CODES = {
    "usage": 2,
    "missing_parameter": 3,
    "singular_lens": 4,
    "dimension_mismatch": 5,
    "invalid_depth": 6,
    "too_few_images": 7,
    "invalid_aperture_list": 8,
    "invalid_kernel": 9,
    "not_an_image": 10,
    "truncated_exif": 11,
    "malformed_ifd": 12,
    "zero_denominator": 13,
    "zero_saliency_mass": 14,
    "io_error": 15,
    "invalid_argument": 16,
    "internal": 20,
}


def _fail(code: str, detail: str = "") -> int:
    line = f"error: {code}"
    if detail:
        line += f" {detail}".replace("\n", " ")
    print(line, file=sys.stderr)
    return EXIT_CODES.get(code, EXIT_CODES["internal"])


def _write_json(path: Path | None, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path is None:
        print(text)
    else:
        path.write_text(text + "\n")


def _add_render_inputs(p: argparse.ArgumentParser, with_fnumber: bool = True) -> None:
    p.add_argument("--image", required=True, help="input PNG (8- or 16-bit)")
    p.add_argument("--depth", required=True, help="depth map (PFM or TLDEPTH1)")
    p.add_argument("--saliency", help="saliency map (PFM); stub heuristic if omitted")
    if with_fnumber:
        p.add_argument("--fnumber", type=float, help="f-number N")
    p.add_argument("--focal", type=float, help="focal length in mm")
    p.add_argument("--fd", type=float, help="focus distance in depth units")
    p.add_argument("--fs", type=float, help="focus scale (default 1.0)")
    p.add_argument("--ppu", type=float, help="pixels per depth unit at the sensor")
    p.add_argument("--coc-max", type=float, help="CoC clamp in pixels")
    p.add_argument(
        "--no-defaults",
        action="store_true",
        help="fail instead of defaulting f-number / focal length",
    )


def _collect_overrides(args: argparse.Namespace, with_fnumber: bool = True) -> dict:
    pairs = [
        ("focal_length_mm", "focal"),
        ("focus_distance", "fd"),
        ("focus_scale", "fs"),
        ("pixels_per_unit", "ppu"),
        ("coc_max_px", "coc_max"),
    ]
    if with_fnumber:
        pairs.append(("f_number", "fnumber"))
    return {
        field: getattr(args, attr)
        for field, attr in pairs
        if getattr(args, attr) is not None
    }


def _load_scene(args: argparse.Namespace):
    image = imageio.load_image(args.image)
    depth = imageio.load_depth(args.depth)
    saliency = imageio.load_pfm(args.saliency) if args.saliency else None
    return image, depth, saliency


def _render_report(result) -> dict:
    report = {
        "focus_distance": result.params.focus_distance,
        "focus_source": result.focus.source,
        "f_number": result.params.f_number,
        "focal_length_mm": result.params.focal_length_mm,
        "focus_scale": result.params.focus_scale,
        "pixels_per_unit": result.params.pixels_per_unit,
        "coc_max_px": result.params.coc_max_px,
        "width": int(result.coc_map.shape[1]),
        "height": int(result.coc_map.shape[0]),
    }
    report.update(result.coc_stats())
    return report


def _cmd_render(args: argparse.Namespace) -> int:
    image, depth, saliency = _load_scene(args)
    result = render_scene(
        image,
        depth,
        saliency=saliency,
        overrides=_collect_overrides(args),
        allow_defaults=not args.no_defaults,
    )
    out = Path(args.out)
    out.write_bytes(imageio.encode_png(result.image))
    report_path = Path(args.report) if args.report else out.with_suffix(".json")
    _write_json(report_path, _render_report(result))
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    try:
        f_numbers = [float(tok) for tok in args.apertures.split(",") if tok.strip()]
    except ValueError:
        return _fail("invalid_argument", f"bad aperture list {args.apertures!r}")
    if any(b <= a for a, b in zip(f_numbers, f_numbers[1:])):
        raise InvalidApertureList("aperture list must be strictly increasing")
    if len(f_numbers) < 2:
        raise TooFewImages("sweep needs at least 2 apertures")

    image, depth, saliency = _load_scene(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    overrides = _collect_overrides(args, with_fnumber=False)
    outputs, energies = [], []
    for i, n in enumerate(f_numbers):
        result = render_scene(
            image,
            depth,
            saliency=saliency,
            overrides={**overrides, "f_number": n},
            allow_defaults=not args.no_defaults,
        )
        path = out_dir / f"sweep_{i:02d}_f{n:g}.png"
        path.write_bytes(imageio.encode_png(result.image))
        outputs.append(str(path))
        energies.append(metrics.signal_energy(result.image).energy)

    mono = 100.0 * sum(1 for a, b in zip(energies, energies[1:]) if a < b) / (
        len(energies) - 1
    )
    _write_json(
        out_dir / "sweep_report.json",
        {
            "f_numbers": f_numbers,
            "energies": energies,
            "blur_monotonicity": mono,
            "outputs": outputs,
        },
    )
    return 0


def _cmd_metrics(args: argparse.Namespace) -> int:
    if args.metric == "energy":
        image = imageio.load_image(args.image)
        payload = {
            "spatial": metrics.signal_energy(image, "spatial").energy,
            "spectral": metrics.signal_energy(image, "spectral").energy,
        }
    elif args.metric == "monotonicity":
        images = [imageio.load_image(p) for p in args.images]
        payload = {
            "energies": [metrics.signal_energy(im).energy for im in images],
            "monotonicity": metrics.blur_monotonicity(images),
        }
    elif args.metric == "consistency":
        stacks = [metrics.LabelStack(imageio.load_label_stack(p)) for p in args.stacks]
        payload = {
            "consistency": metrics.content_consistency(stacks, mode=args.mode),
            "mode": args.mode,
        }
    elif args.metric == "theorem-check":
        image = imageio.load_image(args.image)
        if args.kernel:
            kernel = imageio.load_pfm(args.kernel)
        else:
            kernel = np.full((args.box, args.box), 1.0 / (args.box * args.box))
        before, after, strict = metrics.circular_energy_oracle(image, kernel)
        payload = {
            "energy_before": before,
            "energy_after": after,
            "strict_expected": strict,
            "holds": after < before if strict else after <= before + 1e-12 * before,
        }
    else:  # pragma: no cover - argparse restricts choices
        return _fail("usage", f"unknown metric {args.metric!r}")
    _write_json(Path(args.out) if args.out else None, payload)
    return 0


def _cmd_ingest(args: argparse.Namespace) -> int:
    manifest = [
        line.strip()
        for line in Path(args.manifest).read_text().splitlines()
        if line.strip()
    ]
    config = PartitionConfig()
    if args.denylist:
        names = [
            line.strip()
            for line in Path(args.denylist).read_text().splitlines()
            if line.strip()
        ]
        config.denylist = tuple(names)
    if args.labels:
        labels = {}
        for line in Path(args.labels).read_text().splitlines():
            if line.strip():
                path, label = line.split("\t", 1)
                labels[path] = label.strip()
        config.blur_labels = labels
    report = partition_corpus(manifest, args.out_dir, config)
    _write_json(
        None,
        {
            "deep": report.deep_count,
            "shallow": report.shallow_count,
            "rejected": dict(sorted(report.rejected.items())),
            "deep_manifest": str(report.deep_path),
            "shallow_manifest": str(report.shallow_path),
            "rejection_log": str(report.rejected_path),
        },
    )
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(session_limit=args.session_limit, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thinlens",
        description="Thin-lens defocus rendering, blur metrics, EXIF ingest, and render service",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_render = sub.add_parser("render", help="render one defocused image")
    _add_render_inputs(p_render)
    p_render.add_argument("--out", required=True, help="output PNG (16-bit)")
    p_render.add_argument("--report", help="sidecar JSON path (default: out stem + .json)")
    p_render.set_defaults(func=_cmd_render)

    p_sweep = sub.add_parser("sweep", help="render an ascending aperture sweep")
    _add_render_inputs(p_sweep, with_fnumber=False)
    p_sweep.add_argument(
        "--apertures",
        default=",".join(f"{n:g}" for n in APERTURE_SWEEP),
        help="comma-separated ascending f-numbers",
    )
    p_sweep.add_argument("--out-dir", required=True)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_metrics = sub.add_parser("metrics", help="blur metrics over files")
    msub = p_metrics.add_subparsers(dest="metric", required=True)

    m_energy = msub.add_parser("energy")
    m_energy.add_argument("--image", required=True)
    m_energy.add_argument("--out")
    m_energy.set_defaults(func=_cmd_metrics)

    m_mono = msub.add_parser("monotonicity")
    m_mono.add_argument("--images", nargs="+", required=True)
    m_mono.add_argument("--out")
    m_mono.set_defaults(func=_cmd_metrics)

    m_cons = msub.add_parser("consistency")
    m_cons.add_argument("--stacks", nargs="+", required=True, help="TLSEG1 files")
    m_cons.add_argument("--mode", choices=("all", "adjacent"), default="all")
    m_cons.add_argument("--out")
    m_cons.set_defaults(func=_cmd_metrics)

    m_thm = msub.add_parser("theorem-check")
    m_thm.add_argument("--image", required=True)
    m_thm.add_argument("--box", type=int, default=3, help="box kernel side length")
    m_thm.add_argument("--kernel", help="kernel taps as PFM (overrides --box)")
    m_thm.add_argument("--out")
    m_thm.set_defaults(func=_cmd_metrics)

    p_ingest = sub.add_parser("ingest", help="partition a corpus by EXIF rules")
    p_ingest.add_argument("--manifest", required=True, help="newline-delimited paths")
    p_ingest.add_argument("--out-dir", required=True)
    p_ingest.add_argument("--denylist", help="file with one device name per line")
    p_ingest.add_argument("--labels", help="TSV file: path<TAB>blur label")
    p_ingest.set_defaults(func=_cmd_ingest)

    p_serve = sub.add_parser("serve", help="run the HTTP render service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument(
        "--port", type=int, default=int(os.environ.get("THINLENS_PORT", "8000"))
    )
    p_serve.add_argument(
        "--session-limit",
        type=int,
        default=int(os.environ.get("THINLENS_SESSION_LIMIT", "8")),
    )
    p_serve.add_argument("--ui-dir", help="static frontend directory to mount at /ui")
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CODES["usage"] if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ThinLensError as exc:
        detail = exc.field if hasattr(exc, "field") else str(exc)
        return _fail(exc.code, detail)
    except FileNotFoundError as exc:
        return _fail("io_error", str(exc))
    except ValueError as exc:
        return _fail("invalid_argument", str(exc))


if __name__ == "__main__":
    sys.exit(main())
