"""Export CLI: run one backbone over an image directory.

Exit codes: 0 when at least one image exported, 1 when none did, 2 usage
errors (including unknown backbone names).
"""

from __future__ import annotations

import argparse
import logging
import sys

from svadapters.export import export_batch
from svadapters.registry import MODES, BackboneUnavailable, available_backbones


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sv-export", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    ep = sub.add_parser("export", help="export backbone outputs for a directory of images")
    ep.add_argument("--backbone", required=True,
                    help="backbone name; see --list for supported names")
    ep.add_argument("--mode", required=True, choices=list(MODES))
    ep.add_argument("--in", dest="image_dir", required=True, help="input image directory")
    ep.add_argument("--out", dest="out_dir", required=True, help="output directory")
    ep.add_argument("--camera-height", type=float, default=2.5,
                    help="camera mounting height recorded in the manifest (m)")
    ep.add_argument("--fov", type=float, default=90.0,
                    help="horizontal field of view recorded in the manifest (deg)")
    lp = sub.add_parser("list", help="list registered backbones")
    lp.set_defaults(command="list")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "list":
        for name, modes in available_backbones().items():
            print(f"{name}: {', '.join(modes)}")
        return 0

    names = available_backbones()
    if args.backbone not in names:
        parser.error(f"unknown backbone {args.backbone!r}; supported: "
                     + ", ".join(names))
    if args.mode not in names[args.backbone]:
        parser.error(f"backbone {args.backbone!r} does not support mode {args.mode!r}")

    try:
        n_ok, n_failed = export_batch(args.image_dir, args.out_dir, args.backbone,
                                      args.mode, camera_height_m=args.camera_height,
                                      fov_deg=args.fov)
    except BackboneUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NotADirectoryError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"exported {n_ok} image(s), skipped {n_failed}")
    return 0 if n_ok > 0 else 1


if __name__ == "__main__":
    sys.exit(main())
