"""CLI: sclhom-plots <manifest> --kind <k> --out <dir>.

Exit codes: 0 rendered, 1 render error (hash mismatch, missing columns),
2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .jobs import HashMismatch, MissingColumns, PLOT_KINDS, PlotJob, load_manifest
from .render import RENDERERS


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="sclhom-plots",
                                 description="render plots from sclhom run manifests")
    ap.add_argument("manifest")
    ap.add_argument("--kind", required=True, choices=PLOT_KINDS)
    ap.add_argument("--out", required=True)
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        job = PlotJob(Path(args.manifest), args.kind, Path(args.out))
        manifest = load_manifest(job.manifest_path)
        outs = RENDERERS[job.kind](manifest, job.out_dir)
    except (HashMismatch, MissingColumns, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    for o in outs:
        print(o)
    return 0


if __name__ == "__main__":
    sys.exit(main())
