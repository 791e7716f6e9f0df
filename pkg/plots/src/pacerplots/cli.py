"""Figure rendering CLI.

    pacerplot --kind {IPG_CDF,TRAIN_CDF,CWND_TRACE} \
              --in run_000/trains.csv[,run_001/trains.csv...] \
              --labels a[,b...] --out figure.png [--log-x]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import EmptySeriesError, PlotKind, PlotSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pacerplot", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--kind", required=True, choices=[k.value for k in PlotKind])
    parser.add_argument("--in", dest="inputs", required=True,
                        help="comma-separated CSV paths")
    parser.add_argument("--labels", required=True, help="comma-separated series labels")
    parser.add_argument("--out", required=True, type=Path, help="output image path")
    parser.add_argument("--log-x", action="store_true", help="log-scale x axis")
    args = parser.parse_args(argv)

    try:
        spec = PlotSpec(
            kind=PlotKind(args.kind),
            inputs=[Path(p) for p in args.inputs.split(",")],
            labels=args.labels.split(","),
            output=args.out,
            log_x=args.log_x,
        )
        render(spec)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SchemaError, EmptySeriesError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
