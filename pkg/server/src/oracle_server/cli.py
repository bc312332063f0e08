"""Command line for the reference oracle server."""

from __future__ import annotations

import argparse
import sys

import uvicorn

from .app import DEFAULT_SIZE_LIMIT, create_app
from .weights import WeightsFormatError, builtin_demo_model, load_model


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oracle-server",
        description="Serve a hard-label classification oracle over HTTP.")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8900)
    parser.add_argument("--weights", default=None,
                        help=".mlpw weights file; omit for the builtin demo model")
    parser.add_argument("--squeeze-bits", type=int, default=None,
                        help="apply bit-depth-squeeze preprocessing (1-8)")
    parser.add_argument("--size-limit", type=int, default=DEFAULT_SIZE_LIMIT,
                        help="maximum request body size in bytes")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not 0 < args.port < 65536:
        print(f"invalid port {args.port}", file=sys.stderr)
        return 2
    if args.squeeze_bits is not None and not 1 <= args.squeeze_bits <= 8:
        print("--squeeze-bits must lie in [1, 8]", file=sys.stderr)
        return 2
    try:
        model = load_model(args.weights) if args.weights else builtin_demo_model()
    except (OSError, WeightsFormatError) as exc:
        print(f"cannot load model: {exc}", file=sys.stderr)
        return 2
    app = create_app(model, squeeze_bits=args.squeeze_bits,
                     size_limit=args.size_limit)
    h, w, c = model.input_shape
    print(f"serving {h}x{w}x{c} model with {model.num_classes} classes "
          f"on {args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
