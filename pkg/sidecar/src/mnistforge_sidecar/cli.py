"""Sidecar entry point: load an encoder and serve the stdio protocol."""

from __future__ import annotations

import argparse
import sys

from .encoders import EncoderError, make_encoder
from .protocol import serve


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mnistforge-sidecar",
        description="Embedding provider speaking line-delimited JSON on stdio",
    )
    parser.add_argument("--backend", choices=["clip", "hash"], default="clip")
    parser.add_argument("--model", default="openai/clip-vit-base-patch32",
                        help="model name for the clip backend")
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args(argv)

    try:
        encoder = make_encoder(args.backend, model_name=args.model,
                               device=args.device)
    except EncoderError as exc:
        print(f"sidecar startup failed: {exc}", file=sys.stderr)
        return 1
    print(f"serving embeddings (backend={encoder.name})", file=sys.stderr)
    try:
        serve(encoder, sys.stdin, sys.stdout)
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
