"""Service entry point: load the template library and stock, then serve the
oracle protocol on stdio or a TCP port."""

from __future__ import annotations

import argparse
import json
import socket
import sys
from pathlib import Path
from typing import Optional, Sequence

from .library import StockIndex, TemplateLibrary
from .server import OracleService


def build_service(templates_path, stock_path, model_path=None) -> OracleService:
    library = TemplateLibrary.load(templates_path)
    stock = StockIndex.load(stock_path)
    model_weights = None
    if model_path is not None:
        model_weights = {str(k): float(v)
                         for k, v in json.loads(Path(model_path).read_text()).items()}
    return OracleService(library, stock, model_weights)


def serve_tcp(service: OracleService, port: int) -> None:
    server = socket.create_server(("127.0.0.1", port))
    print(f"listening on 127.0.0.1:{server.getsockname()[1]}", file=sys.stderr, flush=True)
    try:
        while True:
            conn, _ = server.accept()
            with conn:
                reader = conn.makefile("r", encoding="utf-8")
                writer = conn.makefile("w", encoding="utf-8")
                service.serve(reader, writer)
    finally:
        server.close()


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="chem-service")
    parser.add_argument("--templates", required=True, help="template library JSON")
    parser.add_argument("--stock", required=True, help="stock molecules, one SMILES per line")
    parser.add_argument("--model", default=None,
                        help="optional JSON of template_id -> weight overriding priors")
    mode = parser.add_mutually_exclusive_group(required=True)
    mode.add_argument("--stdio", action="store_true", help="serve on stdin/stdout")
    mode.add_argument("--port", type=int, default=None, help="serve on a local TCP port")
    args = parser.parse_args(argv)

    try:
        service = build_service(args.templates, args.stock, args.model)
    except Exception as exc:  # noqa: BLE001 - startup errors are fatal
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.stdio:
        service.serve(sys.stdin, sys.stdout)
        return 0
    serve_tcp(service, args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
