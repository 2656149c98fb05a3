"""Client for the remote expansion-oracle wire protocol.

One UTF-8 JSON object per line over a stream socket or a subprocess's stdio
pipes.  Requests:

    {"op": "expand", "id": <string>, "k": <int>}
    {"op": "fingerprint", "id": <string>}
    {"op": "in_stock", "id": <string>}

Responses (one line each):

    {"ok": true, "templates": [{"template_id": ..., "fp_b64": <base64 of 256
        bytes>, "p": <float>, "reactants": [{"id": ..., "fp_b64": ...}]}]}
    {"ok": true, "bits_b64": ...}
    {"ok": true, "member": <bool>}
    {"ok": false, "error": <string>}

Fingerprint packing: bit i sits in byte i // 8, most significant bit first.
"""

from __future__ import annotations

import base64
import json
import shlex
import socket
import subprocess
import threading

from .errors import LengthMismatch, OracleRequestError, OracleUnavailable
from .fingerprints import FP_BYTES
from .items import Item, OracleConfig, TemplateAction


def fp_to_b64(fp: bytes) -> str:
    if len(fp) != FP_BYTES:
        raise LengthMismatch(f"fingerprint must be {FP_BYTES} bytes")
    return base64.b64encode(fp).decode("ascii")


def b64_to_fp(text: str) -> bytes:
    try:
        fp = base64.b64decode(text, validate=True)
    except Exception as exc:
        raise OracleUnavailable(f"malformed fp_b64 field: {exc}") from exc
    if len(fp) != FP_BYTES:
        raise OracleUnavailable(f"fp_b64 decodes to {len(fp)} bytes, want {FP_BYTES}")
    return fp


class RemoteOracle:
    """Line-oriented JSON client; one request in flight per connection."""

    def __init__(self, reader, writer, closer=None):
        self._reader = reader
        self._writer = writer
        self._closer = closer
        self._lock = threading.Lock()
        self._item_cache: dict[str, Item] = {}

    @classmethod
    def connect_tcp(cls, host: str, port: int, timeout: float = 10.0) -> "RemoteOracle":
        try:
            sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise OracleUnavailable(f"cannot connect to {host}:{port}: {exc}") from exc
        reader = sock.makefile("r", encoding="utf-8")
        writer = sock.makefile("w", encoding="utf-8")
        return cls(reader, writer, closer=sock.close)

    @classmethod
    def spawn(cls, command: list[str] | str) -> "RemoteOracle":
        argv = shlex.split(command) if isinstance(command, str) else command
        try:
            proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                    text=True, bufsize=1)
        except OSError as exc:
            raise OracleUnavailable(f"cannot spawn oracle {argv!r}: {exc}") from exc

        def close():
            proc.stdin.close()
            proc.wait(timeout=10)

        return cls(proc.stdout, proc.stdin, closer=close)

    def close(self) -> None:
        if self._closer is not None:
            try:
                self._closer()
            except Exception:
                pass
            self._closer = None

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()

    def _request(self, payload: dict) -> dict:
        with self._lock:
            try:
                self._writer.write(json.dumps(payload) + "\n")
                self._writer.flush()
                line = self._reader.readline()
            except (OSError, ValueError) as exc:
                raise OracleUnavailable(f"oracle transport failed: {exc}") from exc
        if not line:
            raise OracleUnavailable("oracle closed the connection")
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise OracleUnavailable(f"oracle sent malformed JSON: {exc}") from exc
        if not isinstance(doc, dict) or "ok" not in doc:
            raise OracleUnavailable(f"oracle response missing 'ok': {line!r}")
        if not doc["ok"]:
            raise OracleRequestError(doc.get("error", "unspecified oracle error"))
        return doc

    def expand(self, item: Item, cfg: OracleConfig) -> list[TemplateAction]:
        doc = self._request({"op": "expand", "id": item.id, "k": cfg.k})
        try:
            templates = doc["templates"]
            actions = []
            for t in templates:
                reactants = tuple(
                    self._intern(r["id"], b64_to_fp(r["fp_b64"])) for r in t["reactants"]
                )
                actions.append(TemplateAction(
                    template_id=t["template_id"],
                    fingerprint=b64_to_fp(t["fp_b64"]),
                    probability=float(t["p"]),
                    reactants=reactants,
                ))
        except (KeyError, TypeError, ValueError) as exc:
            raise OracleUnavailable(f"malformed expand response: {exc}") from exc
        return actions

    def fingerprint(self, item_id: str) -> bytes:
        doc = self._request({"op": "fingerprint", "id": item_id})
        if "bits_b64" not in doc:
            raise OracleUnavailable("fingerprint response missing bits_b64")
        return b64_to_fp(doc["bits_b64"])

    def in_stock(self, item_id: str) -> bool:
        doc = self._request({"op": "in_stock", "id": item_id})
        if "member" not in doc:
            raise OracleUnavailable("in_stock response missing member")
        return bool(doc["member"])

    def item(self, item_id: str) -> Item:
        cached = self._item_cache.get(item_id)
        if cached is None:
            cached = Item(item_id, self.fingerprint(item_id))
            self._item_cache[item_id] = cached
        return cached

    def _intern(self, item_id: str, fp: bytes) -> Item:
        cached = self._item_cache.get(item_id)
        if cached is None:
            cached = Item(item_id, fp)
            self._item_cache[item_id] = cached
        return cached


class RemoteStock:
    """Stock membership backed by the oracle's in_stock op, with a cache."""

    def __init__(self, oracle: RemoteOracle):
        self._oracle = oracle
        self._cache: dict[str, bool] = {}

    def __contains__(self, item) -> bool:
        item_id = item.id if isinstance(item, Item) else item
        hit = self._cache.get(item_id)
        if hit is None:
            hit = self._oracle.in_stock(item_id)
            self._cache[item_id] = hit
        return hit
