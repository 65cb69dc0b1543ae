"""Local HTTP review service bridging the curation engine and the browser UI.

Endpoints (JSON unless noted):

    GET  /api/queue?limit=N[&mode=M]   pending decisions, FIFO, no locking
    POST /api/decision                 {image_id|cluster_id, verdict, main?, sub?, note?}
    GET  /api/stats                    one consistent snapshot
    GET  /api/image/<id>[?variant=transformed]   PNG bytes
    GET  /api/hierarchy                the active hierarchy config

Errors come back as {"code": ..., "message": ...} with conventional status
codes (400 bad request, 404 unknown target, 409 already resolved). Anything
under / serves static files from the configured directory, which is how the
single-page review UI is deployed.

All mutations funnel through the session's lock; GETs take consistent
snapshots under the same lock. Single reviewer, plain HTTP, localhost only.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from . import hierarchy as hierarchy_mod
from . import imageio
from .curation.session import (
    ConflictError,
    CurationSession,
    HumanDecision,
    QueueEntry,
    SessionError,
    UnknownTargetError,
)

log = logging.getLogger(__name__)

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".png": "image/png",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
    ".map": "application/json",
}


def queue_entry_json(session: CurationSession, entry: QueueEntry) -> dict:
    rep_id = entry.member_ids[0]
    item = session.items[rep_id]
    cat = item.categorization
    alternatives = [
        {
            "main_name": row.main_name,
            "sub_name": row.sub_name,
            "total": row.total,
        }
        for row in cat.top_paths(3)
    ]
    return {
        "target_id": entry.target_id,
        "image_id": rep_id,
        "cluster_id": entry.cluster_id,
        "member_ids": list(entry.member_ids),
        "member_count": len(entry.member_ids),
        "mode": entry.mode,
        "confidence": cat.confidence,
        "predicted": {
            "main_index": cat.best_main,
            "sub_index": cat.best_sub,
            "main_name": cat.best_row.main_name,
            "sub_name": cat.best_row.sub_name,
        },
        "alternatives": alternatives,
        "thumbnail_raw": imageio.png_base64(item.record.pixels),
        "thumbnail_transformed": imageio.png_base64(item.transformed.pixels),
    }


class ReviewHandler(BaseHTTPRequestHandler):
    # the server instance injects .session and .static_dir via the class below
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        log.debug("review server: " + fmt, *args)

    # -- helpers ------------------------------------------------------------

    def _send_json(self, payload, status: int = 200) -> None:
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _send_error_json(self, status: int, code: str, message: str) -> None:
        self._send_json({"code": code, "message": message}, status=status)

    def _send_bytes(self, data: bytes, content_type: str) -> None:
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    @property
    def session(self) -> CurationSession:
        return self.server.session

    # -- routes -------------------------------------------------------------

    def do_GET(self):
        parsed = urlparse(self.path)
        path = parsed.path
        try:
            if path == "/api/queue":
                self._handle_queue(parse_qs(parsed.query))
            elif path == "/api/stats":
                self._send_json(self.session.stats())
            elif path == "/api/hierarchy":
                doc = json.loads(hierarchy_mod.serialize(self.session.hierarchy))
                self._send_json(doc)
            elif path.startswith("/api/image/"):
                self._handle_image(path[len("/api/image/"):], parse_qs(parsed.query))
            elif path.startswith("/api/"):
                self._send_error_json(404, "not_found", f"no endpoint {path}")
            else:
                self._handle_static(path)
        except BrokenPipeError:
            pass
        except Exception as exc:  # surface handler bugs as 500s, not hangs
            log.exception("request failed: %s", self.path)
            self._send_error_json(500, "internal", str(exc))

    def do_POST(self):
        parsed = urlparse(self.path)
        if parsed.path != "/api/decision":
            self._send_error_json(404, "not_found", f"no endpoint {parsed.path}")
            return
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length) if length else b""
        try:
            doc = json.loads(raw.decode("utf-8")) if raw else {}
        except json.JSONDecodeError as exc:
            self._send_error_json(400, "bad_json", f"invalid JSON body: {exc}")
            return
        target = doc.get("target_id", doc.get("image_id"))
        if target is None and doc.get("cluster_id") is not None:
            cluster = doc["cluster_id"]
            target = cluster if isinstance(cluster, str) else f"cluster:{cluster}"
        verdict = doc.get("verdict")
        if not target or not verdict:
            self._send_error_json(400, "bad_request",
                                  "need image_id (or cluster_id) and verdict")
            return
        decision = HumanDecision(
            target_id=str(target),
            verdict=str(verdict),
            main_name=doc.get("main"),
            sub_name=doc.get("sub"),
            note=doc.get("note"),
        )
        try:
            applied = self.session.submit_decision(decision)
        except ConflictError as exc:
            self._send_error_json(409, "conflict", str(exc))
            return
        except UnknownTargetError as exc:
            self._send_error_json(404, "unknown_target", str(exc))
            return
        except SessionError as exc:
            self._send_error_json(400, "bad_request", str(exc))
            return
        self._send_json({"applied": applied, "target_id": decision.target_id})

    def _handle_queue(self, query: dict) -> None:
        try:
            limit = int(query.get("limit", ["50"])[0])
        except ValueError:
            self._send_error_json(400, "bad_request", "limit must be an integer")
            return
        mode = query.get("mode", [None])[0]
        with self.session.lock:
            entries = self.session.next_batch(limit, mode=mode)
            items = [queue_entry_json(self.session, e) for e in entries]
        self._send_json({"items": items, "queue_depth": len(self.session.queue)})

    def _handle_image(self, image_id: str, query: dict) -> None:
        item = self.session.items.get(image_id)
        if item is None:
            self._send_error_json(404, "unknown_image", f"no image '{image_id}'")
            return
        variant = query.get("variant", ["raw"])[0]
        pixels = item.transformed.pixels if variant == "transformed" else item.record.pixels
        self._send_bytes(imageio.encode_png(pixels), "image/png")

    def _handle_static(self, path: str) -> None:
        static_dir: Path | None = self.server.static_dir
        if static_dir is None:
            self._send_error_json(404, "no_ui", "no static directory configured")
            return
        rel = path.lstrip("/") or "index.html"
        target = (static_dir / rel).resolve()
        if not str(target).startswith(str(static_dir.resolve())) or not target.is_file():
            self._send_error_json(404, "not_found", f"no file {rel}")
            return
        content_type = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self._send_bytes(target.read_bytes(), content_type)


class ReviewServer:
    """Threaded HTTP server wrapper with a background serve loop."""

    def __init__(self, session: CurationSession, host: str = "127.0.0.1",
                 port: int = 0, static_dir: str | Path | None = None):
        self.httpd = ThreadingHTTPServer((host, port), ReviewHandler)
        self.httpd.session = session
        self.httpd.static_dir = Path(static_dir) if static_dir else None
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()

    def serve_forever(self) -> None:
        self.httpd.serve_forever()

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
