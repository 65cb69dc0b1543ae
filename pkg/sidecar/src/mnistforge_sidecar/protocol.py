"""Line-delimited JSON embedding protocol.

Requests:  {"id": <int>, "kind": "text"|"image", "payload": <str>}
           (image payloads are base64-encoded PNG/JPEG bytes)
Responses: {"id": <int>, "embedding": [512 floats]}
           {"id": <int or null>, "error": "<message>"}

One response per request line, in request order. Malformed lines still get
a response so the client's id bookkeeping never desynchronizes: the error
object carries the request id whenever the line was parseable enough to
recover one.
"""

from __future__ import annotations

import base64
import binascii
import json

from .encoders import EMBEDDING_DIM, EncoderError


def handle_line(line: str, encoder) -> dict | None:
    """Response object for one request line; None for blank lines."""
    line = line.strip()
    if not line:
        return None
    req_id = None
    try:
        msg = json.loads(line)
        if isinstance(msg, dict):
            req_id = msg.get("id")
    except json.JSONDecodeError as exc:
        return {"id": None, "error": f"invalid JSON: {exc}"}
    if not isinstance(msg, dict):
        return {"id": None, "error": "request must be a JSON object"}
    if not isinstance(req_id, int) or isinstance(req_id, bool) or req_id < 0:
        return {"id": None, "error": "missing or invalid 'id'"}

    kind = msg.get("kind")
    payload = msg.get("payload")
    if kind not in ("text", "image"):
        return {"id": req_id, "error": f"unsupported kind {kind!r}"}
    if not isinstance(payload, str):
        return {"id": req_id, "error": "'payload' must be a string"}

    try:
        if kind == "text":
            vec = encoder.encode_text(payload)
        else:
            try:
                raw = base64.b64decode(payload, validate=True)
            except (binascii.Error, ValueError) as exc:
                return {"id": req_id, "error": f"payload is not valid base64: {exc}"}
            vec = encoder.encode_image(raw)
    except EncoderError as exc:
        return {"id": req_id, "error": str(exc)}
    if vec.shape != (EMBEDDING_DIM,):
        return {"id": req_id, "error": f"encoder produced shape {vec.shape}"}
    return {"id": req_id, "embedding": [float(v) for v in vec]}


def serve(encoder, stdin, stdout) -> None:
    """Blocking serve loop: one response line per request line."""
    for line in stdin:
        response = handle_line(line, encoder)
        if response is None:
            continue
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()
