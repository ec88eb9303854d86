"""Stateless JSON scoring service.

    POST /score[?prior=P]   body: one account record, optionally with "prior"
    GET  /health            model version and uptime

The loaded bundle is shared read-only by all request threads.
"""

from __future__ import annotations

import json
import logging
import time
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from botcal.bundle import ModelBundle
from botcal.data import account_from_record
from botcal.errors import BotcalError, ValidationError
from botcal.pipeline import respond
from botcal.posterior import validate_prior

log = logging.getLogger(__name__)

MAX_BODY = 1 << 20


def _parse_prior(value) -> float:
    try:
        prior = float(value)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"prior must be a number, got {value!r}") from exc
    return validate_prior(prior)


def make_handler(bundle: ModelBundle, default_prior: float | None = None):
    started = time.monotonic()
    version = bundle.version

    class Handler(BaseHTTPRequestHandler):
        server_version = "botcal"
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            log.debug("%s - " + fmt, self.address_string(), *args)

        def _send(self, status: int, payload: dict):
            body = json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _error(self, status: int, message: str):
            self._send(status, {"error": message, "status": status})

        def do_GET(self):
            if urlparse(self.path).path != "/health":
                return self._error(HTTPStatus.NOT_FOUND, "not found")
            self._send(HTTPStatus.OK, {"status": "ok", "model_version": version,
                                       "uptime_seconds": time.monotonic() - started})

        def do_POST(self):
            url = urlparse(self.path)
            if url.path != "/score":
                return self._error(HTTPStatus.NOT_FOUND, "not found")
            try:
                length = int(self.headers.get("Content-Length", "0"))
            except ValueError:
                return self._error(HTTPStatus.BAD_REQUEST, "bad Content-Length")
            if length > MAX_BODY:
                self.close_connection = True
                return self._error(HTTPStatus.REQUEST_ENTITY_TOO_LARGE, f"body exceeds {MAX_BODY} bytes")
            raw = self.rfile.read(length)
            try:
                record = json.loads(raw.decode("utf-8"))
                if not isinstance(record, dict):
                    raise ValidationError("request body must be a JSON object")
                prior = default_prior
                if "prior" in record:
                    prior = _parse_prior(record.pop("prior"))
                query = parse_qs(url.query)
                if "prior" in query:
                    prior = _parse_prior(query["prior"][0])
                account = account_from_record(record)
                response = respond(bundle, account, prior, model_version=version)
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                return self._error(HTTPStatus.BAD_REQUEST, f"malformed JSON: {exc}")
            except ValidationError as exc:
                return self._error(HTTPStatus.BAD_REQUEST, str(exc))
            except BotcalError as exc:
                return self._error(HTTPStatus.INTERNAL_SERVER_ERROR, str(exc))
            self._send(HTTPStatus.OK, response.to_dict())

    return Handler


class ScoringServer(ThreadingHTTPServer):
    daemon_threads = True
    request_queue_size = 128


def make_server(bundle: ModelBundle, host: str = "127.0.0.1", port: int = 8000,
                default_prior: float | None = None) -> ScoringServer:
    if default_prior is not None:
        validate_prior(default_prior)
    return ScoringServer((host, port), make_handler(bundle, default_prior))


def serve(bundle: ModelBundle, host: str = "127.0.0.1", port: int = 8000,
          default_prior: float | None = None) -> None:
    server = make_server(bundle, host, port, default_prior)
    log.info("serving model %s on http://%s:%d", bundle.version, *server.server_address[:2])
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
