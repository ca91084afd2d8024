"""The HTTP service.

Request handling is stateless; the model is a shared read-only resource.
A semaphore caps concurrent /predict or /decode work at the configured
in-flight limit (extra requests queue). Error mapping:

    400  malformed JSON or missing fields
    422  shape/timestep/payload validation failures
    404  unknown path
    503  model still loading
    500  model evaluation failure
"""

from __future__ import annotations

import argparse
import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .model import DECODE_BIAS, DECODE_MATRIX, load_model
from .wire import WireError, decode_f32, encode_f32


class BridgeServer:
    """Owns the HTTP server, the model, and the in-flight limiter."""

    def __init__(self, model, host: str = "127.0.0.1", port: int = 0,
                 max_inflight: int = 4):
        self.model = model
        self.limiter = threading.Semaphore(max_inflight)
        handler = _make_handler(self)
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()

    def serve_forever(self) -> None:
        self.httpd.serve_forever()


def _make_handler(bridge: BridgeServer):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):
            pass

        def _reply(self, code: int, doc: dict) -> None:
            body = json.dumps(doc).encode()
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _model_or_503(self):
            if bridge.model is None:
                self._reply(503, {"error": "model loading"})
                return None
            return bridge.model

        # ---- GET ---------------------------------------------------------

        def do_GET(self):
            if self.path == "/healthz":
                self._reply(
                    200,
                    {
                        "status": "ok" if bridge.model is not None else "loading",
                        "model_id": getattr(bridge.model, "model_id", None),
                    },
                )
                return
            model = self._model_or_503()
            if model is None:
                return
            if self.path == "/schedule":
                self._reply(
                    200,
                    {
                        "T": model.T,
                        "alpha_bars": [float(v) for v in model.alpha_bars],
                    },
                )
            elif self.path == "/manifest":
                self._reply(
                    200,
                    {
                        "model_id": model.model_id,
                        "latent_shape": list(model.latent_shape),
                        "decode_linear": {
                            "matrix": DECODE_MATRIX.tolist(),
                            "bias": DECODE_BIAS.tolist(),
                        },
                    },
                )
            else:
                self._reply(404, {"error": "not found"})

        # ---- POST --------------------------------------------------------

        def _read_json(self):
            try:
                length = int(self.headers.get("Content-Length", "0"))
                doc = json.loads(self.rfile.read(length))
                if not isinstance(doc, dict):
                    raise ValueError("body must be a JSON object")
                return doc
            except (ValueError, json.JSONDecodeError) as exc:
                self._reply(400, {"error": f"malformed request: {exc}"})
                return None

        def do_POST(self):
            model = self._model_or_503()
            if model is None:
                return
            doc = self._read_json()
            if doc is None:
                return
            if self.path == "/predict":
                self._predict(model, doc)
            elif self.path in ("/decode", "/decode_linear"):
                self._decode(model, doc, linear=self.path.endswith("_linear"))
            else:
                self._reply(404, {"error": "not found"})

        def _predict(self, model, doc):
            try:
                shape = tuple(int(v) for v in doc["shape"])
                t = int(doc["t"])
                prompt = str(doc.get("prompt", ""))
            except (KeyError, TypeError, ValueError) as exc:
                self._reply(400, {"error": f"missing/invalid field: {exc}"})
                return
            if not 1 <= t <= model.T:
                self._reply(422, {"error": f"t={t} outside 1..{model.T}"})
                return
            try:
                z = decode_f32(doc["z"], shape).astype(np.float64)
            except KeyError:
                self._reply(400, {"error": "missing field: z"})
                return
            except WireError as exc:
                self._reply(422, {"error": str(exc)})
                return
            start = time.perf_counter()
            with bridge.limiter:
                try:
                    eps = model.predict(z, prompt, t)
                except Exception as exc:
                    self._reply(500, {"error": f"model failure: {exc}"})
                    return
            if not np.all(np.isfinite(eps)):
                self._reply(500, {"error": "model produced non-finite values"})
                return
            self._reply(
                200,
                {
                    "eps_hat": encode_f32(eps),
                    "model_id": model.model_id,
                    "latency_ms": (time.perf_counter() - start) * 1e3,
                },
            )

        def _decode(self, model, doc, linear: bool):
            want = tuple(model.latent_shape)
            try:
                shape = tuple(int(v) for v in doc["shape"])
                latent = decode_f32(doc["latent"], shape).astype(np.float64)
            except KeyError as exc:
                self._reply(400, {"error": f"missing field: {exc}"})
                return
            except (WireError, TypeError, ValueError) as exc:
                self._reply(422, {"error": str(exc)})
                return
            if shape != want:
                self._reply(
                    422, {"error": f"latent shape {shape} != served {want}"}
                )
                return
            from .model import decode_linear as linear_map

            with bridge.limiter:
                try:
                    img = linear_map(latent) if linear else model.decode(latent)
                except Exception as exc:
                    self._reply(500, {"error": f"decoder failure: {exc}"})
                    return
            self._reply(
                200,
                {
                    "image": encode_f32(img),
                    "shape": list(img.shape),
                    "model_id": model.model_id,
                },
            )

    return Handler


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sdbridge")
    parser.add_argument("--model", default="stub",
                        help="echo | stub | diffusers:<checkpoint>")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8397)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--seed", type=int, default=0,
                        help="determinism seed for the stub model")
    parser.add_argument("--max-inflight", type=int, default=4)
    args = parser.parse_args(argv)

    model = load_model(args.model, device=args.device, seed=args.seed)
    server = BridgeServer(
        model, host=args.host, port=args.port, max_inflight=args.max_inflight
    )
    print(f"serving {model.model_id} on {server.url}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
