"""Remote predictor client against in-process stub servers."""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from scoreforge import (
    ConditionError,
    ConfigError,
    ProtocolError,
    TransportError,
    class_condition,
    default_schedule,
)
from scoreforge.conditions import DEGRADED, NEGATIVE_PROMPT, NULL
from scoreforge.remote import remote_predictor
from scoreforge.wire import decode_f32, encode_f32


class StubHandler(BaseHTTPRequestHandler):
    """Echo bridge: /schedule serves the configured table, /predict echoes
    z back as eps_hat and records the prompt."""

    sched = None
    prompts_seen = []
    schedule_override = None
    break_predict = False

    def log_message(self, *args):
        pass

    def _send(self, code, doc):
        body = json.dumps(doc).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/schedule":
            if self.schedule_override is not None:
                self._send(200, self.schedule_override)
            else:
                self._send(
                    200,
                    {
                        "T": self.sched.T,
                        "alpha_bars": [float(v) for v in self.sched.alpha_bars],
                    },
                )
        elif self.path == "/healthz":
            self._send(200, {"status": "ok"})
        else:
            self._send(404, {"error": "not found"})

    def do_POST(self):
        if self.path != "/predict":
            self._send(404, {"error": "not found"})
            return
        length = int(self.headers["Content-Length"])
        doc = json.loads(self.rfile.read(length))
        type(self).prompts_seen.append(doc["prompt"])
        if self.break_predict:
            self._send(200, {"wrong_field": True})
            return
        self._send(
            200,
            {
                "eps_hat": doc["z"],
                "model_id": "stub",
                "latency_ms": 0.1,
            },
        )


@pytest.fixture()
def stub_server(sched):
    handler = type(
        "Handler",
        (StubHandler,),
        {"sched": sched, "prompts_seen": [], "schedule_override": None},
    )
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}", handler
    server.shutdown()


class TestWireCodec:
    def test_round_trip_bit_exact(self):
        rng = np.random.default_rng(0)
        arr = rng.normal(size=(3, 5)).astype("<f4")
        out = decode_f32(encode_f32(arr), (3, 5))
        np.testing.assert_array_equal(out, arr)

    def test_bad_base64_rejected(self):
        with pytest.raises(ProtocolError):
            decode_f32("!!!not-base64!!!", (2,))

    def test_wrong_length_rejected(self):
        text = encode_f32(np.zeros(4, dtype="<f4"))
        with pytest.raises(ProtocolError):
            decode_f32(text, (5,))


class TestRemotePredictor:
    def test_handshake_and_echo_round_trip(self, sched, stub_server):
        url, handler = stub_server
        pred = remote_predictor(url, "stub", sched)
        z = np.random.default_rng(1).normal(size=6).astype(np.float32).astype(np.float64)
        out = pred.predict(z, NULL, 10)
        # float32 wire: the echo returns exactly the float32-rounded values
        np.testing.assert_array_equal(
            out, z.astype(np.float32).astype(np.float64)
        )

    def test_prompt_mapping(self, sched, stub_server):
        url, handler = stub_server
        pred = remote_predictor(url, "stub", sched, prompts={0: "a test prompt"})
        z = np.zeros(4)
        pred.predict(z, NULL, 5)
        pred.predict(z, DEGRADED, 5)
        pred.predict(z, class_condition(0), 5)
        assert handler.prompts_seen == ["", NEGATIVE_PROMPT, "a test prompt"]

    def test_missing_prompt_mapping_rejected(self, sched, stub_server):
        url, _ = stub_server
        pred = remote_predictor(url, "stub", sched)
        with pytest.raises(ConditionError):
            pred.predict(np.zeros(4), class_condition(3), 5)

    def test_schedule_mismatch_refused(self, sched, stub_server):
        url, handler = stub_server
        bad = {
            "T": sched.T,
            "alpha_bars": [float(v) + 1e-3 for v in sched.alpha_bars],
        }
        handler.schedule_override = bad
        with pytest.raises(ConfigError):
            remote_predictor(url, "stub", sched)

    def test_wrong_T_refused(self, sched, stub_server):
        url, handler = stub_server
        handler.schedule_override = {"T": 10, "alpha_bars": [0.5] * 10}
        with pytest.raises(ConfigError):
            remote_predictor(url, "stub", sched)

    def test_malformed_response_raises_protocol_error(self, sched, stub_server):
        url, handler = stub_server
        pred = remote_predictor(url, "stub", sched)
        handler.break_predict = True
        with pytest.raises(ProtocolError):
            pred.predict(np.zeros(4), NULL, 5)

    def test_unreachable_endpoint_raises_transport_error(self, sched):
        with pytest.raises(TransportError):
            remote_predictor("http://127.0.0.1:9", "stub", sched, timeout=0.5)
