"""Client adapter for a remote eps-prediction service.

The service (see the bridge package) exposes GET /schedule and
POST /predict over HTTP with the JSON + base64-float32 wire format.
Construction performs a schedule handshake: the remote alpha_bar table
must match the local schedule to 1e-6 or the predictor refuses to build.
Guidance is never applied remotely; the client fetches raw conditional
and unconditional predictions and all combination happens locally.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.request

import numpy as np

from .conditions import DEGRADED, NEGATIVE_PROMPT, NULL, Condition
from .exceptions import ConditionError, ConfigError, ProtocolError, TransportError
from .schedule import NoiseSchedule
from .wire import decode_f32, encode_f32

HANDSHAKE_TOLERANCE = 1e-6


def _http_json(
    url: str, payload: dict | None = None, timeout: float = 60.0
) -> dict:
    """One request; GET when payload is None, POST otherwise."""
    try:
        if payload is None:
            req = urllib.request.Request(url, method="GET")
        else:
            req = urllib.request.Request(
                url,
                data=json.dumps(payload).encode("utf-8"),
                headers={"Content-Type": "application/json"},
                method="POST",
            )
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            body = resp.read()
    except urllib.error.HTTPError as exc:
        detail = exc.read().decode("utf-8", "replace")[:500]
        raise TransportError(f"{url} -> HTTP {exc.code}: {detail}") from exc
    except (urllib.error.URLError, TimeoutError, OSError) as exc:
        raise TransportError(f"{url} unreachable: {exc}") from exc
    try:
        doc = json.loads(body)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"{url} returned non-JSON body") from exc
    if not isinstance(doc, dict):
        raise ProtocolError(f"{url} returned {type(doc).__name__}, expected object")
    return doc


class RemotePredictor:
    """eps-predictor that forwards (z, y, t) to a bridge endpoint.

    Conditions map to prompt strings: null -> empty prompt, degraded ->
    the negative-prompt string, class(id) -> caller-supplied table entry.
    Calls are independent and idempotent, so concurrent use is safe.
    """

    def __init__(
        self,
        endpoint: str,
        model_id: str,
        sched: NoiseSchedule,
        prompts: dict[int, str] | None = None,
        timeout: float = 60.0,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model_id = model_id
        self.sched = sched
        self.prompts = dict(prompts or {})
        self.timeout = timeout
        self.dim = None  # determined by the served latent shape
        self._handshake()

    def _handshake(self) -> None:
        doc = _http_json(f"{self.endpoint}/schedule", timeout=self.timeout)
        try:
            remote_T = int(doc["T"])
            remote_ab = np.asarray(doc["alpha_bars"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed /schedule response: {exc}") from exc
        if remote_T != self.sched.T or remote_ab.shape != (self.sched.T,):
            raise ConfigError(
                f"remote schedule has T={remote_T}, local T={self.sched.T}"
            )
        err = float(np.max(np.abs(remote_ab - self.sched.alpha_bars)))
        if err > HANDSHAKE_TOLERANCE:
            raise ConfigError(
                f"remote alpha_bar table deviates by {err:.3e} "
                f"(> {HANDSHAKE_TOLERANCE})"
            )

    def prompt_for(self, y: Condition) -> str:
        if y == NULL:
            return ""
        if y == DEGRADED:
            return NEGATIVE_PROMPT
        if y.tag == "class":
            try:
                return self.prompts[y.class_id]
            except KeyError:
                raise ConditionError(
                    f"no prompt mapping for condition {y}"
                ) from None
        raise ConditionError(f"cannot map condition {y} to a prompt")

    def predict(self, z: np.ndarray, y: Condition, t: int) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        t = self.sched.check_t(t)
        payload = {
            "z": encode_f32(z),
            "shape": list(z.shape),
            "t": t,
            "prompt": self.prompt_for(y),
        }
        doc = _http_json(
            f"{self.endpoint}/predict", payload, timeout=self.timeout
        )
        try:
            eps = decode_f32(doc["eps_hat"], z.shape)
        except KeyError:
            raise ProtocolError("/predict response missing eps_hat") from None
        if not np.all(np.isfinite(eps)):
            raise ProtocolError("/predict returned non-finite values")
        return eps.astype(np.float64)


def remote_predictor(
    endpoint: str,
    model_id: str,
    sched: NoiseSchedule,
    prompts: dict[int, str] | None = None,
    timeout: float = 60.0,
) -> RemotePredictor:
    """Build a RemotePredictor (handshake included)."""
    return RemotePredictor(endpoint, model_id, sched, prompts, timeout)
