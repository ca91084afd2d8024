"""sdbridge: a small HTTP service around a latent-diffusion noise predictor.

Endpoints (HTTP/1.1, JSON bodies, arrays as base64 little-endian float32):

    GET  /healthz        liveness and model identity
    GET  /schedule       {T, alpha_bars} of the served model
    GET  /manifest       latent shape and the linear decode map in use
    POST /predict        one forward pass; no guidance is applied here
    POST /decode         decoder output as an RGB image
    POST /decode_linear  fixed per-channel linear approximation, clamped

Guidance never happens server-side: clients fetch raw conditional and
unconditional predictions and combine them locally.
"""

from .model import EchoModel, StubModel, load_model
from .schedule import linear_alpha_bars
from .server import BridgeServer, main
from .wire import decode_f32, encode_f32

__version__ = "0.1.0"

__all__ = [
    "BridgeServer",
    "EchoModel",
    "StubModel",
    "decode_f32",
    "encode_f32",
    "linear_alpha_bars",
    "load_model",
    "main",
]
