"""Model backends the bridge can serve.

Three kinds:
  - EchoModel: eps_hat == z, for round-trip and protocol tests.
  - StubModel: a deterministic synthetic predictor whose output depends
    on (z, prompt, t), so prompt differences produce nonzero condition
    directions without any ML stack.
  - DiffusersModel: a real latent-diffusion checkpoint via the diffusers
    library (optional dependency), one UNet forward per request.

Every backend exposes: T, alpha_bars, latent_shape, model_id,
predict(z, prompt, t) and decode(latent).
"""

from __future__ import annotations

import hashlib

import numpy as np

from .schedule import linear_alpha_bars

# Per-channel linear latent -> RGB approximation served by decode_linear.
# These coefficients are part of this bridge's contract (recorded in
# /manifest), not a claim about any particular checkpoint.
DECODE_MATRIX = np.array(
    [
        [0.298, 0.207, 0.208],
        [0.187, 0.286, 0.173],
        [-0.158, 0.189, 0.264],
        [-0.184, -0.271, -0.473],
    ]
)
DECODE_BIAS = np.array([0.48, 0.41, 0.35])  # the zero latent decodes to brown


def decode_linear(latent: np.ndarray) -> np.ndarray:
    """(C, H, W) latent -> (H, W, 3) RGB in [0, 1] via the fixed map."""
    c, h, w = latent.shape
    flat = latent.reshape(c, h * w).T  # (HW, C)
    rgb = flat @ DECODE_MATRIX[:c] + DECODE_BIAS
    return np.clip(rgb.reshape(h, w, 3), 0.0, 1.0)


class EchoModel:
    """eps_hat = z bit-exactly; decode is the linear map."""

    model_id = "echo"
    latent_shape = (4, 64, 64)

    def __init__(self, T: int = 1000):
        self.T = T
        self.alpha_bars = linear_alpha_bars(T, 1e-4, 0.02, scaled=False)

    def predict(self, z: np.ndarray, prompt: str, t: int) -> np.ndarray:
        return z.copy()

    def decode(self, latent: np.ndarray) -> np.ndarray:
        return decode_linear(latent)


class StubModel:
    """Deterministic synthetic predictor.

    The prediction mixes the input with a phase field derived from
    (prompt, t, seed): identical requests give identical answers, and
    different prompts give different answers, which is all the protocol
    needs for conformance testing.
    """

    model_id = "stub"
    latent_shape = (4, 64, 64)

    def __init__(self, T: int = 1000, seed: int = 0):
        self.T = T
        self.seed = seed
        self.alpha_bars = linear_alpha_bars(T, 1e-4, 0.02, scaled=False)

    def _phase(self, prompt: str, t: int, shape) -> np.ndarray:
        key = f"{self.seed}|{t}|{prompt}".encode()
        digest = hashlib.sha256(key).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        return rng.standard_normal(shape)

    def predict(self, z: np.ndarray, prompt: str, t: int) -> np.ndarray:
        phase = self._phase(prompt, t, z.shape)
        return np.cos(z + phase) * 0.8 + 0.1 * z

    def decode(self, latent: np.ndarray) -> np.ndarray:
        return decode_linear(latent)


class DiffusersModel:
    """Real checkpoint via diffusers; import deferred until construction."""

    def __init__(self, checkpoint: str, device: str = "cpu"):
        import torch
        from diffusers import AutoencoderKL, DDPMScheduler, UNet2DConditionModel
        from transformers import CLIPTextModel, CLIPTokenizer

        self._torch = torch
        self.device = device
        self.model_id = checkpoint
        self.scheduler = DDPMScheduler.from_pretrained(checkpoint, subfolder="scheduler")
        self.unet = UNet2DConditionModel.from_pretrained(checkpoint, subfolder="unet").to(device)
        self.vae = AutoencoderKL.from_pretrained(checkpoint, subfolder="vae").to(device)
        self.tokenizer = CLIPTokenizer.from_pretrained(checkpoint, subfolder="tokenizer")
        self.text_encoder = CLIPTextModel.from_pretrained(checkpoint, subfolder="text_encoder").to(device)
        self.T = int(self.scheduler.config.num_train_timesteps)
        self.alpha_bars = self.scheduler.alphas_cumprod.cpu().numpy().astype(np.float64)
        size = self.unet.config.sample_size
        self.latent_shape = (int(self.unet.config.in_channels), size, size)
        self._embed_cache: dict[str, object] = {}

    def _embed(self, prompt: str):
        if prompt not in self._embed_cache:
            torch = self._torch
            tokens = self.tokenizer(
                prompt,
                padding="max_length",
                max_length=self.tokenizer.model_max_length,
                truncation=True,
                return_tensors="pt",
            ).input_ids.to(self.device)
            with torch.no_grad():
                self._embed_cache[prompt] = self.text_encoder(tokens)[0]
        return self._embed_cache[prompt]

    def predict(self, z: np.ndarray, prompt: str, t: int) -> np.ndarray:
        torch = self._torch
        lat = torch.from_numpy(np.asarray(z, dtype=np.float32))[None].to(self.device)
        with torch.no_grad():
            out = self.unet(lat, t - 1, encoder_hidden_states=self._embed(prompt)).sample
        return out[0].cpu().numpy().astype(np.float64)

    def decode(self, latent: np.ndarray) -> np.ndarray:
        torch = self._torch
        lat = torch.from_numpy(np.asarray(latent, dtype=np.float32))[None].to(self.device)
        with torch.no_grad():
            img = self.vae.decode(lat / self.vae.config.scaling_factor).sample
        img = ((img[0].permute(1, 2, 0).cpu().numpy() + 1.0) / 2.0).astype(np.float64)
        return np.clip(img, 0.0, 1.0)


def load_model(spec: str, device: str = "cpu", seed: int = 0):
    """'echo' | 'stub' | 'diffusers:<checkpoint>' -> model instance."""
    if spec == "echo":
        return EchoModel()
    if spec == "stub":
        return StubModel(seed=seed)
    if spec.startswith("diffusers:"):
        return DiffusersModel(spec.split(":", 1)[1], device=device)
    raise ValueError(f"unknown model spec {spec!r}")
