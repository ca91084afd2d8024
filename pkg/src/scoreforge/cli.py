"""Command-line entry points.

Four subcommands tie the framework together:

    train-score       train the tiny conditional denoiser -> checkpoint
    distill           run a distillation optimization -> metrics + params
    decompose-report  residual scans and component dumps over a t grid
    sample            ancestral-sampling sweeps over guidance scales

Configuration is one TOML (or JSON) document with [schedule] [score]
[generator] [distill] [dataset] [train] [decompose] [sample] [output]
sections; unknown keys are hard errors so typos cannot silently corrupt
paired experiments. Every command writes its manifest before doing work,
re-running a completed configuration is a no-op unless --force is given,
and interrupted distill runs resume from their latest state checkpoint.

Exit codes: 0 success, 2 configuration, 3 numeric/training, 4 remote.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import sha256_json, write_csv, write_json, write_pgm, write_png
from .conditions import DEGRADED, NULL, parse_condition
from .datasets import (
    gaussian_dataset,
    single_gaussian_spec,
    toy_image_dataset,
    two_mode_spec,
)
from .decompose import decompose_score, default_tau, probe_id_ood, residual_scan
from .denoiser import TinyDenoiser, TrainConfig, train_eps_model
from .engine import AnnealConfig, DistillConfig, DistillState, run_distillation
from .exceptions import (
    ConfigError,
    NumericError,
    ProtocolError,
    TrainingError,
    TransportError,
)
from .generators import GeneratorParams, init_params, render
from .mixture import AnalyticMixturePredictor, MixtureSpec
from .distill import WeightFn
from .schedule import add_noise, build_schedule, default_schedule, sample

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_REMOTE = 4

PAPER_T_GRID = (100, 200, 300, 500, 700, 1000)
DEFAULT_S_SWEEP = (1.0, 4.0, 7.5, 15.0, 30.0, 100.0)

log = logging.getLogger("scoreforge")


class RemoteFailure(Exception):
    """Wrapper marking a failure as remote-category for exit-code mapping."""


# --------------------------------------------------------------------------
# config loading and validation
# --------------------------------------------------------------------------

_SCHEMA = {
    "schedule": {"kind", "T", "beta_start", "beta_end"},
    "score": {
        "kind", "mixture", "dim", "sep", "sigma", "degraded_sigma", "mean",
        "weights", "checkpoint", "endpoint", "model_id", "prompts",
    },
    "dataset": {"kind", "n", "size", "seed"},
    "train": {
        "steps", "batch_size", "lr", "cond_dropout", "hidden",
        "time_features", "embed_dim", "seed", "weight_decay", "holdout_n",
    },
    "generator": {"kind", "shape", "seed"},
    "distill": {
        "estimator", "s", "iters", "lr", "seed", "tau_frac", "weight_fn",
        "condition", "negative_condition", "vsd_aux_steps", "vsd_aux_lr",
        "weight_decay", "checkpoint_every", "anneal", "dds",
    },
    "distill.anneal": {
        "warmup_iters", "t_max_start_frac", "t_max_end_frac", "t_min_frac",
    },
    "distill.dds": {"reference_condition"},
    "decompose": {"t_grid", "n_draws", "seed", "s", "condition", "probe"},
    "sample": {"s_sweep", "n_chains", "condition", "seed"},
    "output": {"dir", "save_renders", "png"},
}


def load_config(path: str | Path) -> dict:
    """Read TOML or JSON and reject unknown keys anywhere in the tree."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if path.suffix == ".json":
        doc = json.loads(text)
    else:
        try:
            import tomllib  # py >= 3.11
        except ImportError:
            import tomli as tomllib
        doc = tomllib.loads(text)
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a table")
    for section, table in doc.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(table, dict):
            raise ConfigError(f"[{section}] must be a table")
        _check_keys(section, table)
    return doc


def _check_keys(section: str, table: dict) -> None:
    allowed = _SCHEMA[section]
    for key, value in table.items():
        if key not in allowed:
            raise ConfigError(f"unknown key {section}.{key}")
        sub = f"{section}.{key}"
        if sub in _SCHEMA:
            if not isinstance(value, dict):
                raise ConfigError(f"{sub} must be a table")
            _check_keys(sub, value)
        elif key == "prompts":
            if not isinstance(value, dict):
                raise ConfigError(f"{section}.prompts must be a table")


def _require(doc: dict, section: str) -> dict:
    if section not in doc:
        raise ConfigError(f"missing required config section [{section}]")
    return doc[section]


def build_sched(doc: dict):
    sec = doc.get("schedule", {})
    T = int(sec.get("T", 1000))
    if "beta_start" in sec or "beta_end" in sec:
        return build_schedule(
            sec.get("kind", "linear"),
            T,
            float(sec.get("beta_start", 1e-4)),
            float(sec.get("beta_end", 0.02)),
        )
    if sec.get("kind", "linear") == "cosine":
        return build_schedule("cosine", T)
    return default_schedule(T)


def build_mixture_spec(score: dict) -> MixtureSpec:
    name = score.get("mixture", "two_mode")
    dim = int(score.get("dim", 2))
    if name == "two_mode":
        return two_mode_spec(
            dim=dim,
            sep=float(score.get("sep", 2.0)),
            sigma=float(score.get("sigma", 0.5)),
            degraded_sigma=(
                float(score["degraded_sigma"])
                if "degraded_sigma" in score
                else None
            ),
            weights=tuple(score.get("weights", (0.5, 0.5))),
        )
    if name == "single_gaussian":
        return single_gaussian_spec(
            dim=dim,
            mean=float(score.get("mean", 0.5)),
            sigma=float(score.get("sigma", 1.0)),
        )
    raise ConfigError(f"unknown analytic mixture {name!r}")


def build_predictor(doc: dict, sched):
    score = _require(doc, "score")
    kind = score.get("kind", "analytic")
    if kind == "analytic":
        return AnalyticMixturePredictor(build_mixture_spec(score), sched)
    if kind == "checkpoint":
        if "checkpoint" not in score:
            raise ConfigError("score.checkpoint path is required")
        model = TinyDenoiser.load(score["checkpoint"])
        if model.sched.to_json() != sched.to_json():
            raise ConfigError(
                "checkpoint was trained on a different schedule than "
                "[schedule] requests"
            )
        return model
    if kind == "remote":
        from .remote import remote_predictor

        if "endpoint" not in score:
            raise ConfigError("score.endpoint is required for remote kind")
        prompts = {
            int(k): str(v) for k, v in score.get("prompts", {}).items()
        }
        try:
            return remote_predictor(
                score["endpoint"],
                score.get("model_id", "default"),
                sched,
                prompts,
            )
        except (TransportError, ProtocolError, ConfigError) as exc:
            raise RemoteFailure(str(exc)) from exc
    raise ConfigError(f"unknown score kind {kind!r}")


def build_generator(doc: dict, dim_hint: int | None = None) -> GeneratorParams:
    sec = doc.get("generator", {})
    kind = sec.get("kind", "identity")
    if "shape" in sec:
        shape = tuple(int(v) for v in sec["shape"])
    elif dim_hint is not None:
        shape = (dim_hint,)
    else:
        raise ConfigError("generator.shape is required")
    rng = np.random.default_rng(int(sec.get("seed", 0)))
    return init_params(kind, shape, rng)


# --------------------------------------------------------------------------
# manifest / no-op / resume plumbing
# --------------------------------------------------------------------------


def _resolved_doc(doc: dict, overrides: dict) -> dict:
    merged = json.loads(json.dumps(doc))  # deep copy
    for dotted, value in overrides.items():
        section, key = dotted.split(".", 1)
        merged.setdefault(section, {})[key] = value
    return merged


def start_manifest(out_dir: Path, command: str, doc: dict) -> tuple[dict, bool]:
    """Write the running manifest; returns (manifest, already_completed)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg_hash = sha256_json(doc)
    path = out_dir / "manifest.json"
    if path.is_file():
        old = json.loads(path.read_text())
        if old.get("config_sha256") == cfg_hash and old.get("status") == "completed":
            return old, True
    manifest = {
        "command": command,
        "version": __version__,
        "config": doc,
        "config_sha256": cfg_hash,
        "status": "running",
    }
    write_json(path, manifest)
    return manifest, False


def finish_manifest(out_dir: Path, manifest: dict, extra: dict) -> None:
    manifest.update(extra)
    manifest["status"] = "completed"
    write_json(out_dir / "manifest.json", manifest)


def _out_dir(doc: dict, args) -> Path:
    if args.out:
        return Path(args.out)
    sec = doc.get("output", {})
    if "dir" not in sec:
        raise ConfigError("output.dir is required (or pass --out)")
    return Path(sec["dir"])


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_train_score(doc: dict, args) -> int:
    sched = build_sched(doc)
    dataset_sec = _require(doc, "dataset")
    train_sec = doc.get("train", {})
    out_dir = _out_dir(doc, args)
    manifest, done = start_manifest(out_dir, "train-score", doc)
    if done and not args.force:
        print(f"already completed: {out_dir} (use --force to redo)")
        return EXIT_OK

    seed = int(train_sec.get("seed", 0))
    data_seed = int(dataset_sec.get("seed", 0))
    data_rng = np.random.default_rng(data_seed)
    kind = dataset_sec.get("kind")
    if kind is None:
        raise ConfigError("missing key dataset.kind")
    n = int(dataset_sec.get("n", 256))
    oracle = None
    if kind == "toy_images":
        size = int(dataset_sec.get("size", 8))
        dataset = toy_image_dataset(n, size, data_rng)
    elif kind == "gaussian":
        spec = build_mixture_spec(doc.get("score", {}))
        dataset = gaussian_dataset(spec, n, data_rng)
        oracle = AnalyticMixturePredictor(spec, sched)
    else:
        raise ConfigError(f"unknown dataset.kind {kind!r}")

    config = TrainConfig(
        steps=int(train_sec.get("steps", 3000)),
        batch_size=int(train_sec.get("batch_size", 128)),
        lr=float(train_sec.get("lr", 2e-3)),
        cond_dropout=float(train_sec.get("cond_dropout", 0.1)),
        hidden=int(train_sec.get("hidden", 128)),
        time_features=int(train_sec.get("time_features", 16)),
        embed_dim=int(train_sec.get("embed_dim", 8)),
        seed=seed,
        weight_decay=float(train_sec.get("weight_decay", 0.0)),
    )
    model = train_eps_model(dataset, sched, config)
    header = model.save(out_dir / "model")
    write_csv(
        out_dir / "training_curve.csv",
        ["step", "loss"],
        [(i, repr(float(v))) for i, v in enumerate(model.loss_history)],
    )

    extra = {
        "checkpoint": "model",
        "params_sha256": header["params_sha256"],
        "final_loss": float(model.loss_history[-100:].mean()),
        "train_config": vars(config) | {},
    }
    if oracle is not None:
        holdout = int(train_sec.get("holdout_n", 512))
        rng = np.random.default_rng(data_seed + 1)
        x = dataset.x[rng.integers(0, dataset.x.shape[0], size=holdout)]
        t = rng.integers(1, sched.T + 1, size=holdout)
        sq_sum = 0.0
        count = 0
        for ti in np.unique(t):
            rows = x[t == ti]
            eps = rng.standard_normal(rows.shape)
            z = add_noise(sched, rows, int(ti), eps).z
            diff = model.predict(z, NULL, int(ti)) - oracle.predict(z, NULL, int(ti))
            sq_sum += float(np.sum(diff * diff))
            count += diff.size
        rmse = float(np.sqrt(sq_sum / count))
        extra["holdout_rmse_vs_oracle"] = rmse
        extra["holdout_rmse_threshold"] = 0.05
    finish_manifest(out_dir, manifest, extra)
    print(f"trained model -> {out_dir}/model.bin ({header['params_sha256'][:12]})")
    return EXIT_OK


def _distill_once(
    doc: dict, args, estimator: str, out_dir: Path
) -> int:
    sched = build_sched(doc)
    pred = build_predictor(doc, sched)
    sec = _require(doc, "distill")
    anneal_sec = sec.get("anneal", {})
    resolved = json.loads(json.dumps(doc))
    resolved["distill"]["estimator"] = estimator
    manifest, done = start_manifest(out_dir, "distill", resolved)
    if done and not args.force:
        print(f"already completed: {out_dir} (use --force to redo)")
        return EXIT_OK

    cfg = DistillConfig(
        estimator=estimator,
        s=(float(sec["s"]) if "s" in sec else None),
        iters=int(sec.get("iters", 1000)),
        lr=float(sec.get("lr", 0.01)),
        weight_fn=WeightFn(sec.get("weight_fn", "constant_one")),
        anneal=AnnealConfig(
            warmup_iters=int(anneal_sec.get("warmup_iters", 200)),
            t_max_start_frac=float(anneal_sec.get("t_max_start_frac", 0.98)),
            t_max_end_frac=float(anneal_sec.get("t_max_end_frac", 0.5)),
            t_min_frac=float(anneal_sec.get("t_min_frac", 0.02)),
        ),
        seed=int(sec.get("seed", 0)),
        tau_frac=float(sec.get("tau_frac", 0.2)),
        weight_decay=float(sec.get("weight_decay", 0.0)),
        vsd_aux_steps=int(sec.get("vsd_aux_steps", 1)),
        vsd_aux_lr=float(sec.get("vsd_aux_lr", 2e-3)),
    )
    y = parse_condition(str(sec.get("condition", "class(0)")))
    y_neg = parse_condition(str(sec.get("negative_condition", "degraded")))
    dim_hint = getattr(pred, "dim", None)
    gen = build_generator(doc, dim_hint)

    aux = None
    if estimator == "vsd":
        if not isinstance(pred, TinyDenoiser):
            raise ConfigError(
                "vsd needs a trainable predictor checkpoint as its aux seed"
            )
        aux = pred.copy()
    x_ref = None
    y_ref = None
    if estimator == "dds":
        dds_sec = sec.get("dds", {})
        y_ref = parse_condition(str(dds_sec.get("reference_condition", "null")))
        x_ref = render(gen)

    mode_means = None
    if isinstance(pred, AnalyticMixturePredictor):
        mode_means, _, _ = pred.spec.arrays(NULL)

    state = None
    state_base = out_dir / "state"
    ckpt_every = int(sec.get("checkpoint_every", 0))
    if (
        not done
        and manifest["status"] == "running"
        and Path(str(state_base) + ".json").is_file()
        and not args.force
    ):
        try:
            state = DistillState.load(state_base)
            log.info("resuming from iteration %d", state.it)
        except Exception as exc:
            log.warning("cannot resume (%s); starting fresh", exc)

    result = run_distillation(
        cfg,
        pred,
        gen,
        sched,
        y=y,
        y_neg=y_neg,
        aux=aux,
        x_ref=x_ref,
        y_ref=y_ref,
        mode_means=mode_means,
        checkpoint_path=state_base if ckpt_every > 0 else None,
        checkpoint_every=ckpt_every,
        state=state,
    )

    header = ["iter", "estimator", "t", "direction_norm", "weight", "draw_hash"]
    n_modes = result.mode_dist.shape[1] if result.mode_dist is not None else 0
    header += [f"dist_mode{k}" for k in range(n_modes)]
    rows = []
    for i in range(result.iters):
        row = [
            i,
            result.estimator,
            int(result.t[i]),
            repr(float(result.direction_norm[i])),
            repr(float(result.weight[i])),
            result.draw_hash[i],
        ]
        if n_modes:
            row += [repr(float(v)) for v in result.mode_dist[i]]
        rows.append(row)
    write_csv(out_dir / "metrics.csv", header, rows)

    gen_header = {
        "kind": gen.kind,
        "shape": list(gen.shape),
        "seed": int(doc.get("generator", {}).get("seed", 0)),
        "iter": result.iters,
    }
    from .artifacts import atomic_write_bytes

    atomic_write_bytes(out_dir / "gen.bin", result.theta.tobytes())
    write_json(out_dir / "gen.json", gen_header)

    out_sec = doc.get("output", {})
    if out_sec.get("save_renders", False) and len(gen.shape) == 2:
        img = result.x.reshape(gen.shape)
        write_pgm(out_dir / "render_final.pgm", img)
        if out_sec.get("png", False):
            write_png(out_dir / "render_final.png", img)

    finish_manifest(
        out_dir,
        manifest,
        {
            "run_manifest": result.manifest,
            "final_direction_norm": float(result.direction_norm[-1]),
            "final_mode_dist": (
                [float(v) for v in result.mode_dist[-1]] if n_modes else None
            ),
        },
    )
    print(
        f"{estimator}: {result.iters} iters, final |direction| = "
        f"{result.direction_norm[-1]:.4g} -> {out_dir}"
    )
    return EXIT_OK


def cmd_distill(doc: dict, args) -> int:
    sec = _require(doc, "distill")
    estimators = sec.get("estimator", "nfsd")
    if args.estimator:
        estimators = args.estimator
    if isinstance(estimators, str):
        estimators = [e.strip() for e in estimators.split(",")]
    base = _out_dir(doc, args)
    if len(estimators) == 1:
        return _distill_once(doc, args, estimators[0], base)
    code = EXIT_OK
    for est in estimators:
        code = _distill_once(doc, args, est, base / est) or code
    return code


def cmd_decompose_report(doc: dict, args) -> int:
    sched = build_sched(doc)
    pred = build_predictor(doc, sched)
    sec = doc.get("decompose", {})
    out_dir = _out_dir(doc, args)
    manifest, done = start_manifest(out_dir, "decompose-report", doc)
    if done and not args.force:
        print(f"already completed: {out_dir} (use --force to redo)")
        return EXIT_OK

    if "t_grid" in sec:
        t_grid = [int(v) for v in sec["t_grid"]]
    else:
        t_grid = [max(1, round(v * sched.T / 1000)) for v in PAPER_T_GRID]
    n_draws = int(sec.get("n_draws", 32))
    seed = int(sec.get("seed", 0))
    s = float(sec.get("s", 7.5))
    y = parse_condition(str(sec.get("condition", "class(0)")))
    tau = default_tau(sched.T)
    rng = np.random.default_rng(seed)

    probe_kind = str(sec.get("probe", "in_domain"))
    dim = pred.dim
    if isinstance(pred, AnalyticMixturePredictor):
        means, _, weights = pred.spec.arrays(NULL)
        x_id = means[int(np.argmax(weights))]
    else:
        x_id = np.zeros(dim)
    if probe_kind == "in_domain":
        x_ood = x_id.copy()
    elif probe_kind == "offset":
        x_ood = x_id + 0.5
    else:
        raise ConfigError(f"unknown decompose.probe {probe_kind!r}")

    rows = residual_scan(pred, x_id, t_grid, rng, n_draws=n_draws, sched=sched)
    write_csv(
        out_dir / "residual_scan.csv",
        ["t", "residual_norm", "correlation"],
        [
            (r.t, repr(r.residual_norm), repr(r.correlation))
            for r in rows
        ],
    )

    comp_rows = []
    side = int(round(np.sqrt(dim)))
    imageable = side * side == dim and side >= 4
    for t in t_grid:
        eps = rng.standard_normal(dim)
        z = add_noise(sched, x_id, t, eps).z
        dec = decompose_score(pred, z, y, t, s, tau)
        delta_n_est, delta_d_est = probe_id_ood(pred, x_id, x_ood, eps, t, sched)
        fields = {
            "delta_c": dec.delta_c,
            "delta_d": dec.delta_d,
            "delta_n": dec.delta_n,
            "guided": dec.guided,
            "probe_delta_n": delta_n_est,
            "probe_delta_d": delta_d_est,
        }
        for name, vec in fields.items():
            comp_rows.append(
                [t, name, repr(float(np.linalg.norm(vec)))]
                + [repr(float(v)) for v in vec]
            )
            if imageable:
                lim = max(float(np.max(np.abs(vec))), 1e-12)
                write_pgm(
                    out_dir / f"{name}_t{t}.pgm",
                    vec.reshape(side, side),
                    lo=-lim,
                    hi=lim,
                )
    write_csv(
        out_dir / "components.csv",
        ["t", "field", "norm"] + [f"v{i}" for i in range(dim)],
        comp_rows,
    )
    finish_manifest(
        out_dir, manifest, {"t_grid": t_grid, "imageable": imageable}
    )
    print(f"decompose report ({len(t_grid)} timesteps) -> {out_dir}")
    return EXIT_OK


def cmd_sample(doc: dict, args) -> int:
    sched = build_sched(doc)
    pred = build_predictor(doc, sched)
    sec = doc.get("sample", {})
    out_dir = _out_dir(doc, args)
    manifest, done = start_manifest(out_dir, "sample", doc)
    if done and not args.force:
        print(f"already completed: {out_dir} (use --force to redo)")
        return EXIT_OK

    sweep = [float(v) for v in sec.get("s_sweep", DEFAULT_S_SWEEP)]
    if args.cfg_scale is not None:
        sweep = [float(args.cfg_scale)]
    n_chains = int(sec.get("n_chains", 200))
    seed = int(sec.get("seed", 0))
    y = parse_condition(str(sec.get("condition", "class(0)")))

    var_rows = []
    for s in sweep:
        rng = np.random.default_rng(seed)  # shared seed across the sweep
        out = sample(pred, sched, y, s, rng, n=n_chains)
        tag = repr(s).replace(".", "p")
        write_csv(
            out_dir / f"samples_s{tag}.csv",
            [f"x{i}" for i in range(out.shape[1])],
            [[repr(float(v)) for v in row] for row in out],
        )
        if isinstance(pred, AnalyticMixturePredictor):
            means, _, _ = pred.spec.arrays(NULL)
            d2 = ((out[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
            assign = np.argmin(d2, axis=1)
            num = 0.0
            den = 0
            for k in range(means.shape[0]):
                grp = out[assign == k]
                if grp.shape[0] >= 2:
                    num += grp.var(axis=0, ddof=1).mean() * grp.shape[0]
                    den += grp.shape[0]
            pooled = num / den if den else float("nan")
            var_rows.append((repr(s), repr(float(pooled))))
    if var_rows:
        write_csv(out_dir / "variance_vs_s.csv", ["s", "per_mode_variance"], var_rows)
    finish_manifest(out_dir, manifest, {"s_sweep": sweep, "n_chains": n_chains})
    print(f"sampled {n_chains} chains at s in {sweep} -> {out_dir}")
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="scoreforge",
        description="Score-distillation test bench",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("train-score", "distill", "decompose-report", "sample"):
        c = sub.add_parser(name)
        c.add_argument("--config", required=True, help="TOML or JSON config")
        c.add_argument("--seed", type=int, default=None, help="override seed")
        c.add_argument("--out", default=None, help="override output.dir")
        c.add_argument("--estimator", default=None,
                       help="override distill.estimator (comma list = paired)")
        c.add_argument("--cfg-scale", type=float, default=None,
                       help="override guidance scale")
        c.add_argument("--remote", default=None,
                       help="override score.endpoint (implies remote kind)")
        c.add_argument("--force", action="store_true",
                       help="redo a completed run")
    return p


def _apply_overrides(doc: dict, args) -> dict:
    doc = json.loads(json.dumps(doc))
    if args.seed is not None:
        target = {
            "train-score": "train",
            "distill": "distill",
            "decompose-report": "decompose",
            "sample": "sample",
        }[args.command]
        doc.setdefault(target, {})["seed"] = args.seed
    if args.cfg_scale is not None and args.command == "distill":
        doc.setdefault("distill", {})["s"] = args.cfg_scale
    if args.remote is not None:
        doc.setdefault("score", {})
        doc["score"]["kind"] = "remote"
        doc["score"]["endpoint"] = args.remote
    return doc


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("SCORE_FORGE_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = _parser().parse_args(argv)
    try:
        doc = load_config(args.config)
        doc = _apply_overrides(doc, args)
        if args.command == "train-score":
            return cmd_train_score(doc, args)
        if args.command == "distill":
            return cmd_distill(doc, args)
        if args.command == "decompose-report":
            return cmd_decompose_report(doc, args)
        return cmd_sample(doc, args)
    except RemoteFailure as exc:
        print(f"remote error: {exc}", file=sys.stderr)
        return EXIT_REMOTE
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, TrainingError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (TransportError, ProtocolError) as exc:
        print(f"remote error: {exc}", file=sys.stderr)
        return EXIT_REMOTE


if __name__ == "__main__":
    sys.exit(main())
