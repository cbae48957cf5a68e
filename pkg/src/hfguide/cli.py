"""Command-line entry point: synthesize / train-toy / sample / eval /
gradcheck / plot-decay.

Every command writes its outputs into a timestamped run directory under
the configured run root (HFGUIDE_RUN_ROOT or ./runs) together with the
effective config. Exit codes: 0 success, 2 config parse error, 3 missing
input, 4 numeric failure.
"""
from __future__ import annotations

import math
import os
import sys

import click
import numpy as np

from . import forge as forge_mod
from . import metrics as metrics_mod
from .autoencoder import ToyAutoencoder, init_lora
from .conditioning import (MAX_TOKENS, PromptEmbedding, ConditioningBundle,
                           token_ids)
from .config import load_config, make_run_dir
from .errors import ConfigError, HfguideError, InvalidArgumentError, NumericsError
from .highfreq import HighPassSpec
from .imgio import read_image, write_image
from .rng import Prng
from .sampler import SamplerConfig, hgs_sample
from .schedule import ChurnParams, build_edm_schedule
from .toydenoiser import ToyDenoiser, TrainConfig, train_toy, write_loss_curve

EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_NUMERIC = 4


def text_embedding(text):
    """Hash-bucket prompt ids wrapped for the toy denoiser (no table needed)."""
    text = text or ""
    return PromptEmbedding(tokens=np.zeros((MAX_TOKENS, 1)),
                           null=not text.strip(), token_ids=token_ids(text))


def _require_file(path, what):
    if not os.path.exists(path):
        raise FileNotFoundError(f"{what} not found: {path}")
    return path


def _load_cfg(config_path, overrides):
    return load_config(config_path, overrides)


_config_opt = click.option("--config", "config_path", default=None,
                           type=click.Path(), help="YAML config file.")
_set_opt = click.option("--set", "overrides", multiple=True,
                        help="Dotted override, e.g. --set sampler.lam=0.01.")


@click.group()
def cli():
    """Desk-scale guided diffusion restoration pipeline."""


@cli.command("synthesize")
@_config_opt
@_set_opt
def cmd_synthesize(config_path, overrides):
    """Forge degradation triplets and write the manifest."""
    cfg = _load_cfg(config_path, overrides)
    run_dir = make_run_dir(cfg, "synthesize")
    f = cfg.forge
    if f.source_count > 0:
        # sources use an offset master seed so their streams never collide
        # with the per-item degradation streams
        forge_mod.generate_source_images(f.source_dir, f.source_count,
                                         seed=f.seed + 1_000_003, size=f.image_size)
    fc = forge_mod.ForgeConfig(out_root=f.out_root, tasks=tuple(f.tasks),
                               compose=tuple(tuple(c) for c in f.compose),
                               seed=f.seed, workers=f.workers,
                               removal_pairs=f.removal_pairs)
    triplets = forge_mod.build_dataset(f.source_dir, fc)
    manifest_path = os.path.join(run_dir, cfg.paths.manifest)
    forge_mod.write_manifest(manifest_path, triplets)
    click.echo(f"wrote {len(triplets)} triplets to {manifest_path}")


def prepare_examples(manifest, autoencoder):
    """Manifest records -> training examples (latents + prompt ids)."""
    examples = []
    for t in manifest:
        target = read_image(_require_file(t.target_path, "target image"))
        degraded = read_image(_require_file(t.input_path, "input image"))
        target_latent, _ = autoencoder.encode(target)
        input_latent, _ = autoencoder.encode(degraded)
        examples.append({
            "target_latent": target_latent,
            "input_latent": input_latent,
            "instruction_ids": token_ids(t.instruction),
            "auxiliary_ids": token_ids(t.auxiliary),
        })
    return examples


@cli.command("train-toy")
@_config_opt
@_set_opt
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
def cmd_train_toy(config_path, overrides, manifest_path):
    """Train the toy denoiser on a forged manifest."""
    cfg = _load_cfg(config_path, overrides)
    run_dir = make_run_dir(cfg, "train-toy")
    manifest = forge_mod.read_manifest(_require_file(manifest_path, "manifest"))
    if not manifest:
        raise InvalidArgumentError("manifest is empty")
    examples = prepare_examples(manifest, ToyAutoencoder())
    tc = TrainConfig(iters=cfg.train.iters, batch=cfg.train.batch, lr=cfg.train.lr,
                     dropout_p=cfg.train.dropout_p, seed=cfg.train.seed,
                     sigma_min=cfg.schedule.sigma_min, sigma_max=cfg.schedule.sigma_max,
                     rho=cfg.schedule.rho, t_steps=cfg.schedule.t_steps,
                     log_every=cfg.train.log_every)
    model, curve = train_toy(examples, tc)
    weights_path = os.path.join(run_dir, cfg.paths.weights)
    model.save(weights_path)
    write_loss_curve(os.path.join(run_dir, "loss_curve.csv"), curve)
    click.echo(f"wrote weights to {weights_path} (final loss {curve[-1][1]:.6f})")


def _sampler_config(cfg, run_dir, hgs):
    sched = build_edm_schedule(cfg.schedule.t_steps, cfg.schedule.sigma_min,
                               cfg.schedule.sigma_max, cfg.schedule.rho)
    churn = ChurnParams(s_churn=cfg.churn.s_churn, s_noise=cfg.churn.s_noise,
                        s_tmin=cfg.churn.s_tmin, s_tmax=cfg.churn.s_tmax)
    return SamplerConfig(schedule=sched, churn=churn, lam=cfg.sampler.lam,
                         eta=cfg.sampler.eta, s_img=cfg.sampler.s_img,
                         s_txt=cfg.sampler.s_txt, seed=cfg.sampler.seed,
                         hgs_enabled=hgs, use_fourier=cfg.sampler.use_fourier,
                         use_sobel=cfg.sampler.use_sobel,
                         highpass=HighPassSpec(cfg.sampler.cutoff_fraction),
                         trace_path=os.path.join(run_dir, "trace.csv"))


@cli.command("sample")
@_config_opt
@_set_opt
@click.option("--weights", "weights_path", required=True, type=click.Path())
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--instruction", default=None, help="Edit instruction text.")
@click.option("--no-instruction", is_flag=True,
              help="Blind restoration: null the instruction branch.")
@click.option("--task", default="lowlight",
              help="Task tag for the canned auxiliary provider.")
@click.option("--hgs/--no-hgs", "hgs", default=True,
              help="Enable/disable the per-step decoder adaptation.")
def cmd_sample(config_path, overrides, weights_path, input_path, instruction,
               no_instruction, task, hgs):
    """Run guided sampling on one degraded image."""
    cfg = _load_cfg(config_path, overrides)
    run_dir = make_run_dir(cfg, "sample")
    model = ToyDenoiser.load(_require_file(weights_path, "weights"))
    image = read_image(_require_file(input_path, "input image"))
    if no_instruction:
        instruction = ""
    elif instruction is None:
        raise click.UsageError("pass --instruction TEXT or --no-instruction")
    aux = forge_mod.auxiliary_text((task,))
    ae = ToyAutoencoder()
    latent, _ = ae.encode(image)
    bundle = ConditioningBundle(instruction=text_embedding(instruction),
                                auxiliary=text_embedding(aux),
                                image_latent=latent)
    sc = _sampler_config(cfg, run_dir, hgs)
    theta = init_lora(rank=cfg.sampler.lora_rank, seed=cfg.sampler.seed)
    out, trace, _ = hgs_sample(model, ae, theta, image, bundle, sc)
    out_path = os.path.join(run_dir, "output.png")
    write_image(out_path, out)
    click.echo(f"wrote {out_path} and {sc.trace_path}")


@cli.command("eval")
@_config_opt
@_set_opt
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--outputs", "outputs_dir", default=None, type=click.Path(),
              help="Directory of restored images named like the inputs; "
                   "omitted = score the degraded inputs themselves.")
def cmd_eval(config_path, overrides, manifest_path, outputs_dir):
    """Score restored (or degraded) images against manifest targets."""
    cfg = _load_cfg(config_path, overrides)
    run_dir = make_run_dir(cfg, "eval")
    manifest = forge_mod.read_manifest(_require_file(manifest_path, "manifest"))
    rows = []
    for t in manifest:
        target = read_image(_require_file(t.target_path, "target image"))
        if outputs_dir is None:
            candidate_path = t.input_path
        else:
            candidate_path = os.path.join(outputs_dir, os.path.basename(t.input_path))
        candidate = read_image(_require_file(candidate_path, "candidate image"))
        rows.append((os.path.basename(t.input_path),
                     metrics_mod.report(target, candidate,
                                        HighPassSpec(cfg.sampler.cutoff_fraction))))
    out_csv = os.path.join(run_dir, "metrics.csv")
    metrics_mod.write_reports_csv(out_csv, rows)
    mean_psnr = float(np.mean([r.psnr for _, r in rows])) if rows else float("nan")
    click.echo(f"wrote {out_csv} ({len(rows)} rows, mean psnr {mean_psnr:.3f} dB)")


def _fd_relerr(fn, x, grad, h=1e-6):
    """Max relative error of `grad` vs central finite differences of fn."""
    worst = 0.0
    flat = x.reshape(-1)
    g = grad.reshape(-1)
    idx = np.linspace(0, flat.size - 1, min(40, flat.size)).astype(int)
    for i in idx:
        old = flat[i]
        flat[i] = old + h
        fp = fn(x)
        flat[i] = old - h
        fm = fn(x)
        flat[i] = old
        fd = (fp - fm) / (2 * h)
        denom = max(abs(fd), abs(g[i]), 1e-8)
        worst = max(worst, abs(fd - g[i]) / denom)
    return worst


@cli.command("gradcheck")
@_config_opt
@_set_opt
def cmd_gradcheck(config_path, overrides):
    """Finite-difference checks of the analytic gradients; exit 4 on failure."""
    cfg = _load_cfg(config_path, overrides)
    from .highfreq import fidelity_grad, fidelity_loss
    prng = Prng(0)
    spec = HighPassSpec(cfg.sampler.cutoff_fraction)
    failures = 0

    ref = prng.uniform((8, 8, 3))
    cand = prng.uniform((8, 8, 3))
    g = fidelity_grad(ref, cand, spec)
    err = _fd_relerr(lambda x: fidelity_loss(ref, x, spec), cand, g)
    ok = err < 1e-4
    failures += not ok
    click.echo(f"{'PASS' if ok else 'FAIL'} fidelity_grad rel_err={err:.3e}")

    ae = ToyAutoencoder()
    image = prng.uniform((16, 16, 3))
    latent, skips = ae.encode(image)
    theta = init_lora(rank=2, seed=1, both_random=True)
    _, grads, _ = ae.grad_theta(image, latent, skips, theta, spec=spec)
    for key in ("s8", "s16"):
        def f(a, key=key):
            return ae.grad_theta(image, latent, skips, theta, spec=spec)[0]
        err = _fd_relerr(f, theta.taps[key].a, grads.taps[key].a)
        ok = err < 1e-4
        failures += not ok
        click.echo(f"{'PASS' if ok else 'FAIL'} grad_theta[{key}.a] rel_err={err:.3e}")
    if failures:
        raise NumericsError(f"{failures} gradient check(s) failed")
    click.echo("all gradient checks passed")


@cli.command("plot-decay")
@click.option("--lambda", "lam", type=float, required=True)
@click.option("--steps", type=int, required=True)
@click.option("--out", "out_path", default=None, type=click.Path())
def cmd_plot_decay(lam, steps, out_path):
    """CSV of the exponential step-weight curve e^(-lambda*t)."""
    if lam < 0 or steps <= 0:
        raise InvalidArgumentError("need lambda >= 0 and steps > 0")
    lines = ["t,weight"]
    for t in range(steps):
        lines.append(f"{t},{math.exp(-lam * t)!r}")
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(text)
        click.echo(f"wrote {out_path}")
    else:
        click.echo(text, nl=False)


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except ConfigError as exc:
        print(f"error code=config {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error code=missing-input {exc}", file=sys.stderr)
        return EXIT_MISSING
    except NumericsError as exc:
        print(f"error code=numeric {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except click.UsageError as exc:
        print(f"error code=usage {exc.format_message()}", file=sys.stderr)
        return EXIT_CONFIG
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        return 1
    except HfguideError as exc:
        print(f"error code=invalid {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
