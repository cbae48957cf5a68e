"""Synthetic degradation forge: paired images plus instruction/auxiliary text.

Every operation is deterministic given (image, params, seed); the stored
target is always the untouched clean source. `build_dataset` derives one
child seed per item index from the master seed, so manifests are
byte-identical regardless of worker count or completion order.

Manifest format: UTF-8 JSON lines with fields
{input_path, target_path, instruction, auxiliary, task, seed, params};
images live under {root}/{task}/{input|target}/{id}.png.
"""
from __future__ import annotations

import json
import math
import os
import warnings
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import templates
from .conditioning import CannedAuxiliaryProvider, auxiliary_prompt_for
from .errors import InvalidArgumentError
from .imgio import clamp01, ensure_image, read_image, write_image
from .rng import Prng, child_seed_sequence

RESTORATION_TASKS = ("lowlight", "haze", "snow", "watermark", "colorization", "superres")

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def _check_range(name, value, lo, hi):
    if not (lo <= value <= hi):
        raise InvalidArgumentError(f"{name}={value} outside [{lo}, {hi}]")


# -- degradations ---------------------------------------------------------

def apply_lowlight(image, gamma, gain, noise_sigma, prng):
    """clamp(gain * image^gamma + N(0, noise_sigma^2)).

    The forge samples gamma in [2,5], gain in [0.3,0.8], noise_sigma in
    [0.01,0.05]; the function itself accepts the wider sanity ranges below
    (gamma=1, gain=1, noise=0 is the identity).
    """
    image = ensure_image(image)
    _check_range("gamma", gamma, 1.0, 5.0)
    _check_range("gain", gain, 0.05, 1.0)
    _check_range("noise_sigma", noise_sigma, 0.0, 0.1)
    out = gain * np.power(image, gamma)
    if noise_sigma > 0:
        out = out + noise_sigma * prng.gaussian(image.shape)
    return clamp01(out)


def make_depth_field(h, w, kind="ramp"):
    """Synthetic scene depth normalized to [0, 1]."""
    if kind == "ramp":
        d = np.linspace(0.0, 1.0, h)[:, None] * np.ones((1, w))
    elif kind == "radial":
        yy, xx = np.mgrid[0:h, 0:w]
        cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
        d = np.sqrt((yy - cy) ** 2 + (xx - cx) ** 2)
        d /= d.max() if d.max() > 0 else 1.0
    else:
        raise InvalidArgumentError(f"unknown depth kind {kind!r}")
    return d


def apply_haze(image, beta, airlight, depth=None, depth_kind="ramp"):
    """Atmospheric scattering: I = J*t + A*(1-t), t = exp(-beta*depth)."""
    image = ensure_image(image)
    # forge samples beta in [0.5, 2.5]; the wider bound keeps the t -> 0
    # full-scattering limit expressible
    _check_range("beta", beta, 0.0, 50.0)
    _check_range("airlight", airlight, 0.0, 1.0)
    h, w = image.shape[:2]
    if depth is None:
        depth = make_depth_field(h, w, depth_kind)
    depth = np.asarray(depth, dtype=np.float64)
    if depth.shape != (h, w):
        raise InvalidArgumentError("depth field must match the image spatially")
    if depth.min() < 0 or depth.max() > 1:
        raise InvalidArgumentError("depth field must be normalized to [0, 1]")
    t = np.exp(-beta * depth)[:, :, None]
    return clamp01(image * t + airlight * (1.0 - t))


def apply_snow(image, density, flake_size, motion_angle, prng):
    """Alpha-composite elongated elliptical speckles along a motion angle.

    density is the expected flake count per pixel; flake_size is the
    (min, max) minor-radius range in pixels.
    """
    image = ensure_image(image)
    _check_range("density", density, 0.0, 0.2)
    lo, hi = flake_size
    if not (0.5 <= lo <= hi <= 8.0):
        raise InvalidArgumentError(f"flake_size range {flake_size} invalid")
    h, w = image.shape[:2]
    n = int(round(density * h * w))
    out = image.copy()
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    cos_a, sin_a = math.cos(motion_angle), math.sin(motion_angle)
    elongation = 3.0
    for _ in range(n):
        cy = prng.uniform() * (h - 1)
        cx = prng.uniform() * (w - 1)
        r = lo + (hi - lo) * prng.uniform()
        alpha = 0.5 + 0.4 * prng.uniform()
        dx, dy = xx - cx, yy - cy
        u = cos_a * dx + sin_a * dy       # along the motion direction
        v = -sin_a * dx + cos_a * dy
        mask = (u / (elongation * r)) ** 2 + (v / r) ** 2 <= 1.0
        a = alpha * mask[:, :, None]
        out = out * (1.0 - a) + 1.0 * a
    return clamp01(out)


def watermark_pattern(text, tile=8):
    """Deterministic binary tile derived from the text's checksum bits."""
    gen = np.random.Generator(np.random.PCG64(zlib.crc32(text.encode("utf-8"))))
    return (gen.random((tile, tile)) < 0.5).astype(np.float64)


def apply_watermark(image, text, alpha, offset=(0, 0)):
    """Alpha-blend a tiled checksum-derived pattern; alpha=0 is the identity."""
    image = ensure_image(image)
    _check_range("alpha", alpha, 0.0, 0.7)
    h, w = image.shape[:2]
    pat = watermark_pattern(text)
    th, tw = pat.shape
    oy, ox = int(offset[0]) % th, int(offset[1]) % tw
    reps = (h // th + 2, w // tw + 2)
    mask = np.tile(pat, reps)[oy:oy + h, ox:ox + w][:, :, None]
    return clamp01(image * (1.0 - alpha * mask) + 1.0 * alpha * mask)


def apply_grayscale(image):
    """Rec.601 luma replicated to three channels."""
    image = ensure_image(image)
    if image.shape[2] != 3:
        raise InvalidArgumentError("grayscale degradation needs a 3-channel image")
    luma = image @ LUMA_WEIGHTS
    return np.repeat(luma[:, :, None], 3, axis=2)


def apply_downsample(image, factor):
    """Box-filtered decimation then nearest re-upsampling to the input size."""
    image = ensure_image(image)
    if factor not in (2, 4):
        raise InvalidArgumentError(f"downsample factor must be 2 or 4, got {factor}")
    h, w, c = image.shape
    if h % factor or w % factor:
        raise InvalidArgumentError("image dimensions must divide the factor")
    small = image.reshape(h // factor, factor, w // factor, factor, c).mean(axis=(1, 3))
    return np.repeat(np.repeat(small, factor, axis=0), factor, axis=1)


# -- instruction generation ----------------------------------------------

def gen_instruction(task, prng):
    """Uniform draw from the task's paraphrase pool; ambiguous with p=0.1."""
    if task not in templates.TASK_PROMPTS:
        raise InvalidArgumentError(f"unknown task {task!r}")
    if prng.uniform() < templates.AMBIGUOUS_PROBABILITY:
        return templates.AMBIGUOUS_PROMPTS[prng.choice_index(len(templates.AMBIGUOUS_PROMPTS))]
    pool = templates.TASK_PROMPTS[task]
    return pool[prng.choice_index(len(pool))]


def gen_composed_instruction(tasks, prng):
    """One instruction covering every composed defect; ambiguous with p=0.1."""
    if prng.uniform() < templates.AMBIGUOUS_PROBABILITY:
        return templates.AMBIGUOUS_PROMPTS[prng.choice_index(len(templates.AMBIGUOUS_PROMPTS))]
    parts = []
    for task in tasks:
        pool = templates.TASK_PROMPTS[task]
        text = pool[prng.choice_index(len(pool))]
        parts.append(text if not parts else text[0].lower() + text[1:])
    return ", and ".join(parts)


# -- triplets and manifests ----------------------------------------------

@dataclass(frozen=True)
class Triplet:
    input_path: str
    target_path: str
    instruction: str
    auxiliary: str
    task: str
    seed: int
    params: dict = field(default_factory=dict)

    def to_record(self):
        return json.dumps(
            {"input_path": self.input_path, "target_path": self.target_path,
             "instruction": self.instruction, "auxiliary": self.auxiliary,
             "task": self.task, "seed": self.seed, "params": self.params},
            sort_keys=True)

    @classmethod
    def from_record(cls, line):
        d = json.loads(line)
        return cls(**d)


def write_manifest(path, triplets):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for t in triplets:
            f.write(t.to_record() + "\n")


def read_manifest(path):
    triplets = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                triplets.append(Triplet.from_record(line))
    return triplets


def swap_triplet(triplet):
    """Back-translation: exchange input/target and invert the instruction.

    Requires a removal or creation triplet whose params carry the inverse
    template index and the object name.
    """
    if triplet.task not in ("removal", "creation"):
        raise InvalidArgumentError(f"cannot swap task {triplet.task!r}")
    idx = triplet.params.get("template_index")
    obj = triplet.params.get("object")
    if idx is None or obj is None or not (0 <= idx < len(templates.INVERSE_PAIRS)):
        raise InvalidArgumentError("triplet lacks a paired inverse-instruction template")
    removal_text, creation_text = templates.INVERSE_PAIRS[idx]
    new_task = "creation" if triplet.task == "removal" else "removal"
    new_text = (creation_text if new_task == "creation" else removal_text).format(object=obj)
    aux = auxiliary_prompt_for(CannedAuxiliaryProvider(templates.PROVIDER_TABLE, new_task))
    return replace(triplet,
                   input_path=triplet.target_path, target_path=triplet.input_path,
                   instruction=new_text, auxiliary=aux, task=new_task)


# -- synthetic sources -----------------------------------------------------

OBJECT_NAMES = ("ball", "box", "cross", "ring", "bar")


def _disk_mask(h, w, cy, cx, r):
    yy, xx = np.mgrid[0:h, 0:w]
    return (yy - cy) ** 2 + (xx - cx) ** 2 <= r ** 2


def generate_source_image(prng, size=32):
    """A colorful synthetic scene whose colors track structure.

    The sky/ground gradient and the warm disc keep hue predictable from
    luminance and position, so colorization from grayscale is learnable.
    """
    h = w = size
    u = prng.uniform()
    sky = np.array([0.30 + 0.15 * u, 0.45 + 0.15 * u, 0.80 + 0.15 * u])
    ground = np.array([0.20 + 0.10 * u, 0.55 + 0.20 * u, 0.25])
    ramp = np.linspace(0.0, 1.0, h)[:, None, None]
    img = np.broadcast_to(sky[None, None, :] * (1 - ramp)
                          + ground[None, None, :] * ramp, (h, w, 3)).copy()

    # a warm disc in the upper half
    r = 3 + 3 * prng.uniform()
    cy = (0.1 + 0.3 * prng.uniform()) * h
    cx = (0.15 + 0.7 * prng.uniform()) * w
    warm = np.array([0.95, 0.75 + 0.15 * prng.uniform(), 0.20])
    img[_disk_mask(h, w, cy, cx, r)] = warm

    # a reddish block in the lower half
    bw = int(4 + 6 * prng.uniform())
    bh = int(3 + 4 * prng.uniform())
    y0 = int((0.55 + 0.25 * prng.uniform()) * h)
    x0 = int(prng.uniform() * (w - bw))
    red = np.array([0.75 + 0.15 * prng.uniform(), 0.20, 0.15])
    img[y0:min(y0 + bh, h), x0:x0 + bw] = red
    return clamp01(img)


def generate_source_images(out_dir, count, seed=0, size=32):
    """Write `count` synthetic PNG sources; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for i in range(count):
        prng = Prng(child_seed_sequence(seed, i))
        path = os.path.join(out_dir, f"src{i:05d}.png")
        write_image(path, generate_source_image(prng, size))
        paths.append(path)
    return paths


def make_object_pair(prng, size=32):
    """(scene with object, same scene without it, object name)."""
    clean = generate_source_image(prng, size)
    name = OBJECT_NAMES[prng.choice_index(len(OBJECT_NAMES))]
    with_obj = clean.copy()
    h = w = size
    cy = (0.3 + 0.4 * prng.uniform()) * h
    cx = (0.3 + 0.4 * prng.uniform()) * w
    color = np.array([0.1 + 0.8 * prng.uniform() for _ in range(3)])
    if name == "ball":
        with_obj[_disk_mask(h, w, cy, cx, 4)] = color
    elif name == "box":
        y, x = int(cy), int(cx)
        with_obj[y - 3:y + 3, x - 3:x + 3] = color
    elif name == "cross":
        y, x = int(cy), int(cx)
        with_obj[y - 4:y + 4, x - 1:x + 1] = color
        with_obj[y - 1:y + 1, x - 4:x + 4] = color
    elif name == "ring":
        m = _disk_mask(h, w, cy, cx, 5) & ~_disk_mask(h, w, cy, cx, 3)
        with_obj[m] = color
    else:  # bar
        y = int(cy)
        with_obj[y - 1:y + 2, 4:w - 4] = color
    return clamp01(with_obj), clean, name


# -- dataset assembly ------------------------------------------------------

@dataclass
class ForgeConfig:
    out_root: str
    tasks: tuple = ("lowlight", "colorization")
    compose: tuple = ()     # tuples of task tags, each yields one multi-defect item
    seed: int = 0
    workers: int = 1
    removal_pairs: int = 0  # object removal/creation items per source image


def _sample_and_apply(task, image, prng):
    """Sample params in the forge ranges and run one degradation."""
    if task == "lowlight":
        params = {"gamma": 2.0 + 3.0 * prng.uniform(),
                  "gain": 0.3 + 0.5 * prng.uniform(),
                  "noise_sigma": 0.01 + 0.04 * prng.uniform()}
        out = apply_lowlight(image, prng=prng, **params)
    elif task == "haze":
        params = {"beta": 0.5 + 2.0 * prng.uniform(),
                  "airlight": 0.7 + 0.3 * prng.uniform(),
                  "depth_kind": "ramp" if prng.uniform() < 0.5 else "radial"}
        out = apply_haze(image, **params)
    elif task == "snow":
        lo = 1.0 + prng.uniform()
        params = {"density": 0.02 + 0.06 * prng.uniform(),
                  "flake_size": (lo, lo + prng.uniform()),
                  "motion_angle": math.pi * prng.uniform()}
        out = apply_snow(image, prng=prng, **params)
    elif task == "watermark":
        params = {"text": "sample mark",
                  "alpha": 0.3 + 0.4 * prng.uniform(),
                  "offset": (prng.integers(0, 8), prng.integers(0, 8))}
        out = apply_watermark(image, **params)
    elif task == "colorization":
        params = {}
        out = apply_grayscale(image)
    elif task == "superres":
        params = {"factor": 2 if prng.uniform() < 0.5 else 4}
        out = apply_downsample(image, **params)
    else:
        raise InvalidArgumentError(f"unknown task {task!r}")
    # JSON-safe params (tuples -> lists)
    params = {k: list(v) if isinstance(v, tuple) else v for k, v in params.items()}
    return out, params


def auxiliary_text(tasks):
    """Canned semantic+defect auxiliary prompt for one or more task tags."""
    provider = CannedAuxiliaryProvider(templates.PROVIDER_TABLE, tasks[0])
    text = auxiliary_prompt_for(provider)
    for extra in tasks[1:]:
        text += " " + templates.PROVIDER_TABLE[extra][1]
    return text


def _forge_item(source_path, tasks, master_seed, index, out_root):
    prng = Prng(child_seed_sequence(master_seed, index))
    clean = read_image(source_path)
    degraded = clean
    all_params = {}
    for task in tasks:
        degraded, params = _sample_and_apply(task, degraded, prng)
        all_params[task] = params
    tag = "+".join(tasks)
    item_id = f"{index:06d}"
    in_dir = os.path.join(out_root, tag, "input")
    tgt_dir = os.path.join(out_root, tag, "target")
    os.makedirs(in_dir, exist_ok=True)
    os.makedirs(tgt_dir, exist_ok=True)
    input_path = os.path.join(in_dir, f"{item_id}.png")
    target_path = os.path.join(tgt_dir, f"{item_id}.png")
    write_image(input_path, degraded)
    write_image(target_path, clean)
    instruction = (gen_instruction(tasks[0], prng) if len(tasks) == 1
                   else gen_composed_instruction(tasks, prng))
    return Triplet(input_path=input_path, target_path=target_path,
                   instruction=instruction, auxiliary=auxiliary_text(tasks),
                   task=tag, seed=index, params=all_params)


def _forge_removal_item(source_seed_index, master_seed, out_root):
    prng = Prng(child_seed_sequence(master_seed, source_seed_index))
    with_obj, without_obj, name = make_object_pair(prng)
    tpl_idx = prng.choice_index(len(templates.INVERSE_PAIRS))
    item_id = f"{source_seed_index:06d}"
    in_dir = os.path.join(out_root, "removal", "input")
    tgt_dir = os.path.join(out_root, "removal", "target")
    os.makedirs(in_dir, exist_ok=True)
    os.makedirs(tgt_dir, exist_ok=True)
    input_path = os.path.join(in_dir, f"{item_id}.png")
    target_path = os.path.join(tgt_dir, f"{item_id}.png")
    write_image(input_path, with_obj)
    write_image(target_path, without_obj)
    instruction = templates.INVERSE_PAIRS[tpl_idx][0].format(object=name)
    return Triplet(input_path=input_path, target_path=target_path,
                   instruction=instruction, auxiliary=auxiliary_text(("removal",)),
                   task="removal", seed=source_seed_index,
                   params={"template_index": tpl_idx, "object": name})


def list_source_images(source_dir):
    if not os.path.isdir(source_dir):
        raise InvalidArgumentError(f"source directory {source_dir!r} does not exist")
    names = sorted(n for n in os.listdir(source_dir)
                   if os.path.splitext(n)[1].lower() in (".png", ".ppm", ".pgm"))
    return [os.path.join(source_dir, n) for n in names]


def build_dataset(source_dir, config):
    """Forge the full triplet set; returns the manifest record list.

    Item i of the manifest uses child seed i of config.seed, so the output
    is independent of config.workers and of completion order.
    """
    sources = list_source_images(source_dir)
    if not sources:
        warnings.warn(f"no source images in {source_dir!r}; manifest is empty")
        return []
    jobs = []   # (index, callable) pairs; index doubles as the derived seed
    groups = [(t,) for t in config.tasks] + [tuple(c) for c in config.compose]
    idx = 0
    for src in sources:
        for tasks in groups:
            jobs.append((idx, src, tasks, False))
            idx += 1
        for _ in range(config.removal_pairs):
            jobs.append((idx, src, None, True))
            idx += 1

    def run(job):
        i, src, tasks, is_removal = job
        if is_removal:
            return i, _forge_removal_item(i, config.seed, config.out_root)
        return i, _forge_item(src, tasks, config.seed, i, config.out_root)

    results = [None] * len(jobs)
    if config.workers <= 1:
        for job in jobs:
            i, trip = run(job)
            results[i] = trip
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            for i, trip in pool.map(run, jobs):
                results[i] = trip
    return results
