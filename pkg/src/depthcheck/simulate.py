"""Ground-truth material: synthetic scenes, bit refills, a compression stand-in.

Scenes are smooth analytic patterns (gradients, vignettes, flat fields with
a texture patch) plus signal-dependent grain whose amplitude rises with
brightness, the shot-noise shape real sensors produce. Refills rebuild the
two low bits of every sample from the high bits by one of five recipes,
leaving the high bits untouched. The compression stand-in is a blockwise
orthonormal cosine transform with power-of-two quantization steps per
frame type, which supplies realistic per-type size metadata and the
low-bit disturbance of a lossy pass without an encoder dependency.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .config import RunConfig, provenance
from .errors import ConfigError
from .frames import Frame, FrameMeta, FrameType, Plane, VideoSequence
from .ingest import write_frame_metadata, write_y4m

REFILL_KINDS = ("zeros", "noise", "replicate", "dither", "smooth")
# long-form spellings accepted on the command line and in manifests
REFILL_ALIASES = {
    "uniform_noise": "noise",
    "bit_replicate": "replicate",
    "dither_floyd_steinberg": "dither",
    "gaussian_smooth": "smooth",
}
SCENE_KINDS = ("gradient", "vignette", "texture")


@dataclass(frozen=True)
class RefillMethod:
    """One low-bit synthesis recipe.

    kind "noise" draws uniform bits seeded per (seed, frame, plane);
    kind "smooth" blurs the high bits with a gaussian of width sigma.
    """

    kind: str
    seed: int = 0
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if self.kind in REFILL_ALIASES:
            object.__setattr__(self, "kind", REFILL_ALIASES[self.kind])
        if self.kind not in REFILL_KINDS:
            raise ConfigError(f"unknown refill kind {self.kind!r}, expected one of {REFILL_KINDS}")
        if not 0 < self.sigma <= 5:
            raise ConfigError(f"smoothing sigma must be in (0, 5], got {self.sigma}")

    @classmethod
    def parse(cls, text: str) -> "RefillMethod":
        """Parse "kind" or "kind:key=value,key=value" from a CLI argument."""
        kind, _, rest = text.partition(":")
        kw: dict = {}
        if rest:
            for item in rest.split(","):
                key, _, value = item.partition("=")
                if key == "seed":
                    kw["seed"] = int(value)
                elif key == "sigma":
                    kw["sigma"] = float(value)
                else:
                    raise ConfigError(f"unknown refill parameter {key!r}")
        return cls(kind=kind, **kw)


def _refill_plane(samples: np.ndarray, depth: int, method: RefillMethod,
                  frame_idx: int, plane_idx: int) -> np.ndarray:
    high = samples >> 2
    base = samples & ~np.uint16(3)
    if method.kind == "zeros":
        return base
    if method.kind == "noise":
        rng = np.random.default_rng(np.random.SeedSequence([method.seed, frame_idx, plane_idx]))
        return base | rng.integers(0, 4, samples.shape).astype(np.uint16)
    if method.kind == "replicate":
        return base | ((high >> (depth - 4)) & np.uint16(3))
    if method.kind == "smooth":
        blurred = ndimage.gaussian_filter(high.astype(np.float64) * 4.0, method.sigma)
        return base | (np.round(blurred).astype(np.int64) & 3).astype(np.uint16)
    return _dither_plane(high.astype(np.int64), depth)


def _dither_plane(high: np.ndarray, depth: int) -> np.ndarray:
    """Error-diffused re-quantization constrained to keep the high bits."""
    full = (1 << depth) - 1
    high_full = (1 << (depth - 2)) - 1
    target = high * (full / high_full)
    h, w = high.shape
    out = np.zeros((h, w), np.int64)
    err = np.zeros(w + 2, np.float64)  # incoming error for the current row
    for r in range(h):
        next_err = np.zeros(w + 2, np.float64)
        carry = 0.0
        t_row = target[r]
        lo_row = high[r] * 4
        for c in range(w):
            want = t_row[c] + err[c + 1] + carry
            lo = lo_row[c]
            v = min(max(int(round(want)), lo), lo + 3)
            out[r, c] = v
            e = want - v
            carry = e * (7 / 16)
            next_err[c] += e * (3 / 16)
            next_err[c + 1] += e * (5 / 16)
            next_err[c + 2] += e * (1 / 16)
        err = next_err
    return out.astype(np.uint16)


def refill(video: VideoSequence, method: RefillMethod) -> VideoSequence:
    """Replace the two low bits of every sample; high bits are preserved."""
    frames = []
    for fi, frame in enumerate(video.frames):
        planes = []
        for pi, plane in enumerate(frame.planes):
            out = _refill_plane(plane.samples, plane.bit_depth, method, fi, pi)
            planes.append(Plane(out, plane.bit_depth))
        frames.append(Frame(tuple(planes)))
    return VideoSequence(tuple(frames), video.metadata)


@dataclass(frozen=True)
class CompressionProfile:
    """Per-frame-type quantization exponents and the repeating GOP pattern.

    The quantization step for type t is 2**q_t; q 0 leaves pixels alone
    (sizes are still measured). Reference frames must not be quantized
    coarser than the frames predicted from them, hence q_i <= q_p <= q_b.
    """

    q_i: int = 0
    q_p: int = 1
    q_b: int = 2
    gop: str = "IBBP"
    seed: int = 0  # recorded for provenance; the transform itself is deterministic

    def __post_init__(self) -> None:
        for name, q in (("q_i", self.q_i), ("q_p", self.q_p), ("q_b", self.q_b)):
            if not 0 <= q <= 14:
                raise ConfigError(f"{name} must be in [0, 14], got {q}")
        if not (self.q_i <= self.q_p <= self.q_b):
            raise ConfigError(f"need q_i <= q_p <= q_b, got {self.q_i},{self.q_p},{self.q_b}")
        if not self.gop or set(self.gop) - set("IPB") or self.gop.count("I") != 1:
            raise ConfigError(
                f"GOP pattern must be nonempty over I/P/B with exactly one I, got {self.gop!r}"
            )

    def q_for(self, ftype: FrameType) -> int:
        return {FrameType.I: self.q_i, FrameType.P: self.q_p, FrameType.B: self.q_b}[ftype]

    def type_at(self, index: int) -> FrameType:
        return FrameType(self.gop[index % len(self.gop)])

    def to_dict(self) -> dict:
        return {
            "q_i": self.q_i,
            "q_p": self.q_p,
            "q_b": self.q_b,
            "gop": self.gop,
            "seed": self.seed,
        }


def _dct_matrix() -> np.ndarray:
    k = np.arange(8)
    c = np.cos(np.pi * (2 * k[None, :] + 1) * k[:, None] / 16) * np.sqrt(2.0 / 8.0)
    c[0] *= np.sqrt(0.5)
    return c


_DCT = _dct_matrix()


def _transform_plane(samples: np.ndarray, depth: int, q: int) -> tuple[np.ndarray, int]:
    h, w = samples.shape
    hp, wp = -(-h // 8) * 8, -(-w // 8) * 8
    padded = np.pad(samples.astype(np.float64), ((0, hp - h), (0, wp - w)), mode="edge")
    blocks = padded.reshape(hp // 8, 8, wp // 8, 8).transpose(0, 2, 1, 3)
    coefs = np.einsum("ij,abjk,lk->abil", _DCT, blocks, _DCT)
    step = float(1 << q)
    quant = np.round(coefs / step)
    size = int(np.count_nonzero(quant))
    if q == 0:
        return samples, size  # step 1: measure size, leave pixels untouched
    recon = np.einsum("ji,abjk,kl->abil", _DCT, quant * step, _DCT)
    out = recon.transpose(0, 2, 1, 3).reshape(hp, wp)[:h, :w]
    out = np.clip(np.round(out), 0, (1 << depth) - 1).astype(np.uint16)
    return out, size


def simulate_compression(video: VideoSequence, profile: CompressionProfile) -> VideoSequence:
    """Quantize each frame per its GOP type and attach size metadata.

    The returned sequence carries FrameMeta records whose sizes are the
    count of surviving (nonzero) quantized coefficients, a monotone proxy
    for coded bytes.
    """
    frames = []
    metas = []
    for fi, frame in enumerate(video.frames):
        ftype = profile.type_at(fi)
        q = profile.q_for(ftype)
        planes = []
        total = 0
        for plane in frame.planes:
            out, size = _transform_plane(plane.samples, plane.bit_depth, q)
            planes.append(Plane(out, plane.bit_depth))
            total += size
        frames.append(Frame(tuple(planes)))
        metas.append(FrameMeta(index=fi, frame_type=ftype, compressed_size=total))
    return VideoSequence(tuple(frames), tuple(metas))


@dataclass(frozen=True)
class SceneSpec:
    """Recipe for one synthetic clip."""

    kind: str
    width: int = 64
    height: int = 64
    bit_depth: int = 10
    frame_count: int = 10
    grain: float = 0.9
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in SCENE_KINDS:
            raise ConfigError(f"unknown scene kind {self.kind!r}, expected one of {SCENE_KINDS}")
        if self.width % 2 or self.height % 2 or self.width < 16 or self.height < 16:
            raise ConfigError("scene dimensions must be even and at least 16")
        if self.frame_count < 1:
            raise ConfigError("scene needs at least one frame")
        if not 0 <= self.grain <= 4:
            raise ConfigError(f"grain must be in [0, 4], got {self.grain}")


def _scene_base(kind: str, w: int, h: int, full: int, rng: np.random.Generator,
                phase: float) -> np.ndarray:
    u, v = np.meshgrid(np.arange(w) / w, np.arange(h) / h)
    if kind == "gradient":
        theta = rng.uniform(0, np.pi)
        span = rng.uniform(12, 24)
        base = rng.uniform(0.25, 0.7) * full + span * (
            u * np.cos(theta) + v * np.sin(theta) + phase
        )
        for _ in range(3):
            cx, cy = rng.uniform(0.1, 0.9, 2)
            r0 = rng.uniform(0.1, 0.25)
            base = base + rng.uniform(4, 10) * np.exp(
                -((u - cx) ** 2 + (v - cy) ** 2) / (2 * r0**2)
            )
        return base
    if kind == "vignette":
        cx, cy = rng.uniform(0.4, 0.6, 2)
        r2 = (u - cx) ** 2 + (v - cy) ** 2
        return (
            rng.uniform(0.3, 0.75) * full
            - rng.uniform(10, 18) * r2 / (r2.max() + 1e-9) * 4
            + 6 * np.sin(2 * np.pi * (u * 1.5 + phase))
        )
    base = np.full((h, w), rng.uniform(0.3, 0.7) * full)
    base[v > rng.uniform(0.4, 0.6)] += rng.uniform(6, 14)
    cx, cy = rng.uniform(0.25, 0.75, 2)
    r0 = rng.uniform(0.15, 0.35)
    sigma_field = rng.uniform(4, 18)  # broadband detail energy varies widely per scene
    field = ndimage.gaussian_filter(rng.standard_normal((h, w)), 0.7) * sigma_field
    mask = np.exp(-((u - cx - 0.15 * phase) ** 2 + (v - cy) ** 2) / (2 * r0**2))
    return base + mask * field


def _scene_plane(kind: str, w: int, h: int, depth: int, grain: float,
                 prng: np.random.Generator, nrng: np.random.Generator,
                 phase: float, chroma: bool) -> np.ndarray:
    full = (1 << depth) - 1
    base = _scene_base(kind, w, h, full, prng, phase)
    if chroma:
        base = 0.5 * full + 0.3 * (base - base.mean())  # chroma sits near mid-scale
    span = base.max() - base.min()
    bn = (base - base.min()) / (span + 1e-9)
    sigma = grain * (0.25 + 0.75 * bn) * (0.7 if chroma else 1.0)
    values = base + sigma * nrng.standard_normal((h, w))
    return np.clip(np.round(values), 0, full).astype(np.uint16)


def synth_scene(spec: SceneSpec) -> VideoSequence:
    """Render a three-plane 4:2:0 clip with native (noisy) low bits.

    Pattern parameters are drawn once per clip, so frames share content
    and only drift slowly with the phase term; the grain field is redrawn
    every frame, which is how sensor noise behaves.
    """
    frames = []
    for fi in range(spec.frame_count):
        phase = 0.03 * fi
        planes = []
        for pi, (w, h) in enumerate(
            [(spec.width, spec.height),
             (spec.width // 2, spec.height // 2),
             (spec.width // 2, spec.height // 2)]
        ):
            prng = np.random.default_rng(np.random.SeedSequence([spec.seed, 17, pi]))
            nrng = np.random.default_rng(np.random.SeedSequence([spec.seed, fi, pi]))
            arr = _scene_plane(spec.kind, w, h, spec.bit_depth, spec.grain,
                               prng, nrng, phase, pi > 0)
            planes.append(Plane(arr, spec.bit_depth))
        frames.append(Frame(tuple(planes)))
    return VideoSequence(tuple(frames))


@dataclass(frozen=True)
class CorpusEntry:
    """One manifest row: a clip on disk plus its label and provenance.

    Paths are resolved against the corpus directory; the manifest itself
    stores bare file names so a corpus directory can be moved wholesale.
    """

    path: Path
    meta_path: Path | None
    label: int
    group: str
    method: str | None
    profile: dict | None

    def to_row(self) -> dict:
        return {
            "path": self.path.name,
            "meta_path": self.meta_path.name if self.meta_path else None,
            "label": self.label,
            "group": self.group,
            "method": self.method,
            "profile": self.profile,
        }


def build_corpus(
    out_dir: str | Path,
    scenes: list[SceneSpec],
    methods: list[RefillMethod],
    profile: CompressionProfile | None = None,
    config: RunConfig | None = None,
) -> list[CorpusEntry]:
    """Write native and refilled variants of each scene, plus manifest.json.

    Each scene becomes one group holding a native clip (label 0) and one
    clip per refill method (label 1). With a compression profile, every
    clip is quantized and gains a CSV sidecar with per-frame types and
    sizes.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = config or RunConfig()
    entries = []
    for si, spec in enumerate(scenes):
        group = f"scene{si:03d}"
        native = synth_scene(spec)
        variants: list[tuple[str, VideoSequence, str | None]] = [("native", native, None)]
        for method in methods:
            variants.append((method.kind, refill(native, method), method.kind))
        for variant_name, clip, method_name in variants:
            if profile is not None:
                clip = simulate_compression(clip, profile)
            stem = f"{group}_{variant_name}"
            clip_path = out / f"{stem}.y4m"
            clip_path.write_bytes(write_y4m(clip))
            meta_path = None
            if clip.metadata is not None:
                meta_path = out / f"{stem}.csv"
                meta_path.write_text(write_frame_metadata(clip.metadata))
            entries.append(
                CorpusEntry(
                    path=clip_path,
                    meta_path=meta_path,
                    label=0 if method_name is None else 1,
                    group=group,
                    method=method_name,
                    profile=profile.to_dict() if profile else None,
                )
            )
    manifest = {
        "provenance": provenance(config),
        "entries": [entry.to_row() for entry in entries],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return entries


def load_manifest(path: str | Path) -> list[CorpusEntry]:
    """Read a corpus manifest, resolving file names against its directory."""
    path = Path(path)
    doc = json.loads(path.read_text())
    root = path.parent
    entries = []
    for row in doc["entries"]:
        entries.append(
            CorpusEntry(
                path=root / row["path"],
                meta_path=root / row["meta_path"] if row.get("meta_path") else None,
                label=int(row["label"]),
                group=row["group"],
                method=row.get("method"),
                profile=row.get("profile"),
            )
        )
    return entries
