"""
Synthetic rectified stereo pairs made of fronto-parallel textured layers.

Every layer is an axis-aligned rectangle at one integer disparity, painted
over a full-frame background.  Because the geometry is this simple the left
disparity and the occlusion labels are known exactly.

Scene description format, one item per line (``#`` starts a comment)::

    size 64 48
    background disparity=2 texture=noise seed=1 smoothness=1.5
    layer x=20 y=10 w=20 h=24 disparity=8 texture=checker period=4
    layer x=40 y=5 w=12 h=12 disparity=11 texture=gradient

Textures: ``noise`` (``seed``, ``smoothness``), ``checker`` (``period``),
``gradient``.  Any texture accepts ``low=`` and ``high=`` to set its
intensity range (default 0.05 to 0.95).
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from .geometry import Label, OcclusionMask
from .imgio import DisparityMap

TEXTURES = ("noise", "checker", "gradient")


class SceneError(ValueError):
    """Invalid scene description."""


@dataclass
class Texture:
    kind: str = "noise"
    seed: int = 0
    smoothness: float = 1.0
    period: int = 4
    low: float = 0.05              # intensity range of the texture
    high: float = 0.95

    def validate(self):
        if self.kind not in TEXTURES:
            raise SceneError(f"unknown texture {self.kind!r}")
        if self.smoothness < 0:
            raise SceneError("noise smoothness must be >= 0")
        if self.period < 1:
            raise SceneError("checker period must be >= 1")
        if not 0.0 <= self.low < self.high <= 1.0:
            raise SceneError("texture range must satisfy 0 <= low < high <= 1")


@dataclass
class Layer:
    x: int
    y: int
    w: int
    h: int
    disparity: int
    texture: Texture = field(default_factory=Texture)


@dataclass
class Background:
    disparity: int = 0
    texture: Texture = field(default_factory=Texture)


@dataclass
class SceneSpec:
    width: int
    height: int
    layers: list = field(default_factory=list)
    background: Background = field(default_factory=Background)

    def validate(self):
        if self.width < 1 or self.height < 1:
            raise SceneError("scene size must be positive")
        bg = self.background
        if int(bg.disparity) != bg.disparity or bg.disparity < 0:
            raise SceneError("background disparity must be a non-negative integer")
        bg.texture.validate()
        for i, layer in enumerate(self.layers):
            if int(layer.disparity) != layer.disparity:
                raise SceneError(f"layer {i}: disparity must be an integer")
            if layer.disparity <= bg.disparity:
                raise SceneError(f"layer {i}: disparity must exceed the background's")
            if layer.w < 1 or layer.h < 1:
                raise SceneError(f"layer {i}: empty rectangle")
            if layer.x < 0 or layer.y < 0 or layer.x + layer.w > self.width \
                    or layer.y + layer.h > self.height:
                raise SceneError(f"layer {i}: rectangle leaves the image")
            # a narrower layer can hide, in the left view, the surface that
            # occludes a pixel in the right view; no single disparity map
            # can reveal that occluder
            if layer.w <= layer.disparity - bg.disparity:
                raise SceneError(f"layer {i}: width must exceed its disparity step "
                                 f"({layer.disparity - bg.disparity} px)")
            layer.texture.validate()
        return self

    @property
    def max_disparity(self):
        return max([self.background.disparity] + [l.disparity for l in self.layers])


@dataclass
class SceneRender:
    left: np.ndarray
    right: np.ndarray
    gt_disp: DisparityMap
    gt_mask: OcclusionMask


def _texture_field(tex, height, width, rng):
    yy, xx = np.mgrid[:height, :width]
    if tex.kind == "checker":
        unit = np.where(((xx // tex.period) + (yy // tex.period)) % 2 == 0, 0.0, 1.0)
    elif tex.kind == "gradient":
        unit = xx / max(width - 1, 1)
    else:
        noise = rng.standard_normal((height, width))
        if tex.smoothness > 0:
            noise = gaussian_filter(noise, tex.smoothness, mode="wrap")
        lo, hi = noise.min(), noise.max()
        unit = np.full((height, width), 0.5) if hi - lo < 1e-12 else (noise - lo) / (hi - lo)
    return tex.low + (tex.high - tex.low) * unit


def _depth_order(spec):
    # painter's order: far to near, list order breaks ties
    return sorted(range(len(spec.layers)), key=lambda i: (spec.layers[i].disparity, i))


def render(spec, seed=0):
    """Render left/right images, left disparity and occlusion labels."""
    spec.validate()
    h, w = spec.height, spec.width
    pad = spec.max_disparity
    bg = spec.background

    def rng_for(tex, index):
        return np.random.default_rng([seed, tex.seed, index + 1])

    fields = [_texture_field(l.texture, h, w + pad, rng_for(l.texture, i + 1))
              for i, l in enumerate(spec.layers)]
    bg_field = _texture_field(bg.texture, h, w + pad, rng_for(bg.texture, 0))

    # textures live in left-image coordinates: right pixel x shows x + d
    left = bg_field[:, :w].copy()
    right = bg_field[:, bg.disparity:bg.disparity + w].copy()
    disp = np.full((h, w), float(bg.disparity))
    right_top = np.full((h, w), float(bg.disparity))

    for i in _depth_order(spec):
        layer, tex = spec.layers[i], fields[i]
        ys = slice(layer.y, layer.y + layer.h)
        xs = slice(layer.x, layer.x + layer.w)
        left[ys, xs] = tex[ys, xs]
        disp[ys, xs] = layer.disparity

        d = layer.disparity
        x0, x1 = max(layer.x - d, 0), layer.x + layer.w - d
        if x1 > x0:
            right[ys, x0:x1] = tex[ys, x0 + d:x1 + d]
            right_top[ys, x0:x1] = d

    u = np.arange(w)[None, :]
    target = (u - disp).astype(np.int64)
    labels = np.zeros((h, w), dtype=np.int8)
    exclusive = target < 0
    rows = np.arange(h)[:, None].repeat(w, axis=1)
    seen = right_top[rows, np.clip(target, 0, w - 1)]
    labels[~exclusive & (seen > disp)] = Label.OCCLUDED
    labels[exclusive] = Label.EXCLUSIVE

    return SceneRender(left, right, DisparityMap(disp), OcclusionMask(labels))


def random_scene(rng, width=64, height=48, n_layers=(1, 3), max_disp=12,
                 textures=("noise",), contrast=0.0, margin=0):
    """Draw a valid random scene; ``rng`` is a numpy Generator.

    ``contrast`` in [0, 1) separates the intensity ranges of background and
    layers: the background keeps the dark end and the layers the bright end,
    each spanning ``1 - contrast`` of the full range.  Layers start at
    least ``margin`` columns from the left border.
    """
    if not 0.0 <= contrast < 1.0:
        raise ValueError("contrast must lie in [0, 1)")
    span = (Texture.high - Texture.low) * (1.0 - contrast)
    dark = (Texture.low, Texture.low + span)
    bright = (Texture.high - span, Texture.high)
    bg_disp = int(rng.integers(0, 3))
    bg = Background(bg_disp, Texture("noise", int(rng.integers(1 << 16)),
                                     float(rng.uniform(0.5, 1.5)), 4, *dark))
    layers = []
    for _ in range(int(rng.integers(n_layers[0], n_layers[1] + 1))):
        d = int(rng.integers(bg_disp + 1, max_disp + 1))
        min_w = d - bg_disp + 1
        if min_w > width:
            continue
        lw = int(rng.integers(min_w, max(min_w + 1, width // 2)))
        lw = min(lw, width)
        lh = int(rng.integers(max(1, height // 6), max(2, height // 2)))
        if margin + lw > width:
            continue
        x = int(rng.integers(margin, width - lw + 1))
        y = int(rng.integers(0, height - lh + 1))
        kind = str(rng.choice(list(textures)))
        tex = Texture(kind, int(rng.integers(1 << 16)), float(rng.uniform(0.5, 1.5)),
                      int(rng.integers(2, 6)), *bright)
        layers.append(Layer(x, y, lw, lh, d, tex))
    return SceneSpec(width, height, layers, bg).validate()


# --------------------------------------------------------------------------
# text format

_TEX_KEYS = {"texture", "seed", "smoothness", "period", "low", "high"}


def _parse_kv(tokens, lineno):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise SceneError(f"line {lineno}: expected key=value, got {tok!r}")
        key, value = tok.split("=", 1)
        out[key] = value
    return out


def _texture_from(kv, lineno):
    try:
        return Texture(kind=kv.get("texture", "noise"),
                       seed=int(kv.get("seed", 0)),
                       smoothness=float(kv.get("smoothness", 1.0)),
                       period=int(kv.get("period", 4)),
                       low=float(kv.get("low", 0.05)),
                       high=float(kv.get("high", 0.95)))
    except ValueError as exc:
        raise SceneError(f"line {lineno}: {exc}") from None


def parse_scene(text):
    """Parse the line-based scene format into a validated :class:`SceneSpec`."""
    size = None
    background = Background()
    layers = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        try:
            if head == "size":
                if len(rest) != 2:
                    raise SceneError(f"line {lineno}: size takes width and height")
                size = (int(rest[0]), int(rest[1]))
            elif head == "background":
                kv = _parse_kv(rest, lineno)
                unknown = set(kv) - _TEX_KEYS - {"disparity"}
                if unknown:
                    raise SceneError(f"line {lineno}: unknown keys {sorted(unknown)}")
                background = Background(int(kv.get("disparity", 0)), _texture_from(kv, lineno))
            elif head == "layer":
                kv = _parse_kv(rest, lineno)
                unknown = set(kv) - _TEX_KEYS - {"x", "y", "w", "h", "disparity"}
                if unknown:
                    raise SceneError(f"line {lineno}: unknown keys {sorted(unknown)}")
                missing = {"x", "y", "w", "h", "disparity"} - set(kv)
                if missing:
                    raise SceneError(f"line {lineno}: missing {sorted(missing)}")
                layers.append(Layer(int(kv["x"]), int(kv["y"]), int(kv["w"]), int(kv["h"]),
                                    int(kv["disparity"]), _texture_from(kv, lineno)))
            else:
                raise SceneError(f"line {lineno}: unknown statement {head!r}")
        except ValueError as exc:
            if isinstance(exc, SceneError):
                raise
            raise SceneError(f"line {lineno}: {exc}") from None
    if size is None:
        raise SceneError("missing 'size' line")
    return SceneSpec(size[0], size[1], layers, background).validate()


def _format_texture(tex):
    return (f"texture={tex.kind} seed={tex.seed} smoothness={tex.smoothness!r} "
            f"period={tex.period} low={tex.low!r} high={tex.high!r}")


def format_scene(spec):
    lines = [f"size {spec.width} {spec.height}",
             f"background disparity={spec.background.disparity} "
             + _format_texture(spec.background.texture)]
    for l in spec.layers:
        lines.append(f"layer x={l.x} y={l.y} w={l.w} h={l.h} disparity={l.disparity} "
                     + _format_texture(l.texture))
    return "\n".join(lines) + "\n"


def load_scene(path):
    with open(path) as f:
        return parse_scene(f.read())
