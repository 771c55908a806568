"""Deterministic procedural image corpora.

Stand-ins for the 28x28 grayscale sets the experiments expect: garment
silhouettes, handwritten-style stroke glyphs, and cursive / angular script
variants with visibly different statistics. They let the whole pipeline,
including the benchmark experiments, run offline when no user-supplied IDX
files are present, and they source the small committed CI fixture.

Generation is seeded and reproducible; class structure comes from fixed
per-family template banks so the corpora have a stable low-dimensional
manifold for the reconstruction nets to learn.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .dataset import ImageSet, find_idx, load_image_set
from .dataset import split as split_set

SIDE = 28

_R0, _C0 = np.mgrid[0:SIDE, 0:SIDE].astype(np.float64)

# fixed template-bank seeds; changing these redefines the surrogate classes
_TEMPLATE_SEED = {"digits": 101, "cursive": 202, "angular": 303}
_FAMILY_KEY = {"digits": 1, "cursive": 2, "angular": 3, "garments": 4}

_FAMILY_SPECS = {
    "digits": dict(
        classes=10, strokes=(1, 3), anchors=(3, 5), lo=6.5, hi=21.5,
        closed_p=0.25, width=(1.05, 0.10), jitter=0.9, smooth=True, dots=0,
    ),
    "cursive": dict(
        classes=10, strokes=(1, 2), anchors=(5, 7), lo=4.5, hi=23.5,
        closed_p=0.10, width=(1.25, 0.28), jitter=1.5, smooth=True, dots=0,
    ),
    "angular": dict(
        classes=10, strokes=(1, 2), anchors=(3, 4), lo=6.0, hi=22.0,
        closed_p=0.0, width=(1.10, 0.12), jitter=0.9, smooth=False, dots=3,
    ),
}

# garment shading and fabric-pattern calibration
_GARMENT_BASE = (0.70, 1.00)
_GARMENT_TILT = 0.40
_GARMENT_TEXTURE = 0.08
_PATTERN_P = 1.0            # every garment carries a print
_PATTERN_CONTRAST = (0.45, 1.05)
_PATTERN_FREQ = (2.5, 5.5)  # cycles across the canvas
_PATTERN_SQUARE_P = 0.5     # hard-edged stripes vs smooth gratings
_PATTERN_BLUR = 0.6         # defocus sigma applied to the shaded garment
_BLOCK_P = 0.5              # fraction carrying a color-block split
_BLOCK_LEVELS = (0.45, 1.0)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(key)))
    )


# ---------------------------------------------------------------- strokes

def _quad_bezier(p0, ctrl, p1, k: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, k)[:, None]
    return (1 - t) ** 2 * p0 + 2 * t * (1 - t) * ctrl + t**2 * p1


def _smooth_path(anchors: np.ndarray, closed: bool, per_seg: int = 12) -> np.ndarray:
    """Rounded path through anchors: quadratic arcs between edge midpoints."""
    a = np.asarray(anchors, dtype=np.float64)
    if closed:
        nxt = np.roll(a, -1, axis=0)
        mids = (a + nxt) / 2.0
        segs = [
            _quad_bezier(mids[i - 1], a[i], mids[i], per_seg) for i in range(len(a))
        ]
        return np.concatenate(segs, axis=0)
    if len(a) == 2:
        t = np.linspace(0.0, 1.0, 2 * per_seg)[:, None]
        return a[0] * (1 - t) + a[1] * t
    mids = (a[:-1] + a[1:]) / 2.0
    segs = [np.linspace(a[0], mids[0], per_seg)]
    segs += [
        _quad_bezier(mids[i - 1], a[i], mids[i], per_seg) for i in range(1, len(a) - 1)
    ]
    segs.append(np.linspace(mids[-1], a[-1], per_seg))
    return np.concatenate(segs, axis=0)


def _polyline(anchors: np.ndarray, per_seg: int = 12) -> np.ndarray:
    a = np.asarray(anchors, dtype=np.float64)
    segs = [np.linspace(a[i], a[i + 1], per_seg) for i in range(len(a) - 1)]
    return np.concatenate(segs, axis=0)


def _ink(points: np.ndarray, width: float) -> np.ndarray:
    """Soft-edged pen stroke: distance to the sampled path, ramped."""
    d2 = (_R0[..., None] - points[:, 0]) ** 2 + (_C0[..., None] - points[:, 1]) ** 2
    d = np.sqrt(d2.min(axis=-1))
    return np.clip((width - d) / 0.9 + 0.5, 0.0, 1.0)


def _family_templates(family: str) -> list:
    """Fixed per-class stroke layouts; independent of the sampling seed."""
    spec = _FAMILY_SPECS[family]
    bank = []
    for cls in range(spec["classes"]):
        rng = _rng(_TEMPLATE_SEED[family], cls)
        n_strokes = int(rng.integers(spec["strokes"][0], spec["strokes"][1] + 1))
        strokes = []
        for _ in range(n_strokes):
            k = int(rng.integers(spec["anchors"][0], spec["anchors"][1] + 1))
            anchors = rng.uniform(spec["lo"], spec["hi"], size=(k, 2))
            closed = bool(rng.random() < spec["closed_p"])
            strokes.append((anchors, closed))
        dots = []
        for _ in range(int(rng.integers(0, spec["dots"] + 1)) if spec["dots"] else 0):
            dots.append(rng.uniform(spec["lo"], spec["hi"], size=2))
        bank.append((strokes, dots))
    return bank


def _affine_points(pts: np.ndarray, theta: float, scale, shift) -> np.ndarray:
    rot = np.array(
        [[np.cos(theta), np.sin(theta)], [-np.sin(theta), np.cos(theta)]]
    )
    centered = (pts - 13.5) @ rot.T
    return centered * np.asarray(scale) + 13.5 + np.asarray(shift)


def stroke_glyphs(n: int, seed: int = 0, family: str = "digits") -> np.ndarray:
    """(n, 28, 28) glyph images in [0, 1] drawn from a fixed class bank.

    ``digits`` gives compact smooth strokes, ``cursive`` longer wandering
    ones with heavier width variation, ``angular`` straight segments plus
    diacritic dots. Values are snapped to the uint8 grid so surrogate and
    file-loaded images share one representation.
    """
    spec = _FAMILY_SPECS[family]
    bank = _family_templates(family)
    rng = _rng(seed, _FAMILY_KEY[family])
    out = np.empty((n, SIDE, SIDE), dtype=np.float64)
    for i in range(n):
        cls = int(rng.integers(0, spec["classes"]))
        strokes, dots = bank[cls]
        theta = rng.normal(0.0, 0.09)
        scale = np.clip(rng.normal(1.0, 0.07, size=2), 0.75, 1.25)
        shift = rng.normal(0.0, 1.1, size=2)
        img = np.zeros((SIDE, SIDE), dtype=np.float64)
        for anchors, closed in strokes:
            a = anchors + rng.normal(0.0, spec["jitter"], size=anchors.shape)
            pts = _smooth_path(a, closed) if spec["smooth"] else _polyline(a)
            pts = _affine_points(pts, theta, scale, shift)
            width = float(np.clip(rng.normal(*spec["width"]), 0.6, 2.2))
            if family == "cursive":
                # taper: thicker over the first half of the path
                half = len(pts) // 2
                img = np.maximum(img, _ink(pts[:half], width * 1.15))
                img = np.maximum(img, _ink(pts[half:], width * 0.8))
            else:
                img = np.maximum(img, _ink(pts, width))
        for dot in dots:
            p = _affine_points(dot[None, :] + rng.normal(0.0, 0.5, size=2), theta, scale, shift)
            img = np.maximum(img, _ink(p, 0.9))
        out[i] = img
    return np.round(out * 255.0) / 255.0


# ---------------------------------------------------------------- garments

def _ramp(x: np.ndarray, soft: float) -> np.ndarray:
    return np.clip(x / soft + 0.5, 0.0, 1.0)


def _box(r, c, r0, r1, c0, c1, soft=0.9):
    return (
        _ramp(r - r0, soft)
        * _ramp(r1 - r, soft)
        * _ramp(c - c0, soft)
        * _ramp(c1 - c, soft)
    )


def _ellipse(r, c, rc, cc, ra, ca, soft=0.30):
    v = 1.0 - ((r - rc) / ra) ** 2 - ((c - cc) / ca) ** 2
    return np.clip(v / soft, 0.0, 1.0)


def _jittered_grid(rng: np.random.Generator):
    """Affine-perturbed sampling grid: evaluates shapes under a small
    per-sample rotation/scale/translation."""
    theta = rng.normal(0.0, 0.07)
    sr = 1.0 / float(np.clip(rng.normal(1.0, 0.06), 0.8, 1.2))
    sc = 1.0 / float(np.clip(rng.normal(1.0, 0.06), 0.8, 1.2))
    dr, dc = rng.normal(0.0, 1.2, size=2)
    rr = _R0 - 13.5 - dr
    cc = _C0 - 13.5 - dc
    r = (np.cos(theta) * rr + np.sin(theta) * cc) * sr + 13.5
    c = (-np.sin(theta) * rr + np.cos(theta) * cc) * sc + 13.5
    return r, c


def _garment_mask(cls: int, r, c, rng: np.random.Generator) -> np.ndarray:
    if cls == 0:  # short-sleeve top
        sl = rng.uniform(3.5, 5.5)
        torso = _box(r, c, 6.5, 24.0, 9.0, 19.0)
        arms = np.maximum(
            _box(r, c, 7.0, 12.5, 9.0 - sl, 10.5), _box(r, c, 7.0, 12.5, 17.5, 19.0 + sl)
        )
        neck = _ellipse(r, c, 6.0, 14.0, 2.4, 3.2)
        return np.maximum(torso, arms) * (1.0 - 0.85 * neck)
    if cls == 1:  # trousers
        gap = rng.uniform(1.2, 2.2)
        waist = _box(r, c, 5.5, 10.0, 9.0, 19.0)
        left = _box(r, c, 9.0, 24.5, 9.0, 14.0 - gap)
        right = _box(r, c, 9.0, 24.5, 14.0 + gap, 19.0)
        return np.maximum(waist, np.maximum(left, right))
    if cls == 2:  # dress: widening trapezoid
        flare = rng.uniform(3.5, 5.5)
        half = 3.0 + flare * np.clip((r - 6.0) / 18.0, 0.0, 1.0)
        body = _ramp(half - np.abs(c - 14.0), 0.9) * _ramp(r - 5.5, 0.9) * _ramp(24.5 - r, 0.9)
        return body
    if cls == 3:  # handbag with handle
        body = _box(r, c, 11.0, 23.0, 6.5, 21.5)
        d = np.sqrt((r - 11.0) ** 2 + (c - 14.0) ** 2)
        ring = np.clip((1.1 - np.abs(d - rng.uniform(4.0, 5.5))) / 0.9 + 0.5, 0.0, 1.0)
        return np.maximum(body, ring * (r < 11.5))
    if cls == 4:  # ankle shoe
        sole = _ellipse(r, c, 19.5, 13.0, 5.5, 10.0) * _ramp(r - 14.0, 0.9)
        ankle = _box(r, c, 10.0, 17.0, 16.0, 22.0)
        return np.maximum(sole, ankle)
    # cls == 5: long-sleeve pullover
    sl = rng.uniform(13.0, 16.0)
    torso = _box(r, c, 6.5, 24.0, 9.5, 18.5)
    arms = np.maximum(
        _box(r, c, 7.0, 7.0 + sl, 5.0, 9.5), _box(r, c, 7.0, 7.0 + sl, 18.5, 23.0)
    )
    neck = _ellipse(r, c, 6.0, 14.0, 2.2, 3.0)
    return np.maximum(torso, arms) * (1.0 - 0.85 * neck)


def garments(n: int, seed: int = 0) -> np.ndarray:
    """(n, 28, 28) filled garment silhouettes in [0, 1] with shading.

    Six shape classes (tops, trousers, dresses, bags, shoes, pullovers)
    under small affine jitter, with a lateral shading tilt, a striped
    fabric print on every garment, and an optional two-tone color block.
    A slight defocus softens print edges to the resolution a 28 px photo
    of real fabric would show. Fill statistics sit near the filled-object
    regime of the garment datasets these stand in for.
    """
    rng = _rng(seed, _FAMILY_KEY["garments"])
    out = np.empty((n, SIDE, SIDE), dtype=np.float64)
    for i in range(n):
        cls = int(rng.integers(0, 6))
        r, c = _jittered_grid(rng)
        mask = _garment_mask(cls, r, c, rng)
        base = rng.uniform(*_GARMENT_BASE)
        tilt = rng.uniform(-_GARMENT_TILT, _GARMENT_TILT)
        fr, fc = rng.uniform(0.5, 2.0, size=2)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        tex = 1.0 + _GARMENT_TEXTURE * np.sin(
            2.0 * np.pi * (fr * _R0 + fc * _C0) / SIDE + phase
        )
        img = mask * base * (1.0 + tilt * (_C0 - 13.5) / 13.5) * tex
        if rng.random() < _PATTERN_P:
            img *= _fabric_pattern(rng)
        if rng.random() < _BLOCK_P:
            img *= _color_blocks(rng)
        out[i] = np.clip(img, 0.0, 1.0)
    out = gaussian_filter(out, sigma=(0.0, _PATTERN_BLUR, _PATTERN_BLUR))
    return np.round(np.clip(out, 0.0, 1.0) * 255.0) / 255.0


def _color_blocks(rng: np.random.Generator) -> np.ndarray:
    """Two-tone split at a random oblique line: asymmetric low-frequency
    structure a reconstructor cannot infer from shape class alone."""
    angle = rng.uniform(0.0, np.pi)
    offset = rng.uniform(-4.0, 4.0)
    coord = np.cos(angle) * (_R0 - 13.5) + np.sin(angle) * (_C0 - 13.5) - offset
    lo, hi = rng.uniform(*_BLOCK_LEVELS, size=2)
    edge = np.clip(coord / 1.5 + 0.5, 0.0, 1.0)  # soft boundary
    return lo + (hi - lo) * edge


def _fabric_pattern(rng: np.random.Generator) -> np.ndarray:
    """Multiplicative print: a grating at random angle/frequency/contrast.

    Half the prints are hard-edged stripes, half smooth; this is the main
    per-sample variability a reconstructor cannot guess from the silhouette
    alone, so it controls how hard the corpus is to invert.
    """
    contrast = rng.uniform(*_PATTERN_CONTRAST)  # >1 lets dark stripes hit black
    freq = rng.uniform(*_PATTERN_FREQ)
    angle = rng.uniform(0.0, np.pi)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    carrier = np.sin(
        2.0 * np.pi * freq * (np.cos(angle) * _R0 + np.sin(angle) * _C0) / SIDE + phase
    )
    if rng.random() < _PATTERN_SQUARE_P:
        carrier = np.tanh(4.0 * carrier)  # near-square stripes, soft edges
    return 1.0 + contrast * carrier


# ---------------------------------------------------------------- corpora

_BUILDERS = {
    "mnist-digits": lambda n, seed: stroke_glyphs(n, seed, family="digits"),
    "kuzushiji": lambda n, seed: stroke_glyphs(n, seed, family="cursive"),
    "arabic": lambda n, seed: stroke_glyphs(n, seed, family="angular"),
    "fashion": garments,
}


def surrogate(name: str, n: int, seed: int = 0) -> np.ndarray:
    """Procedural images for the named dataset; (n, 28, 28) in [0, 1]."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ValueError(f"no surrogate for {name!r}; known: {sorted(_BUILDERS)}") from None
    return builder(n, seed)


def ci_fixture(n: int = 20) -> np.ndarray:
    """The committed test fixture: n digit-family glyphs as uint8."""
    return (stroke_glyphs(n, seed=7, family="digits") * 255.0).astype(np.uint8)


def load_corpus(
    name: str, n_train: int, n_test: int, seed: int = 0
) -> tuple[ImageSet, ImageSet, str]:
    """Disjoint train/test sets plus a provenance string.

    Prefers a user-supplied IDX file (both subsets are carved from the
    train-split file with a seeded shuffle, so they are disjoint by
    construction); otherwise falls back to the procedural surrogate.
    """
    path = find_idx(name, "train")
    if path is not None:
        full = load_image_set(path, name, "train")
        train, test = split_set(full, n_train, n_test, seed)
        return train, test, f"user-supplied IDX ({path})"
    imgs = surrogate(name, n_train + n_test, seed)
    train = ImageSet(name=name, images=imgs[:n_train], split="train")
    test = ImageSet(name=name, images=imgs[n_train:], split="test")
    return train, test, f"procedural surrogate (no IDX files found for {name!r})"
