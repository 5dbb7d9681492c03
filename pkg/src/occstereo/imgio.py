"""
Readers and writers for the file formats stereo datasets ship with.

* PFM (``Pf`` single channel), as distributed with SceneFlow.
* KITTI style 16-bit disparity PNG (value / 256, zero means missing).
* 8-bit RGB / grayscale PNG images, converted to intensities on [0, 1].

Disparity maps are carried as :class:`DisparityMap` (values plus a validity
flag per pixel). Intensity images are plain float64 ``(H, W)`` arrays.
"""
import re
from dataclasses import dataclass

import numpy as np
from PIL import Image


class FormatError(ValueError):
    """Raised when a file does not follow the expected on-disk format."""


@dataclass
class DisparityMap:
    """Dense left-view disparity in pixels with per-pixel validity."""

    data: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValueError(f"disparity must be 2-D, got shape {self.data.shape}")
        finite = np.isfinite(self.data)
        if self.valid is None:
            self.valid = finite
        else:
            self.valid = np.asarray(self.valid, dtype=bool) & finite
            if self.valid.shape != self.data.shape:
                raise ValueError("valid flags and data differ in shape")

    @property
    def shape(self):
        return self.data.shape

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    def copy(self):
        return DisparityMap(self.data.copy(), self.valid.copy())

    def filled(self, value=0.0):
        """Return the data with invalid pixels replaced by ``value``."""
        return np.where(self.valid, self.data, value)


@dataclass(frozen=True)
class CameraCalib:
    focal: float  # pixels
    baseline: float  # meters

    def __post_init__(self):
        if not (self.focal > 0 and self.baseline > 0):
            raise ValueError("focal and baseline must be positive")


def as_disparity(obj):
    if isinstance(obj, DisparityMap):
        return obj
    return DisparityMap(np.asarray(obj, dtype=np.float64))


# --------------------------------------------------------------------------
# PFM

def read_pfm(path):
    """Read a single-channel PFM file into a :class:`DisparityMap`.

    Rows come back top-down. NaN and infinite samples are marked invalid.
    Colour (``PF``) files are rejected.
    """
    with open(path, "rb") as f:
        header = f.readline().rstrip()
        if header == b"PF":
            raise FormatError(f"{path}: colour PFM cannot hold a disparity map")
        if header != b"Pf":
            raise FormatError(f"{path}: not a PFM file (header {header!r})")

        line = f.readline()
        # some writers put width and height on separate lines
        while line and not line.strip():
            line = f.readline()
        dims = re.match(rb"^\s*(\d+)\s+(\d+)\s*$", line)
        if dims is None:
            second = f.readline()
            dims = re.match(rb"^\s*(\d+)\s+(\d+)\s*$", line.strip() + b" " + second.strip())
            if dims is None:
                raise FormatError(f"{path}: malformed PFM dimensions")
        width, height = map(int, dims.groups())

        try:
            scale = float(f.readline().strip())
        except ValueError as exc:
            raise FormatError(f"{path}: malformed PFM scale") from exc
        if scale == 0:
            raise FormatError(f"{path}: PFM scale must be non-zero")
        endian = "<" if scale < 0 else ">"

        raw = f.read()

    count = width * height
    if len(raw) < 4 * count:
        raise FormatError(f"{path}: expected {count} floats, file is truncated")
    data = np.frombuffer(raw, dtype=endian + "f4", count=count).reshape(height, width)
    # PFM stores the bottom row first
    data = np.flipud(data).astype(np.float64)
    return DisparityMap(data)


def write_pfm(disp, path):
    """Write a disparity map (or 2-D array) as little-endian PFM.

    Invalid pixels are stored as +inf so they read back as invalid.
    """
    if isinstance(disp, DisparityMap):
        values = np.where(disp.valid, disp.data, np.inf)
    else:
        values = np.asarray(disp, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("write_pfm expects a single-channel 2-D map")
    height, width = values.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{width} {height}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(np.ascontiguousarray(np.flipud(values), dtype="<f4").tobytes())


# --------------------------------------------------------------------------
# KITTI 16-bit PNG

KITTI_SCALE = 256.0


def read_kitti_disparity_png(path):
    """Read a KITTI disparity PNG: ``disparity = value / 256``, 0 is missing."""
    with Image.open(path) as im:
        if im.mode not in ("I;16", "I;16B", "I;16L", "I"):
            raise FormatError(f"{path}: expected a 16-bit single-channel PNG, got mode {im.mode}")
        raw = np.array(im)
    if raw.ndim != 2:
        raise FormatError(f"{path}: expected a single-channel PNG")
    if raw.dtype != np.uint16:
        if raw.min() < 0 or raw.max() > 65535:
            raise FormatError(f"{path}: values outside the 16-bit range")
        raw = raw.astype(np.uint16)
    valid = raw > 0
    return DisparityMap(raw.astype(np.float64) / KITTI_SCALE, valid)


def write_kitti_disparity_png(disp, path):
    """Write a KITTI disparity PNG. Valid disparities must lie in [0, 256)."""
    disp = as_disparity(disp)
    values = disp.data[disp.valid]
    if values.size and (values.min() < 0 or values.max() >= 256):
        raise ValueError("KITTI PNG can only store disparities in [0, 256)")
    stored = np.zeros(disp.shape, dtype=np.uint16)
    q = np.rint(disp.data[disp.valid] * KITTI_SCALE)
    # a valid zero disparity would otherwise read back as missing
    stored[disp.valid] = np.clip(q, 1, 65535).astype(np.uint16)
    Image.fromarray(stored).save(path)


# --------------------------------------------------------------------------
# 8-bit images

LUMA = np.array([0.299, 0.587, 0.114])


def to_grayscale(rgb):
    """Convert an 8-bit RGB array ``(H, W, 3)`` into intensities on [0, 1]."""
    rgb = np.asarray(rgb)
    if rgb.ndim == 2:
        return np.clip(rgb.astype(np.float64) / 255.0, 0.0, 1.0)
    gray = rgb[..., :3].astype(np.float64) @ LUMA / 255.0
    return np.clip(gray, 0.0, 1.0)


def read_image(path):
    """Read an image as grayscale intensities on [0, 1].

    PFM files are taken as already holding intensities.
    """
    if str(path).lower().endswith(".pfm"):
        return np.clip(read_pfm(path).filled(0.0), 0.0, 1.0)
    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I;16L", "I"):
            return np.clip(np.array(im).astype(np.float64) / 65535.0, 0.0, 1.0)
        if im.mode == "L":
            return to_grayscale(np.array(im))
        return to_grayscale(np.array(im.convert("RGB")))


def write_image(img, path):
    """Write intensities on [0, 1] as an 8-bit grayscale PNG."""
    img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    Image.fromarray(np.rint(img * 255).astype(np.uint8)).save(path)


def read_disparity(path, fmt=None):
    """Dispatch on ``fmt`` or on the file extension (``.pfm`` / ``.png``)."""
    fmt = (fmt or str(path).rsplit(".", 1)[-1]).lower()
    if fmt == "pfm":
        return read_pfm(path)
    if fmt == "png":
        return read_kitti_disparity_png(path)
    raise FormatError(f"unknown disparity format {fmt!r}")


def write_disparity(disp, path, fmt=None):
    fmt = (fmt or str(path).rsplit(".", 1)[-1]).lower()
    if fmt == "pfm":
        write_pfm(disp, path)
    elif fmt == "png":
        write_kitti_disparity_png(disp, path)
    else:
        raise FormatError(f"unknown disparity format {fmt!r}")
