"""Image and artifact I/O.

Formats: 8/16-bit PGM and PNG images (mapped to [0, 1]), raw little-endian
float64 planes with a JSON sidecar, and 16-bit PGM label maps.
"""
import json
import logging
import os
import re
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ArtifactIOError, InvalidInputError

log = logging.getLogger(__name__)


def _fail(path, what):
    return ArtifactIOError(f"{path}: {what}")


def sidecar_path(path):
    return Path(path).with_suffix(".json")


def write_json(path, payload):
    try:
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise _fail(path, exc.strerror or str(exc)) from exc


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise _fail(path, "no such file") from exc
    except (OSError, ValueError) as exc:
        raise _fail(path, f"unreadable JSON ({exc})") from exc


# --- netpbm -----------------------------------------------------------------

_PGM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*(\S+)")


def read_pgm(path, normalize=True):
    """Read a binary (P5) or ASCII (P2) PGM. 16-bit samples are big-endian."""
    try:
        raw = Path(path).read_bytes()
    except FileNotFoundError as exc:
        raise _fail(path, "no such file") from exc
    except OSError as exc:
        raise _fail(path, exc.strerror or str(exc)) from exc
    pos = 0
    header = []
    while len(header) < 4:
        m = _PGM_TOKEN.match(raw, pos)
        if not m:
            raise _fail(path, "truncated PGM header")
        header.append(m.group(1))
        pos = m.end()
    magic, width, height, maxval = header[0], int(header[1]), int(header[2]), int(header[3])
    if magic not in (b"P5", b"P2") or not 0 < maxval < 65536:
        raise _fail(path, "not a grayscale PGM")
    if magic == b"P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        body = raw[pos + 1 : pos + 1 + width * height * dtype.itemsize]
        if len(body) != width * height * dtype.itemsize:
            raise _fail(path, "truncated PGM data")
        data = np.frombuffer(body, dtype=dtype).reshape(height, width)
    else:
        data = np.array(raw[pos:].split()[: width * height], dtype=np.int64).reshape(height, width)
    data = data.astype(np.float64 if normalize else np.int64)
    return data / maxval if normalize else data


def write_pgm(path, data, maxval=None):
    """Write integer samples as binary PGM (16-bit when ``maxval > 255``)."""
    data = np.asarray(data)
    if data.ndim != 2:
        raise InvalidInputError("PGM data must be 2D")
    maxval = int(data.max()) if maxval is None else int(maxval)
    maxval = max(maxval, 1)
    if data.min() < 0 or data.max() > maxval or maxval > 65535:
        raise InvalidInputError("PGM samples out of range")
    dtype = ">u2" if maxval > 255 else "u1"
    h, w = data.shape
    try:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n{maxval}\n".encode())
            fh.write(np.ascontiguousarray(data, dtype=dtype).tobytes())
    except OSError as exc:
        raise _fail(path, exc.strerror or str(exc)) from exc


def write_label_map(path, labels):
    """Labels as a 16-bit PGM (maxval forced above 255)."""
    write_pgm(path, labels, maxval=max(256, int(np.max(labels))))


# --- raw float64 --------------------------------------------------------------


def write_raw(path, plane, **meta):
    plane = np.asarray(plane, dtype=np.float64)
    try:
        Path(path).write_bytes(np.ascontiguousarray(plane, dtype="<f8").tobytes())
    except OSError as exc:
        raise _fail(path, exc.strerror or str(exc)) from exc
    write_json(sidecar_path(path), {"height": plane.shape[0], "width": plane.shape[1], "dtype": "<f8", **meta})


def read_raw(path, height=None, width=None):
    if height is None or width is None:
        meta = read_json(sidecar_path(path))
        height, width = meta["height"], meta["width"]
    try:
        buf = Path(path).read_bytes()
    except FileNotFoundError as exc:
        raise _fail(path, "no such file") from exc
    if len(buf) != 8 * height * width:
        raise _fail(path, f"expected {8 * height * width} bytes, found {len(buf)}")
    return np.frombuffer(buf, dtype="<f8").reshape(height, width).astype(np.float64)


def write_raw_complex(spectrum, path, layout="centered"):
    """Complex plane as interleaved (re, im) little-endian float64 pairs."""
    spectrum = np.asarray(spectrum, dtype=np.complex128)
    try:
        Path(path).write_bytes(np.ascontiguousarray(spectrum, dtype="<c16").tobytes())
    except OSError as exc:
        raise _fail(path, exc.strerror or str(exc)) from exc
    write_json(sidecar_path(path), {"height": spectrum.shape[0], "width": spectrum.shape[1], "layout": layout})


def read_raw_complex(path):
    meta = read_json(sidecar_path(path))
    buf = Path(path).read_bytes()
    return np.frombuffer(buf, dtype="<c16").reshape(meta["height"], meta["width"]).astype(np.complex128)


# --- images -------------------------------------------------------------------


def read_image(path):
    """Grayscale image as float64 in [0, 1].

    ``.pgm``/``.pnm`` go through the PGM reader, ``.f64`` through its JSON
    sidecar (values kept as stored), anything else through Pillow.
    """
    path = Path(path)
    if not path.exists():
        raise _fail(path, "no such file")
    suffix = path.suffix.lower()
    if suffix in (".pgm", ".pnm"):
        return read_pgm(path)
    if suffix == ".f64":
        return read_raw(path)
    try:
        with Image.open(path) as im:
            if im.mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im, dtype=np.float64)
                return arr / (65535.0 if arr.max() > 255 or im.mode.startswith("I;16") else 255.0)
            if im.mode != "L":
                log.warning("%s: converting %s image to grayscale", path, im.mode)
                im = im.convert("L")
            return np.asarray(im, dtype=np.float64) / 255.0
    except OSError as exc:
        raise _fail(path, f"unreadable image ({exc})") from exc


def quantize8(image):
    return np.round(255.0 * np.clip(image, 0.0, 1.0)).astype(np.uint8)


def write_image(path, image, sidecar=True):
    """Write an 8-bit PNG (or PGM by suffix) plus, optionally, an exact
    float64 copy next to it (``<stem>.f64`` + ``<stem>.json``)."""
    path = Path(path)
    image = np.asarray(image, dtype=np.float64)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() in (".pgm", ".pnm"):
        write_pgm(path, quantize8(image), maxval=255)
    else:
        try:
            Image.fromarray(quantize8(image), mode="L").save(path)
        except (OSError, ValueError) as exc:
            raise _fail(path, f"cannot write image ({exc})") from exc
    if sidecar:
        write_raw(path.with_suffix(".f64"), image)


def ensure_dir(path):
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _fail(path, exc.strerror or str(exc)) from exc
    if not os.access(path, os.W_OK):
        raise _fail(path, "directory not writable")
    return path


# --- artifact sets ------------------------------------------------------------


def save_filters(outdir, bank):
    outdir = ensure_dir(outdir)
    files = []
    for n, phi in enumerate(bank.filters):
        name = f"filter_{n:03d}.f64"
        write_raw(outdir / name, phi, kind="filter", index=n)
        files.append(name)
    h, w = bank.shape
    manifest = {"n_filters": bank.n_filters, "tau": bank.tau, "height": h, "width": w, "bank_ref": bank.ref, "files": files}
    write_json(outdir / "filters.json", manifest)
    return manifest


def load_filters(outdir):
    from .filterbank import FilterBank

    outdir = Path(outdir)
    meta = read_json(outdir / "filters.json")
    planes = np.stack([read_raw(outdir / name, meta["height"], meta["width"]) for name in meta["files"]])
    bank = FilterBank.from_filters(planes, meta["tau"])
    if meta.get("bank_ref") not in (None, bank.ref):
        raise _fail(outdir / "filters.json", "filter files do not match the recorded bank_ref")
    return bank


def save_partition(outdir, partition, stem="partition"):
    outdir = ensure_dir(outdir)
    write_label_map(outdir / f"{stem}.pgm", partition.labels)
    write_json(
        outdir / f"{stem}.json",
        {
            "n_regions": int(partition.n_regions),
            "markers": [[int(k), int(l)] for k, l in partition.markers],
            "paired": bool(partition.paired),
            "height": int(partition.labels.shape[0]),
            "width": int(partition.labels.shape[1]),
        },
    )


def load_partition(outdir, stem="partition"):
    from .partition import Partition

    outdir = Path(outdir)
    meta = read_json(outdir / f"{stem}.json")
    labels = read_pgm(outdir / f"{stem}.pgm", normalize=False)
    return Partition(
        labels=labels,
        n_regions=meta["n_regions"],
        markers=[tuple(m) for m in meta["markers"]],
        paired=meta["paired"],
    )


def save_coefficients(outdir, coeffs, bank, **extra):
    outdir = ensure_dir(outdir)
    files = []
    for n, plane in enumerate(coeffs.planes):
        name = f"coef_{n:03d}.f64"
        write_raw(outdir / name, plane, kind="coefficients", index=n)
        files.append(name)
    h, w = bank.shape
    manifest = {
        "n_planes": int(coeffs.n_planes),
        "height": h,
        "width": w,
        "tau": bank.tau,
        "bank_ref": coeffs.bank_ref,
        "files": files,
        "filters": "filters.json",
        **extra,
    }
    write_json(outdir / "manifest.json", manifest)
    return manifest


def load_coefficients(outdir):
    from .transform import Coefficients

    outdir = Path(outdir)
    meta = read_json(outdir / "manifest.json")
    planes = np.stack([read_raw(outdir / name, meta["height"], meta["width"]) for name in meta["files"]])
    return Coefficients(planes=planes, bank_ref=meta["bank_ref"]), meta
