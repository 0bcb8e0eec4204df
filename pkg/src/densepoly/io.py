"""Raster (PMAP / FFLD) and GeoJSON files.

Raster layout: 4-byte magic, then little-endian u32 version, height and
width, then the planes as little-endian float32, row-major. PMAP holds one
probability plane; FFLD holds Re k0, Im k0, Re k1, Im k1.

All writes go to a temporary file in the target directory and are renamed
into place.
"""
from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np
from shapely.geometry import Polygon

from .frame_field import FrameField
from .polygonize.faces import ScoredPolygon
from .synth.scene import ring_area

VERSION = 1
HEADER = struct.Struct("<4sIII")
_PLANES = {b"PMAP": 1, b"FFLD": 4}


class RasterFormatError(ValueError):
    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


class GeoJSONError(ValueError):
    def __init__(self, message, index=None):
        self.index = index
        where = "" if index is None else f"feature {index}: "
        super().__init__(where + message)


def atomic_write(path, data):
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_raster(r):
    if isinstance(r, FrameField):
        magic = b"FFLD"
        planes = [r.k0.real, r.k0.imag, r.k1.real, r.k1.imag]
    else:
        arr = np.asarray(r)
        if arr.ndim != 2 or np.iscomplexobj(arr):
            raise ValueError("a probability raster must be a real 2-D array")
        magic = b"PMAP"
        planes = [arr]
    data = np.stack([np.asarray(p, dtype=float) for p in planes]).astype("<f4")
    if not np.all(np.isfinite(data)):
        raise ValueError("raster contains non-finite values")
    h, w = data.shape[1:]
    return HEADER.pack(magic, VERSION, h, w) + data.tobytes()


def decode_raster(buf):
    if len(buf) < HEADER.size:
        raise RasterFormatError(f"file has {len(buf)} bytes, shorter than the {HEADER.size}-byte header", len(buf))
    magic, version, h, w = HEADER.unpack_from(buf, 0)
    if magic not in _PLANES:
        raise RasterFormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise RasterFormatError(f"unsupported version {version}", 4)
    n = _PLANES[magic]
    expected = HEADER.size + 4 * n * h * w
    if len(buf) != expected:
        raise RasterFormatError(f"size {len(buf)} does not match the {expected} bytes implied by the header",
                                min(len(buf), expected))
    data = np.frombuffer(buf, dtype="<f4", offset=HEADER.size).reshape(n, h, w)
    bad = np.flatnonzero(~np.isfinite(data))
    if len(bad):
        raise RasterFormatError("non-finite value", HEADER.size + 4 * int(bad[0]))
    data = data.astype(np.float64)
    if magic == b"PMAP":
        return data[0]
    return FrameField(data[0] + 1j * data[1], data[2] + 1j * data[3])


def write_raster(path, r):
    atomic_write(path, encode_raster(r))


def read_raster(path):
    with open(path, "rb") as fh:
        return decode_raster(fh.read())


def _ring_of(p):
    return p.ring if hasattr(p, "ring") else p


def encode_geojson(polys):
    features = []
    for p in polys:
        ring = [(float(x), float(y)) for x, y in _ring_of(p)]
        if len(ring) > 1 and ring[0] == ring[-1]:
            ring = ring[:-1]
        if ring_area(ring) < 0:
            ring = ring[::-1]
        coords = [[x, y] for x, y in ring] + [[ring[0][0], ring[0][1]]]
        props = {} if getattr(p, "score", None) is None else {"score": float(p.score)}
        features.append({"type": "Feature", "properties": props,
                         "geometry": {"type": "Polygon", "coordinates": [coords]}})
    doc = {"type": "FeatureCollection", "features": features}
    return (json.dumps(doc, indent=1) + "\n").encode("utf-8")


def decode_geojson(text):
    """Polygons of a FeatureCollection as :class:`ScoredPolygon` (score 1 when absent)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise GeoJSONError(f"invalid JSON: {err}") from None
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise GeoJSONError("top level must be a FeatureCollection")
    out = []
    for k, feat in enumerate(doc.get("features", [])):
        geom = (feat or {}).get("geometry") or {}
        if geom.get("type") != "Polygon":
            raise GeoJSONError(f"geometry type {geom.get('type')!r} is not Polygon", k)
        rings = geom.get("coordinates") or []
        if len(rings) != 1:
            raise GeoJSONError("polygons with holes are not supported" if rings else "empty polygon", k)
        try:
            ring = [(float(x), float(y)) for x, y in rings[0]]
        except (TypeError, ValueError):
            raise GeoJSONError("coordinates must be [x, y] pairs", k) from None
        if len(ring) > 1 and ring[0] == ring[-1]:
            ring = ring[:-1]
        if len(set(ring)) < 3 or not Polygon(ring).is_valid or Polygon(ring).area <= 0:
            raise GeoJSONError("ring is degenerate or self-intersecting", k)
        if ring_area(ring) < 0:
            ring = ring[::-1]
        score = (feat.get("properties") or {}).get("score", 1.0)
        try:
            out.append(ScoredPolygon(ring, float(score)))
        except (TypeError, ValueError) as err:
            raise GeoJSONError(str(err), k) from None
    return out


def write_geojson(path, polys):
    atomic_write(path, encode_geojson(polys))


def read_geojson(path):
    with open(path, encoding="utf-8") as fh:
        return decode_geojson(fh.read())
