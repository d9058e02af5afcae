"""Binary model checkpoint format.

Layout (all little-endian):
  magic "CIRM", version u16, layer_count u16
  per layer: type u8, n_params u8, then per parameter
             ndim u8, dims u32[ndim], payload f64
  tagged trailing sections until tag 0:
    tag 1: optimizer state  (t u64, then m and v payloads per parameter,
           shapes implied by the layer parameters, in model order)
    tag 2: ranging metadata (kind u8, range_scale f64, input ndim u8 +
           dims u32[], rssi_mean f64, rssi_std f64)
"""

import struct

import numpy as np

from .adam import AdamState
from .layers import Conv2d, Dense, Flatten, MaxPool2x2, Relu, Sequential

MAGIC = b"CIRM"
VERSION = 1

LAYER_CONV = 1
LAYER_POOL = 2
LAYER_FLATTEN = 3
LAYER_DENSE = 4
LAYER_RELU = 5

SECTION_END = 0
SECTION_ADAM = 1
SECTION_RANGING = 2

_TYPE_CODES = {Conv2d: LAYER_CONV, MaxPool2x2: LAYER_POOL, Flatten: LAYER_FLATTEN, Dense: LAYER_DENSE, Relu: LAYER_RELU}


def _write_array(out, arr):
    arr = np.asarray(arr, dtype="<f8")
    out.append(struct.pack("<B", arr.ndim))
    out.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
    out.append(arr.tobytes(order="C"))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ValueError("truncated checkpoint file")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        vals = struct.unpack(fmt, self.take(struct.calcsize(fmt)))
        return vals[0] if len(vals) == 1 else vals

    def array(self):
        ndim = self.unpack("<B")
        dims = struct.unpack(f"<{ndim}I", self.take(4 * ndim)) if ndim else ()
        count = int(np.prod(dims)) if dims else 1
        payload = self.take(8 * count)
        return np.frombuffer(payload, dtype="<f8").reshape(dims).astype(np.float64)

    def array_like(self, ref):
        payload = self.take(8 * ref.size)
        return np.frombuffer(payload, dtype="<f8").reshape(ref.shape).astype(np.float64)


def save_checkpoint(path, model: Sequential, adam_state: AdamState | None = None, meta: dict | None = None):
    """Serialize a layer stack, optionally with optimizer state and metadata.

    meta keys: kind (int), range_scale (float), input_shape (tuple),
    rssi_mean (float), rssi_std (float).
    """
    out = [MAGIC, struct.pack("<HH", VERSION, len(model.layers))]
    for layer in model.layers:
        code = _TYPE_CODES.get(type(layer))
        if code is None:
            raise ValueError(f"cannot serialize layer type {type(layer).__name__}")
        params = layer.param_items()
        out.append(struct.pack("<BB", code, len(params)))
        for _, p in params:
            _write_array(out, p)
    if adam_state is not None:
        out.append(struct.pack("<B", SECTION_ADAM))
        out.append(struct.pack("<Q", adam_state.t))
        for m, v in zip(adam_state.m, adam_state.v):
            out.append(np.asarray(m, dtype="<f8").tobytes(order="C"))
            out.append(np.asarray(v, dtype="<f8").tobytes(order="C"))
    if meta is not None:
        out.append(struct.pack("<B", SECTION_RANGING))
        out.append(struct.pack("<Bd", meta["kind"], meta["range_scale"]))
        dims = tuple(meta["input_shape"])
        out.append(struct.pack("<B", len(dims)))
        out.append(struct.pack(f"<{len(dims)}I", *dims))
        out.append(struct.pack("<dd", meta["rssi_mean"], meta["rssi_std"]))
    out.append(struct.pack("<B", SECTION_END))
    with open(path, "wb") as f:
        f.write(b"".join(out))


def load_checkpoint(path):
    """Read a checkpoint; returns (model, adam_state or None, meta or None).

    The model is returned unbuilt (call build with the input shape, e.g. from
    the metadata section, before training or inference).
    """
    with open(path, "rb") as f:
        r = _Reader(f.read())
    if r.take(4) != MAGIC:
        raise ValueError(f"{path}: not a model checkpoint (bad magic)")
    version, n_layers = r.unpack("<HH")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    layers = []
    for _ in range(n_layers):
        code, n_params = r.unpack("<BB")
        if code == LAYER_CONV:
            if n_params != 2:
                raise ValueError(f"{path}: conv layer with {n_params} parameters")
            w = r.array()
            b = r.array()
            layer = Conv2d(w.shape[2], w.shape[3])
            layer.w, layer.b = w, b
        elif code == LAYER_DENSE:
            if n_params != 2:
                raise ValueError(f"{path}: dense layer with {n_params} parameters")
            w = r.array()
            b = r.array()
            layer = Dense(w.shape[0], w.shape[1])
            layer.w, layer.b = w, b
        elif code == LAYER_POOL:
            layer = MaxPool2x2()
        elif code == LAYER_FLATTEN:
            layer = Flatten()
        elif code == LAYER_RELU:
            layer = Relu()
        else:
            raise ValueError(f"{path}: unknown layer type code {code}")
        layers.append(layer)
    model = Sequential(layers)
    adam_state = None
    meta = None
    while True:
        tag = r.unpack("<B")
        if tag == SECTION_END:
            break
        if tag == SECTION_ADAM:
            t = r.unpack("<Q")
            m, v = [], []
            for _, _, p in model.parameters():
                m.append(r.array_like(p))
                v.append(r.array_like(p))
            adam_state = AdamState(t=t, m=m, v=v)
        elif tag == SECTION_RANGING:
            kind, range_scale = r.unpack("<Bd")
            ndim = r.unpack("<B")
            dims = struct.unpack(f"<{ndim}I", r.take(4 * ndim)) if ndim else ()
            rssi_mean, rssi_std = r.unpack("<dd")
            meta = {
                "kind": kind,
                "range_scale": range_scale,
                "input_shape": tuple(int(d) for d in dims),
                "rssi_mean": rssi_mean,
                "rssi_std": rssi_std,
            }
        else:
            raise ValueError(f"{path}: unknown checkpoint section tag {tag}")
    return model, adam_state, meta
