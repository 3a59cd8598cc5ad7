"""Binary checkpoint container for model (and optimizer) parameters.

Layout: the 8 magic bytes "BITNET01" and a newline, UTF-8 header lines of
key=value pairs (config fields first, then one manifest line per parameter
formatted `param=<name>|<dims 'x'-joined>|<byte offset>|<byte length>`),
one blank line, then the raw little-endian float32 payloads back to back
in manifest order. Offsets are relative to the payload start.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .model import BitNetConfig, BitNetModel, build, layer_table

MAGIC = b"BITNET01"
FORMAT_VERSION = 1


class CheckpointError(Exception):
    """A checkpoint file that cannot be loaded, with the reason."""


def _config_header(cfg: BitNetConfig) -> dict[str, str]:
    return {
        "format_version": str(FORMAT_VERSION),
        "variant": cfg.variant,
        "num_stages": str(cfg.num_stages),
        "widths": ",".join(str(w) for w in cfg.widths),
        "r_d": str(cfg.r_d),
        "r_u": str(cfg.r_u),
        "head_width": str(cfg.head_channels),
        "use_bit_info": str(int(cfg.use_bit_info)),
        "use_msfi": str(int(cfg.use_msfi)),
        "msfi_disconnect_from_smallest": str(cfg.msfi_disconnect_from_smallest),
    }


def _config_from_header(header: dict[str, str]) -> BitNetConfig:
    try:
        return BitNetConfig(
            variant=header["variant"],
            num_stages=int(header["num_stages"]),
            widths=tuple(int(w) for w in header["widths"].split(",")),
            r_d=int(header["r_d"]),
            r_u=int(header["r_u"]),
            head_width=int(header["head_width"]),
            use_bit_info=bool(int(header["use_bit_info"])),
            use_msfi=bool(int(header["use_msfi"])),
            msfi_disconnect_from_smallest=int(
                header["msfi_disconnect_from_smallest"]),
        )
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"bad config header: {exc}") from exc


def write_container(path, magic: bytes, header: dict[str, str],
                    arrays: list[tuple[str, np.ndarray]]) -> None:
    lines = [f"{k}={v}" for k, v in header.items()]
    blobs = []
    offset = 0
    for name, arr in arrays:
        blob = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        dims = "x".join(str(d) for d in arr.shape)
        lines.append(f"param={name}|{dims}|{offset}|{len(blob)}")
        blobs.append(blob)
        offset += len(blob)
    data = magic + b"\n" + "\n".join(lines).encode("utf-8") + b"\n\n" + b"".join(blobs)
    Path(path).write_bytes(data)


def read_container(path, magic: bytes):
    """Parse a container: returns (header dict, manifest list, payload bytes).

    Manifest entries are (name, shape tuple, offset, length), already
    validated against the payload size.
    """
    data = Path(path).read_bytes()
    if len(data) < len(magic) + 1 or data[: len(magic)] != magic:
        raise CheckpointError(f"{path}: bad magic, not a {magic.decode()} file")
    if data[len(magic) : len(magic) + 1] != b"\n":
        raise CheckpointError(f"{path}: malformed header after magic")
    sep = data.find(b"\n\n", len(magic))
    if sep < 0:
        raise CheckpointError(f"{path}: truncated header (no blank line)")
    header_text = data[len(magic) + 1 : sep].decode("utf-8", errors="replace")
    payload = data[sep + 2 :]
    header: dict[str, str] = {}
    manifest: list[tuple[str, tuple[int, ...], int, int]] = []
    for line in header_text.splitlines():
        if not line:
            continue
        key, _, value = line.partition("=")
        if not _:
            raise CheckpointError(f"{path}: malformed header line {line!r}")
        if key == "param":
            parts = value.split("|")
            if len(parts) != 4:
                raise CheckpointError(f"{path}: malformed manifest line {line!r}")
            name, dims, off, length = parts
            try:
                shape = tuple(int(d) for d in dims.split("x"))
                off, length = int(off), int(length)
            except ValueError as exc:
                raise CheckpointError(f"{path}: malformed manifest line {line!r}") from exc
            manifest.append((name, shape, off, length))
        else:
            header[key] = value
    for name, shape, off, length in manifest:
        if int(np.prod(shape)) * 4 != length:
            raise CheckpointError(
                f"{path}: manifest length of {name} disagrees with its shape")
        if off < 0 or off + length > len(payload):
            raise CheckpointError(
                f"{path}: payload truncated, parameter {name} out of bounds")
    return header, manifest, payload


def _manifest_array(payload: bytes, entry) -> np.ndarray:
    name, shape, off, length = entry
    raw = np.frombuffer(payload[off : off + length], dtype="<f4")
    return raw.reshape(shape).astype(np.float32)


def save_checkpoint(model: BitNetModel, path) -> None:
    arrays = []
    for name, p in model.layers.items():
        arrays.append((f"{name}.weight", p.weight))
        arrays.append((f"{name}.bias", p.bias))
    write_container(path, MAGIC, _config_header(model.config), arrays)


def load_checkpoint(path) -> BitNetModel:
    header, manifest, payload = read_container(path, MAGIC)
    version = header.get("format_version")
    if version != str(FORMAT_VERSION):
        raise CheckpointError(
            f"{path}: unsupported format_version {version!r}, expected {FORMAT_VERSION}")
    cfg = _config_from_header(header)
    by_name = {entry[0]: entry for entry in manifest}
    model = build(cfg, seed=0)
    for spec in layer_table(cfg):
        params = model.layers[spec.name]
        for suffix, target in (("weight", params.weight), ("bias", params.bias)):
            key = f"{spec.name}.{suffix}"
            entry = by_name.pop(key, None)
            if entry is None:
                raise CheckpointError(f"{path}: missing parameter {key}")
            if entry[1] != target.shape:
                raise CheckpointError(
                    f"{path}: parameter {key} has shape {entry[1]}, "
                    f"expected {target.shape}")
            target[...] = _manifest_array(payload, entry)
    if by_name:
        raise CheckpointError(f"{path}: unexpected parameters {sorted(by_name)}")
    return model
