"""Checkpoint persistence.

A checkpoint is a single file holding a text header (format version, network
and trainer configuration, episode index, RNG states, array manifest,
content hash) followed by the raw little-endian float64 bytes of every named
parameter array, online set first, then the target set.  Round trips are
bit-exact and platform-independent; the SHA-256 content hash covers the
header (minus the hash line itself) plus the array blob, so truncation or
corruption surfaces as an integrity error and format bumps as an
unsupported-version error.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .qnet import NetworkConfig, NetworkParams, ParamArray

MAGIC = "CIRCAFORAGE-CKPT"
FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    """Base class for checkpoint load failures."""


class IntegrityError(CheckpointError):
    """Content hash mismatch or structurally truncated file."""


class UnsupportedVersionError(CheckpointError):
    """Format version not handled by this code."""


@dataclass
class Checkpoint:
    net_config: NetworkConfig
    trainer_config: dict
    episode: int
    online: dict[str, np.ndarray]
    target: dict[str, np.ndarray]
    rng_state: dict[str, dict]
    content_hash: str = ""

    def to_network_params(self) -> tuple[NetworkParams, NetworkParams]:
        def build(values):
            arrays = {name: ParamArray(name, v.copy()) for name, v in values.items()}
            return NetworkParams(self.net_config, arrays)
        return build(self.online), build(self.target)

    @classmethod
    def from_params(cls, net_config: NetworkConfig, trainer_config: dict,
                    episode: int, online: NetworkParams, target: NetworkParams,
                    rng_state: dict | None = None) -> "Checkpoint":
        return cls(net_config=net_config, trainer_config=trainer_config,
                   episode=episode,
                   online={n: v.copy() for n, v in
                           ((p.name, p.value) for p in online.arrays.values())},
                   target={n: v.copy() for n, v in
                           ((p.name, p.value) for p in target.arrays.values())},
                   rng_state=rng_state or {})


def _header_lines(ckpt: Checkpoint, manifest: list[str]) -> list[str]:
    lines = [f"format_version={FORMAT_VERSION}", f"episode={ckpt.episode}"]
    for key, value in ckpt.net_config.to_dict().items():
        lines.append(f"net.{key}={value}")
    for key, value in ckpt.trainer_config.items():
        lines.append(f"train.{key}={value}")
    for name, state in ckpt.rng_state.items():
        lines.append(f"rng.{name}={json.dumps(state, sort_keys=True)}")
    lines.extend(manifest)
    return lines


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> str:
    """Write the checkpoint; returns its content hash."""
    blobs = []
    manifest = []
    offset = 0
    for role, arrays in (("online", ckpt.online), ("target", ckpt.target)):
        for name, value in arrays.items():
            raw = np.ascontiguousarray(value, dtype="<f8").tobytes()
            shape = ",".join(str(d) for d in value.shape) or "scalar"
            manifest.append(
                f"array={role};{name};{shape};{offset};{len(raw)}")
            blobs.append(raw)
            offset += len(raw)
    blob = b"".join(blobs)
    lines = _header_lines(ckpt, manifest)
    unhashed = "\n".join(lines).encode() + b"\n"
    digest = hashlib.sha256(unhashed + blob).hexdigest()
    header = unhashed + f"content_hash={digest}\n".encode()
    with open(path, "wb") as fh:
        fh.write(f"{MAGIC} v{FORMAT_VERSION}\n".encode())
        fh.write(f"header_bytes={len(header)}\n".encode())
        fh.write(header)
        fh.write(blob)
    ckpt.content_hash = digest
    return digest


def load_checkpoint(path: str | Path) -> Checkpoint:
    with open(path, "rb") as fh:
        data = fh.read()
    newline = data.find(b"\n")
    if newline < 0 or not data[:newline].decode(errors="replace").startswith(MAGIC):
        raise IntegrityError(f"{path}: not a checkpoint file")
    magic = data[:newline].decode()
    version = magic.rsplit("v", 1)[-1]
    if version != str(FORMAT_VERSION):
        raise UnsupportedVersionError(
            f"{path}: format version {version} is not supported "
            f"(expected {FORMAT_VERSION})")
    rest = data[newline + 1:]
    second = rest.find(b"\n")
    try:
        header_bytes = int(rest[:second].decode().split("=", 1)[1])
    except (ValueError, IndexError) as exc:
        raise IntegrityError(f"{path}: malformed header length") from exc
    header_start = second + 1
    header_raw = rest[header_start:header_start + header_bytes]
    blob = rest[header_start + header_bytes:]
    if len(header_raw) < header_bytes:
        raise IntegrityError(f"{path}: truncated header")

    header_text = header_raw.decode()
    lines = [ln for ln in header_text.split("\n") if ln]
    fields: dict[str, str] = {}
    manifest = []
    for line in lines:
        key, _, value = line.partition("=")
        if key == "array":
            manifest.append(value)
        else:
            fields[key] = value
    if fields.get("format_version") != str(FORMAT_VERSION):
        raise UnsupportedVersionError(
            f"{path}: header format version {fields.get('format_version')!r}")
    stored_hash = fields.get("content_hash", "")
    unhashed = "\n".join(ln for ln in lines
                         if not ln.startswith("content_hash=")).encode() + b"\n"
    digest = hashlib.sha256(unhashed + blob).hexdigest()
    if digest != stored_hash:
        raise IntegrityError(f"{path}: content hash mismatch")

    net_config = NetworkConfig.from_dict(
        {k[4:]: v for k, v in fields.items() if k.startswith("net.")})
    trainer_config = {k[6:]: v for k, v in fields.items()
                      if k.startswith("train.")}
    rng_state = {k[4:]: json.loads(v) for k, v in fields.items()
                 if k.startswith("rng.")}

    online: dict[str, np.ndarray] = {}
    target: dict[str, np.ndarray] = {}
    for entry in manifest:
        role, name, shape_s, offset_s, nbytes_s = entry.split(";")
        offset, nbytes = int(offset_s), int(nbytes_s)
        shape = (() if shape_s == "scalar"
                 else tuple(int(d) for d in shape_s.split(",")))
        raw = blob[offset:offset + nbytes]
        if len(raw) != nbytes:
            raise IntegrityError(f"{path}: truncated array {role}.{name}")
        array = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        (online if role == "online" else target)[name] = array
    return Checkpoint(net_config=net_config, trainer_config=trainer_config,
                      episode=int(fields["episode"]), online=online,
                      target=target, rng_state=rng_state,
                      content_hash=stored_hash)


def checkpoint_filename(episode: int) -> str:
    return f"checkpoint_ep{episode:06d}.ckpt"


def load_checkpoint_series(directory: str | Path, episodes) -> tuple[list, list[int]]:
    """Load the checkpoints for the given episodes from a directory.

    Returns (list of (episode, Checkpoint) found, list of missing episodes);
    scans keep going past gaps so partial training output stays usable.
    """
    directory = Path(directory)
    found, missing = [], []
    for episode in episodes:
        path = directory / checkpoint_filename(episode)
        if path.exists():
            found.append((episode, load_checkpoint(path)))
        else:
            missing.append(episode)
    return found, missing
