"""
Checkpoint Repository

Named-tensor archives: a magic tag, a length-prefixed JSON header listing
every tensor's name, shape and byte offset, then the raw little-endian
float64 payload.
"""

import json
import struct
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import NDArray

from dyexplainer.core.exceptions import CheckpointFormatError, CheckpointNotFoundError, ExportError
from dyexplainer.core.logging import get_logger

logger = get_logger(__name__)

MAGIC = b"DYXC"
SCHEMA_VERSION = 1
_DTYPE = np.dtype("<f8")


class CheckpointRepository:
    """Reads and writes one checkpoint file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def exists(self) -> bool:
        return self.path.is_file()

    def save(
        self,
        tensors: Mapping[str, NDArray[np.float64]],
        metadata: Mapping[str, Any] | None = None,
    ) -> Path:
        """
        Write `tensors` in name order with JSON-serializable `metadata`.

        Raises:
            ExportError: If the file cannot be written
        """
        entries = []
        chunks = []
        offset = 0
        for name in sorted(tensors):
            # ascontiguousarray would promote 0-d tensors to shape (1,)
            array = np.asarray(tensors[name], dtype=_DTYPE)
            entries.append({"name": name, "shape": list(np.shape(array)), "offset": offset})
            raw = array.tobytes(order="C")
            chunks.append(raw)
            offset += len(raw)

        header = json.dumps(
            {
                "schema_version": SCHEMA_VERSION,
                "tensors": entries,
                "metadata": dict(metadata or {}),
            },
            sort_keys=True,
            separators=(",", ":"),
        ).encode("utf-8")

        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("wb") as handle:
                handle.write(MAGIC)
                handle.write(struct.pack("<I", len(header)))
                handle.write(header)
                for chunk in chunks:
                    handle.write(chunk)
        except OSError as exc:
            raise ExportError(f"Cannot write checkpoint {self.path}: {exc}") from exc

        logger.info(f"Saved checkpoint with {len(entries)} tensors to {self.path}")
        return self.path

    def load(self) -> tuple[dict[str, NDArray[np.float64]], dict[str, Any]]:
        """
        Read all tensors and the metadata block.

        Raises:
            CheckpointNotFoundError: If the file does not exist
            CheckpointFormatError: If the file is truncated or of another schema
        """
        if not self.exists():
            raise CheckpointNotFoundError(str(self.path))

        blob = self.path.read_bytes()
        if blob[:4] != MAGIC or len(blob) < 8:
            raise CheckpointFormatError(f"{self.path} is not a checkpoint file")
        (header_len,) = struct.unpack("<I", blob[4:8])
        try:
            header = json.loads(blob[8 : 8 + header_len].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointFormatError(f"Corrupt checkpoint header in {self.path}") from exc

        version = header.get("schema_version")
        if version != SCHEMA_VERSION:
            raise CheckpointFormatError(
                f"Checkpoint schema {version} is not supported (expected {SCHEMA_VERSION})"
            )

        payload = memoryview(blob)[8 + header_len :]
        tensors: dict[str, NDArray[np.float64]] = {}
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape, dtype=np.int64))
            start = entry["offset"]
            end = start + count * _DTYPE.itemsize
            if end > len(payload):
                raise CheckpointFormatError(f"Tensor '{entry['name']}' is truncated")
            array = np.frombuffer(payload[start:end], dtype=_DTYPE).reshape(shape)
            tensors[entry["name"]] = array.astype(np.float64)
        return tensors, header.get("metadata", {})
