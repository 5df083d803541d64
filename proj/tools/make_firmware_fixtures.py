#!/usr/bin/env python3
"""Regenerate the firmware image fixtures under fixtures/firmware/.

Images are deterministic pseudo-binary blobs (a SHA-256 counter stream keyed
by role) so the repository never needs real firmware. Sizes deliberately
exceed the 256-byte transfer chunk and avoid multiples of it, exercising the
multi-chunk path and the short tail chunk.
"""

import hashlib
import pathlib

ROLES = [
    ("legitimate", 1184),
    ("update", 1492),
    ("droplock", 1730),
]


def stream(role: str, size: int) -> bytes:
    out = bytearray()
    counter = 0
    while len(out) < size:
        out += hashlib.sha256(f"locklab-fw:{role}:{counter}".encode()).digest()
        counter += 1
    return bytes(out[:size])


def main() -> None:
    outdir = pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "firmware"
    outdir.mkdir(parents=True, exist_ok=True)
    for role, size in ROLES:
        blob = stream(role, size)
        lines = [f"# {role} firmware image fixture, {size} bytes"]
        for i in range(0, len(blob), 32):
            lines.append(blob[i : i + 32].hex())
        (outdir / f"{role}.hex").write_text("\n".join(lines) + "\n")
        print(f"{role}.hex: {size} bytes, sha256 {hashlib.sha256(blob).hexdigest()[:16]}…")


if __name__ == "__main__":
    main()
