#!/usr/bin/env python3
"""Convert the Eigenvector corn archive (corn.mat) into the CSV tables and
manifest read by spectral-transfer.

    python3 scripts/convert_corn.py corn.mat data/corn
    python3 scripts/convert_corn.py --verify data/corn

Writes one spectra table per instrument (m5, mp5, mp6), one NBS standards
table per instrument holding the first three glass spectra in archive
order, propvals.csv with the four reference values, manifest.toml and
SHA256SUMS. SHA256SUMS covers every written file plus the source archive,
so a later `--verify` detects edits to the tables or a different archive.

Requires numpy and scipy.
"""

import argparse
import hashlib
import sys
from pathlib import Path

import numpy as np
import scipy.io

INSTRUMENTS = ("m5", "mp5", "mp6")
RESPONSES = ("moisture", "oil", "protein", "starch")
PAIRS = (("m5", "mp6"), ("mp6", "m5"), ("mp5", "mp6"))
N_STANDARDS = 3
SUMS = "SHA256SUMS"


def unwrap(value):
    """Plain arrays pass through; MATLAB structs yield their `data` field."""
    if isinstance(value, np.ndarray) and value.dtype.names:
        if "data" not in value.dtype.names:
            raise SystemExit(f"struct without a data field: {value.dtype.names}")
        value = value["data"][0, 0]
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 2:
        raise SystemExit(f"expected a matrix, got shape {arr.shape}")
    return arr


def write_matrix(path, matrix, header=None):
    with open(path, "w", newline="\n") as f:
        if header:
            f.write(",".join(header) + "\n")
        for row in matrix:
            f.write(",".join(repr(float(v)) for v in row) + "\n")


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def manifest_text():
    lines = [
        "version = 1",
        'name = "corn"',
        "response_names = [" + ", ".join(f'"{r}"' for r in RESPONSES) + "]",
        "wavelength_start_nm = 1100.0",
        "wavelength_step_nm = 2.0",
        'responses = "propvals.csv"',
        "pairs = [" + ", ".join(f'["{p}", "{s}"]' for p, s in PAIRS) + "]",
        "",
    ]
    for name in INSTRUMENTS:
        lines += [f"[instruments.{name}]", f'spectra = "{name}.csv"', f'standards = "{name}nbs.csv"', ""]
    return "\n".join(lines)


def convert(archive, out):
    mat = scipy.io.loadmat(archive)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in INSTRUMENTS:
        spectra = unwrap(mat[f"{name}spec"])
        if spectra.shape != (80, 700):
            raise SystemExit(f"{name}spec has shape {spectra.shape}, expected (80, 700)")
        nbs = unwrap(mat[f"{name}nbs"])[:N_STANDARDS]
        write_matrix(out / f"{name}.csv", spectra)
        write_matrix(out / f"{name}nbs.csv", nbs)
        written += [f"{name}.csv", f"{name}nbs.csv"]
    props = unwrap(mat["propvals"])
    if props.shape != (80, 4):
        raise SystemExit(f"propvals has shape {props.shape}, expected (80, 4)")
    write_matrix(out / "propvals.csv", props, header=RESPONSES)
    (out / "manifest.toml").write_text(manifest_text())
    written += ["propvals.csv", "manifest.toml"]

    with open(out / SUMS, "w") as f:
        f.write(f"{sha256(archive)}  source:{Path(archive).name}\n")
        for name in written:
            f.write(f"{sha256(out / name)}  {name}\n")
    print(f"wrote {len(written)} files to {out}")


def verify(out):
    bad = 0
    for line in (out / SUMS).read_text().splitlines():
        digest, name = line.split("  ", 1)
        if name.startswith("source:"):
            continue
        actual = sha256(out / name)
        if actual != digest:
            print(f"MISMATCH {name}")
            bad += 1
    print("all tables match" if bad == 0 else f"{bad} tables differ")
    return bad == 0


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--verify", action="store_true", help="check a converted directory against its SHA256SUMS")
    parser.add_argument("paths", nargs="+", help="ARCHIVE OUT_DIR, or OUT_DIR with --verify")
    args = parser.parse_args()
    if args.verify:
        sys.exit(0 if verify(Path(args.paths[0])) else 1)
    if len(args.paths) != 2:
        parser.error("need ARCHIVE and OUT_DIR")
    convert(args.paths[0], Path(args.paths[1]))


if __name__ == "__main__":
    main()
