"""Shared fixtures: datasets produced through the primary CLI, plus a
hand-crafted file that exercises the documented byte layout directly."""

import struct
import subprocess
import sys

import numpy as np
import pytest


def run_ieda(args):
    proc = subprocess.run(
        [sys.executable, "-m", "ieda.cli", *args],
        capture_output=True, text=True,
    )
    if proc.returncode != 0:
        raise RuntimeError(f"ieda {' '.join(args)} failed: {proc.stderr}")
    return proc


@pytest.fixture(scope="session")
def allen_cahn_files(tmp_path_factory):
    """Original train/test sets and an augmented extra set at desk scale."""
    root = tmp_path_factory.mktemp("acdata")
    train = root / "train.ieda"
    test = root / "test.ieda"
    aug = root / "aug.ieda"
    common = [
        "--pde", "allen-cahn", "--epsilon", "0.05", "--resolution", "32",
        "--dt", "0.1", "--disc", "fd", "--dt-ref", "5e-4",
    ]
    run_ieda(["generate", *common, "--count", "500", "--series-length", "11",
              "--seed", "100", "--out", str(train)])
    run_ieda(["generate", *common, "--count", "200", "--series-length", "11",
              "--seed", "200", "--out", str(test)])
    run_ieda(["augment", *common, "--order", "3", "--count", "500",
              "--seed", "300", "--source", str(train), "--out", str(aug)])
    return {"train": train, "test": test, "aug": aug}


def write_raw_dataset(path, inputs, outputs, dt=0.5, kind=2, order=1, disc=0):
    """Create a dataset file straight from the documented layout."""
    count, n = inputs.shape[0], inputs.shape[1]
    dim = inputs.ndim - 1
    header = struct.pack("<4sHBIQdBBB", b"IEDA", 1, dim, n, count, dt,
                         kind, order, disc)
    payload = b""
    for w, v in zip(inputs, outputs):
        payload += np.ascontiguousarray(w, dtype="<f8").tobytes()
        payload += np.ascontiguousarray(v, dtype="<f8").tobytes()
    path.write_bytes(header + payload)
    import hashlib

    path.with_suffix(".meta").write_text(
        f"checksum_sha256 = '{hashlib.sha256(payload).hexdigest()}'\n"
        "grid_length = 1.0\n"
    )
    return path
