"""Writes the first 1000 scikit-learn handwritten digits as IDX files.

The 8x8 images hold values 0..16; they are scaled by 15 to span 0..240.
`dendronn gen` upsamples them to 28x28.
"""

import struct
import sys
from pathlib import Path

from sklearn.datasets import load_digits


def main(out_dir: Path, n: int = 1000) -> None:
    digits = load_digits()
    images = (digits.images[:n] * 15).astype("uint8")
    labels = digits.target[:n].astype("uint8")
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "digits-images.idx3-ubyte", "wb") as f:
        f.write(struct.pack(">BBBBIII", 0, 0, 8, 3, n, 8, 8))
        f.write(images.tobytes())
    with open(out_dir / "digits-labels.idx1-ubyte", "wb") as f:
        f.write(struct.pack(">BBBBI", 0, 0, 8, 1, n))
        f.write(labels.tobytes())


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("crates/dendronn/tests/data"))
