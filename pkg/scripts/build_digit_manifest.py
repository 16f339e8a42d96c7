"""Rebuild the pinned 6/4 digit split from an Optdigits file.

Usage:
    python scripts/build_digit_manifest.py [OPTDIGITS_FILE] [OUT_JSON]

Defaults to the copy of ``optdigits.tes`` bundled with scikit-learn
(``sklearn/datasets/data/digits.csv.gz``). The split is the earliest window
``o`` (per class, in file order) such that samples ``o..o+2`` of each class
as training set and ``o+3..o+4`` as test set give 100% train and test
accuracy for every encoding and transpile mode with exact kernels.
"""

import json
import sys
from pathlib import Path

import numpy as np

from iontrap_qsvm import data, kernel, svm

ENCODINGS = ("ry", "rycx", "amplitude")


def default_source() -> Path:
    import sklearn

    return Path(sklearn.__file__).parent / "datasets" / "data" / "digits.csv.gz"


def features(samples, encoding):
    if encoding == "amplitude":
        return [data.digit_features_amplitude(s) for s in samples]
    return [data.digit_features_ry(s) for s in samples]


def separable(train, test) -> bool:
    ytr = [s.label for s in train]
    yte = [s.label for s in test]
    for encoding in ENCODINGS:
        for mode in ("nonopt", "opt"):
            ftr, fte = features(train, encoding), features(test, encoding)
            gram = kernel.kernel_matrix(ftr, encoding=encoding, mode=mode)
            cross = kernel.kernel_matrix(fte, ftr, encoding=encoding, mode=mode)
            model = svm.train(gram, ytr)
            if svm.accuracy(model, gram, ytr) < 1 or svm.accuracy(model, cross, yte) < 1:
                return False
    return True


def manifest_text(d: dict) -> str:
    """JSON with one sample per line."""
    lines = ["{", f' "kind": {json.dumps(d["kind"])},', f' "metadata": {json.dumps(d["metadata"], sort_keys=True)},']
    for split in ("train", "test"):
        items = [f"  {json.dumps(item)}" for item in d[split]]
        tail = "," if split == "train" else ""
        lines.append(f' "{split}": [')
        lines.append(",\n".join(items))
        lines.append(f" ]{tail}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def main(argv):
    src = Path(argv[1]) if len(argv) > 1 else default_source()
    out = Path(argv[2]) if len(argv) > 2 else Path(__file__).parents[1] / "src/iontrap_qsvm/resources/digits_manifest.json"
    samples = data.load_optdigits(src)
    zeros = [s for s in samples if s.label == 1]
    ones = [s for s in samples if s.label == -1]
    for o in range(min(len(zeros), len(ones)) - 4):
        train = zeros[o:o + 3] + ones[o:o + 3]
        test = zeros[o + 3:o + 5] + ones[o + 3:o + 5]
        if separable(train, test):
            break
    else:
        raise SystemExit("no separable window found")
    order = {s.id: i for i, s in enumerate(samples)}
    train.sort(key=lambda s: order[s.id])
    test.sort(key=lambda s: order[s.id])
    ds = data.DigitDataset(tuple(train), tuple(test), {
        "source": "optdigits.tes (UCI Optdigits test partition, as bundled with scikit-learn)",
        "window_offset": o,
        "classes": {"+1": 0, "-1": 1},
        "rule": "first window o with samples o..o+2 per class as train, o+3..o+4 as test, "
                "100% exact-kernel accuracy for ry, rycx, amplitude in both modes",
    })
    d = ds.to_dict()
    for split in ("train", "test"):
        for item in d[split]:
            item["id"] = "optdigits.tes:" + item["id"].split(":")[1]
    out.write_text(manifest_text(d))
    print(f"window {o}: train {[s.id for s in train]} test {[s.id for s in test]} -> {out}")
    for s in train + test:
        print(s.id, s.label, np.round(data.digit_features_ry(s) / np.pi, 3))


if __name__ == "__main__":
    main(sys.argv)
