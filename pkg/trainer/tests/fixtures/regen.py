"""Regenerate the corpus fixtures through the upstream CLI.

Run from this directory: python regen.py
"""

import csv
import json
import subprocess
import tempfile
from pathlib import Path

from tabprompt.synth import make_classification_dataset

HERE = Path(__file__).parent


def write_csv(d, path):
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(d.column_names)
        for row in d.rows:
            w.writerow(["" if c is None else c for c in row])


def main():
    with tempfile.TemporaryDirectory() as td:
        td = Path(td)
        toy = make_classification_dataset("toy", n_rows=56, n_classes=2, seed=11)
        wide = make_classification_dataset("wide", n_rows=222, n_classes=3, seed=12)
        write_csv(toy, td / "toy.csv")
        write_csv(wide, td / "wide.csv")
        (td / "manifest.json").write_text(json.dumps({
            "datasets": [
                {"id": "toy", "path": "toy.csv", "target_column": "Outcome"},
                {"id": "wide", "path": "wide.csv", "target_column": "Outcome"},
            ]
        }))
        subprocess.run(
            ["tabprompt", "build-corpus", "--manifest", str(td / "manifest.json"),
             "--cache-dir", str(td / "cache"), "--output-dir", str(td / "out"),
             "--variant", "light", "--mode", "onehot", "--train-ratio", "0.9"],
            check=True,
        )
        records = [json.loads(line) for line in
                    (td / "out" / "corpus-light-onehot.jsonl").read_text().splitlines()]
        by_ds = {}
        for r in records:
            by_ds.setdefault(r["dataset_id"], []).append(r)
        for ds, name in (("toy", "corpus_toy50.jsonl"), ("wide", "corpus_wide200.jsonl")):
            with (HERE / name).open("w") as f:
                for r in by_ds[ds]:
                    f.write(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n")
            print(name, len(by_ds[ds]), "records")


if __name__ == "__main__":
    main()
