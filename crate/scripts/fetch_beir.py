#!/usr/bin/env python3
"""Fetch BEIR datasets into data/beir/<name>/ in the layout the toolkit
expects (corpus.jsonl, queries.jsonl, qrels/test.tsv).

Usage: python3 scripts/fetch_beir.py [scifact nfcorpus ...]
"""

import io
import sys
import urllib.request
import zipfile
from pathlib import Path

BASE_URL = "https://public.ukp.informatik.tu-darmstadt.de/thakur/BEIR/datasets"
DEFAULT_DATASETS = ["scifact", "nfcorpus"]


def fetch(name: str, root: Path) -> None:
    target = root / name
    if (target / "corpus.jsonl").exists():
        print(f"{name}: already present at {target}")
        return
    url = f"{BASE_URL}/{name}.zip"
    print(f"{name}: downloading {url}")
    with urllib.request.urlopen(url) as resp:
        payload = resp.read()
    with zipfile.ZipFile(io.BytesIO(payload)) as zf:
        zf.extractall(root)
    if not (target / "corpus.jsonl").exists():
        raise SystemExit(f"{name}: archive did not contain {name}/corpus.jsonl")
    print(f"{name}: extracted to {target}")


def main() -> None:
    datasets = sys.argv[1:] or DEFAULT_DATASETS
    root = Path(__file__).resolve().parent.parent / "data" / "beir"
    root.mkdir(parents=True, exist_ok=True)
    for name in datasets:
        fetch(name, root)


if __name__ == "__main__":
    main()
