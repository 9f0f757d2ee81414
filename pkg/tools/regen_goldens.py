"""Regenerate the golden pipeline outputs under tests/goldens/.

Runs extract -> evaluate -> graph -> train -> predict on the bundled
fixture corpus with the keyword-mock backend and seed 42, from a
scratch directory using relative paths so no absolute path leaks into
the outputs.  The results are deterministic; the end-to-end test
asserts byte equality against these files.

Usage: python3 tools/regen_goldens.py
"""

import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
FIXTURES = REPO / "src" / "dstgraph" / "fixtures"
GOLDENS = REPO / "tests" / "goldens"

OUTPUTS = [
    "predictions.jsonl",
    "report.json",
    "graph.nodes.jsonl",
    "graph.edges.txt",
    "graph.manifest.json",
    "checkpoint.json",
    "train_metrics.json",
    "candidates.jsonl",
]

PIPELINE = [
    ["extract", "--corpus", "corpus.jsonl", "--backend", "rulemock",
     "--keywords", "keywords.json", "--out", "predictions.jsonl"],
    ["evaluate", "--predictions", "predictions.jsonl",
     "--corpus", "corpus.jsonl", "--out", "report.json"],
    ["graph", "--predictions", "predictions.jsonl", "--out-prefix", "graph"],
    ["train", "--graph-prefix", "graph", "--checkpoint", "checkpoint.json",
     "--metrics-out", "train_metrics.json", "--seed", "42"],
    ["predict", "--graph-prefix", "graph", "--checkpoint", "checkpoint.json",
     "--predictions", "predictions.jsonl", "--top-k", "5",
     "--out", "candidates.jsonl"],
]


def run_pipeline(workdir: Path) -> None:
    for name in ("corpus.jsonl", "keywords.json", "replay.jsonl"):
        shutil.copy(FIXTURES / name, workdir / name)
    for args in PIPELINE:
        subprocess.run(
            [sys.executable, "-m", "dstgraph.cli", *args],
            cwd=workdir,
            check=True,
            capture_output=True,
        )


def main() -> int:
    GOLDENS.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        workdir = Path(tmp)
        run_pipeline(workdir)
        for name in OUTPUTS:
            shutil.copy(workdir / name, GOLDENS / name)
    print(f"regenerated {len(OUTPUTS)} goldens in {GOLDENS}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
