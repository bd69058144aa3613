# Does retrieved context help? Baseline vs context on the synthetic corpus.
#
# The corpus has entity names that never appear in training. Local sentences
# are neutral, so a name is only recognizable from the cue words around it in
# the retrieved Wikipedia-like paragraphs.
#
#   python demos/toy_experiment.py [fixture_dir]

import sys
import tempfile
from pathlib import Path

from globalner.experiment import run_context_experiment
from globalner.synthetic import make_toy_corpus

if len(sys.argv) > 1:
    fixture = Path(sys.argv[1])
else:
    fixture = Path(tempfile.mkdtemp()) / "toy"
    make_toy_corpus(seed=13).write(fixture)
    print("wrote toy corpus to", fixture)

runs = run_context_experiment(fixture)
for name, run in runs.items():
    t = run.test
    print(f"{name:>8}: P {t.precision:.3f}  R {t.recall:.3f}  F1 {t.f1:.3f}  "
          f"(best epoch {run.train.best_epoch})")
