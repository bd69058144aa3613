# The masked CRF: local tokens are labeled, reference tokens only feed features.

import itertools

import numpy as np

from globalner import HashNgramEncoder, LocalSentence, ReferenceSentence, SourceKind, SourceTag
from globalner.tagger import (
    CrfModel,
    OptimizerConfig,
    Tagger,
    WindowFeatures,
    assemble_masked_input,
    crf_log_partition,
    train,
)
from globalner.tagger.crf import emission_scores, path_score

wiki = SourceTag(SourceKind.WIKIPEDIA, "demo")
local = LocalSentence.from_text("saw zorblax at noon")
refs = [ReferenceSentence.from_text("president zorblax gave a speech", wiki)]

inp = assemble_masked_input(local, refs)
print("tokens:", [t.text for t in inp.tokens])
print("mask:  ", [int(m) for m in inp.mask])

enc = HashNgramEncoder(32)
provider = WindowFeatures(enc, width=1)
model = CrfModel.init(["O", "B", "I"], provider.dim, seed=0, scale=0.5)

# The partition function only runs over the masked-in positions. Check it
# against brute force over all 3^4 label sequences.
feats = provider.featurize(inp)
em = emission_scores(model, feats, inp.local_range)
brute = np.logaddexp.reduce([path_score(model, em, p) for p in itertools.product(range(3), repeat=len(local))])
print(f"log Z: forward {crf_log_partition(model, feats, inp.local_range):.6f}  brute force {brute:.6f}")

# A tiny training set: the word after "president" in the references is a name.
names = ["zorblax", "quimby", "vantor", "hesk", "mordu", "pellam"]
data = []
for i, name in enumerate(names):
    s = LocalSentence.from_text(f"saw {name} at noon")
    r = [ReferenceSentence.from_text(f"president {name} gave a speech", wiki)]
    data.append((assemble_masked_input(s, r), ["O", "B", "O", "O"]))
    s = LocalSentence.from_text(f"the {['lunch', 'rain', 'bus'][i % 3]} was late")
    data.append((assemble_masked_input(s, [ReferenceSentence.from_text("nothing to see", wiki)]),
                 ["O", "O", "O", "O"]))

result = train(model, provider, data, OptimizerConfig(epochs=15))
print("epoch losses:", " ".join(f"{l:.3f}" for l in result.epoch_losses))

tagger = Tagger(result.model, provider)
unseen = LocalSentence.from_text("saw brindle at noon")
ctx = assemble_masked_input(unseen, [ReferenceSentence.from_text("president brindle gave a speech", wiki)])
print("unseen name with context:", tagger.decode(ctx))
