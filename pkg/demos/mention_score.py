# Re-ranking retrieved sentences by how well they cover the mentions.
#
# A local sentence and a handful of candidate references are embedded with the
# offline hashed n-gram encoder. Scores are weighted recall: each local token
# takes its best match in the reference, and the weights decide which tokens
# matter.

import numpy as np

from globalner import HashNgramEncoder, LocalSentence, MentionSpan, ReferenceSentence, SourceKind, SourceTag
from globalner.detector import Gazetteer, detect_mentions
from globalner.queries import generate_queries
from globalner.reranker import Equal, Hard, Soft, alpha_weights, rank_and_select

text = "black widow dresses up for london fashion week and party in style !"
gazetteer = Gazetteer.from_strings(["black widow", "london fashion week"])

sentence = LocalSentence.from_text(text)
sentence = sentence.with_mentions(detect_mentions(sentence, gazetteer))
print("mentions:", [sentence.mention_text(m) for m in sentence.mentions])

# one query for the whole sentence, one per distinct mention
for q in generate_queries(sentence):
    print(f"  query ({q.kind.value}): {q.text}")

enc = HashNgramEncoder(64)
x = enc.encode(sentence.tokens)

# Soft weights: mention tokens get -ln(eps), other tokens are weighted by how
# close they are to some mention token.
np.set_printoptions(precision=3, suppress=True)
for strategy in (Equal(), Hard(), Soft()):
    print(f"{strategy.name:>5} alpha:", alpha_weights(x, sentence.mentions, strategy))

web = SourceTag(SourceKind.INTERNET, "demo")
candidates = [ReferenceSentence.from_text(t, web) for t in (
    "party dresses in style for the weekend",
    "black widow is a marvel comics superhero",
    "london fashion week is a clothing trade show",
    "the weather today is mild",
)]

# Equal weights favour the chatty fashion sentence; mention weights pull the
# entity-bearing references to the top.
for strategy in (Equal(), Hard(), Soft()):
    print(f"\n{strategy.name}:")
    for s in rank_and_select(sentence, candidates, strategy, top_n=3, encoder=enc):
        print(f"  {s.score:.3f}  {s.reference.raw_text}")
