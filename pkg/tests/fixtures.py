"""Constructed passages whose selections are checked against the brute-force oracle."""

from rocc.datasets import QAInstance

# Two near-duplicate sentences outscore the complementary one on mean BM25 alone.
REDUNDANT = QAInstance(
    id="redundant",
    question="To which organ system do the liver, pancreas, small intestine and colon belong?",
    answer="digestive system",
    label="correct",
    candidates=tuple(enumerate([
        "liver pancreas and small intestine are digestive organs",
        "liver pancreas and small intestine are digestive organs too",
        "the colon stores waste before it leaves the body through a long tube",
        "rainfall was heavy in the northern valley",
        "students visited the museum on friday",
    ])),
    gold_idxs=(0, 2),
)

# The only sentence holding the answer term is long, so its BM25 is low.
ANSWER_ONLY_ONCE = QAInstance(
    id="answer-once",
    question="What do plants make during photosynthesis using sunlight and water?",
    answer="glucose",
    label="correct",
    candidates=tuple(enumerate([
        "plants use sunlight during photosynthesis",
        "using water plants make food",
        "in the dark of the night the cells of a leaf quietly hold on to stored glucose for many hours "
        "until morning comes",
        "a volcano erupted near the coast",
        "the river carried sediment to the sea",
    ])),
    gold_idxs=(0, 2),
)

# The explanation needs two sentences, one of which only refers back with a pronoun.
TWO_HOP = QAInstance(
    id="two-hop",
    question="Why did Tom move to Denver?",
    answer="He was sent to lead the firm's new office",
    label="correct",
    candidates=tuple(enumerate([
        "Tom moved to Chicago in 1990 to study law.",
        "He enjoyed the city and its architecture.",
        "After graduating Tom joined a law practice downtown.",
        "In 1998 the firm opened a new office in Denver.",
        "Tom was sent to lead it.",
        "Tom married Anna, a local teacher, the next year.",
        "Anna and Tom bought a house near the mountains.",
    ])),
    gold_idxs=(3, 4),
)

ALL = (REDUNDANT, ANSWER_ONLY_ONCE, TWO_HOP)


def oracle_docs(inst, tokenize):
    return [tokenize(t) for _, t in inst.candidates], tokenize(inst.question), tokenize(inst.answer)
