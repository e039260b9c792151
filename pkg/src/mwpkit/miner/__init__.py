from .matching import structural_match, find_positive_sites, is_hard_negative
from .mining import (
    ContrastiveTriple,
    positive_candidates,
    negative_candidates,
    sample_triples,
    mine_triples,
    save_triples,
    load_triples,
)
