import json
from fractions import Fraction

import pytest

from mwpkit.corpusgen import DEFAULT_PACK, Template, generate, load_pack
from mwpkit.eqcore import evaluate, parse_infix, problem_from_record
from mwpkit.miner import mine_triples

SLOT_TOKENS = {"n%d" % k for k in range(1, 10)}


def lang_vocab(records, lang):
    words = set()
    for r in records:
        if r["lang"] == lang:
            words.update(r["text"].split())
    return words - SLOT_TOKENS


def test_default_pack_shape():
    assert len(DEFAULT_PACK) == 12
    assert {t.lang for t in DEFAULT_PACK} == {"a", "b"}
    assert len({t.name for t in DEFAULT_PACK}) == 12
    for t in DEFAULT_PACK:
        t.validate()


def test_generate_deterministic():
    a = generate(DEFAULT_PACK, 10, 3)
    b = generate(DEFAULT_PACK, 10, 3)
    c = generate(DEFAULT_PACK, 10, 4)
    assert a == b
    assert a != c


def test_generate_counts_and_unique_ids():
    records = generate(DEFAULT_PACK, 7, 1)
    assert len(records) == 7 * len(DEFAULT_PACK)
    assert len({r["id"] for r in records}) == len(records)


def test_language_vocabularies_disjoint():
    records = generate(DEFAULT_PACK, 5, 2)
    assert not lang_vocab(records, "a") & lang_vocab(records, "b")


def test_answers_are_exact():
    for r in generate(DEFAULT_PACK, 5, 6):
        numbers = [Fraction(x) for x in r["numbers"]]
        tree = parse_infix(r["equation"], len(numbers))
        assert evaluate(tree, numbers) == Fraction(r["answer"])


def test_records_load_as_problems():
    problems = [problem_from_record(r) for r in generate(DEFAULT_PACK, 3, 9)]
    for p in problems:
        assert p.slot_positions()  # every slot token is present in the text


def test_miner_covers_most_generated_problems():
    problems = [problem_from_record(r) for r in generate(DEFAULT_PACK, 10, 5)]
    triples = mine_triples(problems, problems, problems, seed=5, max_per_problem=2)
    covered = {t.p for t in triples}
    assert len(covered) >= len(problems) // 2


def test_template_variant_missing_slot_rejected():
    t = Template("bad", "a", "toy-a", ("only n1 here",), "n1+n2", ((1, 5), (1, 5)))
    with pytest.raises(ValueError):
        t.validate()


def test_resampling_skips_invalid_draws():
    t = Template("risky", "a", "toy-a", ("n1 over n2 minus n3",),
                 "n1/(n2-n3)", ((1, 9), (1, 3), (1, 3)))
    records = generate((t,), 30, 0)
    assert len(records) == 30
    for r in records:
        assert Fraction(r["numbers"][1]) != Fraction(r["numbers"][2])


def test_impossible_template_reports_failure():
    t = Template("dead", "a", "toy-a", ("n1 over n2 minus n3",),
                 "n1/(n2-n3)", ((1, 9), (2, 2), (2, 2)))
    with pytest.raises(ValueError, match="no valid sample"):
        generate((t,), 1, 0)


def test_load_pack_round_trip(tmp_path):
    path = tmp_path / "pack.json"
    entries = [
        {"name": "x_add", "lang": "a", "corpus": "toy-x",
         "texts": ["give n1 and n2 now", "n1 with n2 please"],
         "equation": "n1+n2", "ranges": [[1, 9], [1, 9]]},
        {"name": "x_sub", "lang": "a", "corpus": "toy-x",
         "text": "take n2 from n1 now",
         "equation": "n1-n2", "ranges": [[5, 9], [1, 4]]},
    ]
    path.write_text(json.dumps(entries))
    pack = load_pack(path)
    assert [t.name for t in pack] == ["x_add", "x_sub"]
    assert pack[0].texts == ("give n1 and n2 now", "n1 with n2 please")
    assert pack[1].texts == ("take n2 from n1 now",)
    records = generate(pack, 4, 1)
    assert len(records) == 8
