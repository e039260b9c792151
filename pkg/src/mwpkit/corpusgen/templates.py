"""Synthetic corpus templates over two toy languages with disjoint vocabularies.

The default pack is built so the miner has work to do: 3-node prototypes
with different operators act as hard negatives for each other, and several
small prototypes reappear as subtrees of bigger ones.  Each template carries
several surface variants that share most of their vocabulary with the other
templates of the same language, so the text-to-structure mapping is not a
one-word lookup.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction

from ..eqcore import evaluate, parse_infix, EvalError

RESAMPLE_LIMIT = 50


@dataclass(frozen=True)
class Template:
    name: str
    lang: str
    corpus: str
    texts: tuple              # surface variants; n1..nk stay in place as slot tokens
    equation: str             # infix over the same slots
    ranges: tuple             # (lo, hi) inclusive integer range per slot

    def tree(self):
        return parse_infix(self.equation, len(self.ranges))

    def validate(self):
        tree = self.tree()
        if tree.max_slot() > len(self.ranges):
            raise ValueError("template %s: equation uses more slots than ranges" % self.name)
        if not self.texts:
            raise ValueError("template %s: no text variants" % self.name)
        for text in self.texts:
            tokens = text.split()
            for k in range(1, len(self.ranges) + 1):
                if "n%d" % k not in tokens:
                    raise ValueError("template %s: slot n%d missing from variant %r"
                                     % (self.name, k, text))
        return tree


DEFAULT_PACK = (
    # language A
    Template("a_add", "a", "toy-a",
             ("mira kept n1 shells in a box and found n2 more on the shore "
              "how many shells does mira have now",
              "tom picked n1 pears in the morning and picked n2 more after lunch "
              "how many pears does tom have now",
              "rena put n1 coins in a basket and dropped n2 more coins in "
              "how many coins does the basket hold now"),
             "n1+n2", ((5, 40), (3, 30))),
    Template("a_sub", "a", "toy-a",
             ("mira kept n1 shells in a box and lost n2 of them on the shore "
              "how many shells does mira have now",
              "tom picked n1 pears in the morning and lost n2 of them after lunch "
              "how many pears does tom have now",
              "rena put n1 coins in a basket and took n2 of the coins out "
              "how many coins does the basket hold now"),
             "n1-n2", ((20, 60), (2, 19))),
    Template("a_mul", "a", "toy-a",
             ("every box holds n1 shells and mira fills n2 boxes "
              "how many shells does mira have now",
              "tom picked n1 pears on each of n2 days "
              "how many pears does tom have now",
              "every basket holds n1 coins and rena fills n2 baskets "
              "how many coins does rena have now"),
             "n1*n2", ((2, 12), (2, 9))),
    Template("a_subdiv", "a", "toy-a",
             ("tom earned n1 coins and spent n2 coins on rope "
              "how many nets of n3 coins can tom buy now",
              "mira kept n1 shells and lost n2 of them "
              "how many boxes of n3 shells can mira fill now",
              "rena earned n1 coins and spent n2 coins on pears "
              "how many baskets of n3 coins can rena buy now"),
             "(n1-n2)/n3", ((30, 90), (2, 25), (2, 9))),
    Template("a_addmul", "a", "toy-a",
             ("tom earns n1 coins and n2 coins more every day "
              "how many coins does tom have after n3 days",
              "mira finds n1 shells and n2 shells more every morning "
              "how many shells does mira have after n3 mornings",
              "rena picks n1 pears and n2 pears more every day "
              "how many pears does rena have after n3 days"),
             "(n1+n2)*n3", ((2, 15), (2, 15), (2, 8))),
    Template("a_harm", "a", "toy-a",
             ("one pump fills the tank in n1 hours and another pump fills it in n2 hours "
              "how many hours do both pumps need together",
              "mira fills the basket in n1 hours and tom fills it in n2 hours "
              "how many hours do both need together",
              "one pipe fills the tank in n1 hours and another pipe fills it in n2 hours "
              "how many hours do both pipes need together"),
             "1/(1/n1+1/n2)", ((2, 30), (2, 30))),
    # language B (disjoint vocabulary)
    Template("b_add", "b", "toy-b",
             ("zov taret n1 brikun dal oru vek pinat n2 brikun "
              "kel sora brikun zov vasha ilem",
              "qeta loman n1 ketrel dal bilu vek pinat n2 ketrel "
              "kel sora ketrel qeta vasha ilem",
              "nedra taret n1 drovek dal oru vek pinat n2 drovek "
              "kel sora drovek nedra vasha ilem"),
             "n1+n2", ((5, 40), (3, 30))),
    Template("b_sub", "b", "toy-b",
             ("zov taret n1 brikun dal oru vek murel n2 brikun "
              "kel sora brikun zov vasha ilem",
              "qeta loman n1 ketrel dal bilu vek murel n2 ketrel "
              "kel sora ketrel qeta vasha ilem",
              "nedra taret n1 drovek dal oru vek murel n2 drovek "
              "kel sora drovek nedra vasha ilem"),
             "n1-n2", ((20, 60), (2, 19))),
    Template("b_div", "b", "toy-b",
             ("qeta loman n1 brikun vol fenu qeta serat n2 drovek "
              "kel sora brikun po drovek ilem",
              "zov taret n1 ketrel vol fenu zov serat n2 tilk "
              "kel sora ketrel po tilk ilem",
              "nedra loman n1 drovek vol fenu nedra serat n2 tilk "
              "kel sora drovek po tilk ilem"),
             "n1/n2", ((10, 90), (2, 9))),
    Template("b_subdiv", "b", "toy-b",
             ("qeta loman n1 ketrel vek murel n2 ketrel "
              "kel sora drovek po n3 ketrel qeta vasha ilem",
              "zov taret n1 brikun vek murel n2 brikun "
              "kel sora tilk po n3 brikun zov vasha ilem",
              "nedra loman n1 drovek vek murel n2 drovek "
              "kel sora tilk po n3 drovek nedra vasha ilem"),
             "(n1-n2)/n3", ((30, 90), (2, 25), (2, 9))),
    Template("b_muladd", "b", "toy-b",
             ("zov taret n1 ketrel dal fenu loman n2 drovek po n3 ketrel "
              "kel sora ketrel zov vasha ilem",
              "qeta taret n1 brikun dal fenu loman n2 tilk po n3 brikun "
              "kel sora brikun qeta vasha ilem",
              "nedra taret n1 drovek dal fenu loman n2 tilk po n3 drovek "
              "kel sora drovek nedra vasha ilem"),
             "n1+(n2*n3)", ((3, 20), (2, 12), (2, 9))),
    Template("b_harm", "b", "toy-b",
             ("oru gilda yemat ulan po n1 tovar dal fenu gilda yemat ulan po n2 tovar "
              "kel sora tovar hilat gilda ruv ilem",
              "zov yemat ulan po n1 tovar dal qeta yemat ulan po n2 tovar "
              "kel sora tovar hilat ruv ilem",
              "bilu gilda yemat ulan po n1 tovar dal nedra gilda yemat ulan po n2 tovar "
              "kel sora tovar hilat gilda ruv ilem"),
             "1/(1/n1+1/n2)", ((2, 30), (2, 30))),
)


def load_pack(path):
    with open(path, "r", encoding="utf-8") as fh:
        entries = json.load(fh)
    pack = []
    for e in entries:
        texts = tuple(e["texts"]) if "texts" in e else (e["text"],)
        pack.append(Template(e["name"], e["lang"], e["corpus"], texts,
                             e["equation"], tuple((lo, hi) for lo, hi in e["ranges"])))
    return tuple(pack)


def generate(templates, per_template, seed):
    """Corpus records (JSONL schema) with exact answers; deterministic per seed."""
    records = []
    for template in templates:
        tree = template.validate()
        rng = random.Random("%s:%s" % (seed, template.name))
        for i in range(per_template):
            text = rng.choice(template.texts)
            for attempt in range(RESAMPLE_LIMIT):
                numbers = [Fraction(rng.randint(lo, hi)) for lo, hi in template.ranges]
                try:
                    answer = evaluate(tree, numbers)
                    break
                except EvalError:
                    continue
            else:
                raise ValueError("template %s: no valid sample in %d tries"
                                 % (template.name, RESAMPLE_LIMIT))
            records.append({
                "id": "%s-%03d" % (template.name, i),
                "text": text,
                "equation": template.equation,
                "answer": str(answer),
                "numbers": [str(x) for x in numbers],
                "corpus": template.corpus,
                "lang": template.lang,
            })
    return records
