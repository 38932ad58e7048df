"""Independent reference implementations used to pin expected values.

These work directly on raw JSON documents and plain strings, not on the
package's types, so a bug in the package cannot hide in the oracle.
They favor obviousness over speed: exhaustive path walks and character
loops instead of the optimized code under test.
"""
from __future__ import annotations


def _actions_by_id(doc):
    out = {}
    for sent in doc:
        for act in sent["actions"]:
            out[act["act_id"]] = (sent["sent_index"], act)
    return out


def oracle_ingredients(doc, producing_act_id):
    """All raw ingredient names reachable from an action, first-seen order."""
    acts = _actions_by_id(doc)

    def expand(act_id):
        names = []
        _, act = acts[act_id]
        for name, prov in act["input"].items():
            if prov < 0:
                names.append(name)
            else:
                names.extend(expand(prov))
        return names

    seen = []
    for name in expand(producing_act_id):
        if name not in seen:
            seen.append(name)
    return seen


def oracle_parents(doc, act_id):
    """(provenance parents, next parents) of an action, as sorted lists."""
    acts = _actions_by_id(doc)
    _, act = acts[act_id]
    prov = set()
    for table in (act["input"], act["cookware"]):
        for idx in table.values():
            if idx >= 0:
                prov.add(idx)
    nxt = {i for i, (_, a) in acts.items() if a.get("next_action") == act_id}
    return sorted(prov), sorted(nxt)


def oracle_prev(doc, act_id):
    prov, nxt = oracle_parents(doc, act_id)
    return sorted(set(prov) | set(nxt))


def oracle_next(doc, act_id):
    acts = _actions_by_id(doc)
    _, act = acts[act_id]
    nxt = act.get("next_action")
    if nxt is None:
        return []
    extra = [i for i in oracle_prev(doc, nxt) if i > act_id and i != nxt]
    return [nxt] + sorted(extra)


def oracle_order_pairs(doc):
    """(earlier, later) pairs comparable under the provenance order."""
    acts = _actions_by_id(doc)

    def ancestors(act_id):
        out = set()
        stack = [act_id]
        while stack:
            cur = stack.pop()
            prov, _ = oracle_parents(doc, cur)
            for p in prov:
                if p not in out:
                    out.add(p)
                    stack.append(p)
        return out

    anc = {i: ancestors(i) for i in acts}
    pairs = []
    for i in sorted(acts):
        for j in sorted(acts):
            if i < j and (i in anc[j] or j in anc[i]):
                first = i if i in anc[j] else j
                pairs.append((i, j, first))
    return pairs


def naive_tokenize(text):
    """Character-loop tokenizer: words of [a-z0-9_], punctuation alone."""
    tokens = []
    word = ""
    for ch in text.lower():
        if ch.isalnum() or ch == "_":
            word += ch
        else:
            if word:
                tokens.append(word)
                word = ""
            if not ch.isspace():
                tokens.append(ch)
    if word:
        tokens.append(word)
    return tokens


def oracle_dist_n(questions, n):
    """Distinct over total n-gram ratio, counted the slow way."""
    total = 0
    distinct = set()
    for q in questions:
        toks = naive_tokenize(q)
        for i in range(len(toks) - n + 1):
            gram = tuple(toks[i:i + n])
            total += 1
            distinct.add(gram)
    if total == 0:
        return 0.0
    return len(distinct) / total


def oracle_lcs_len(a_tokens, b_tokens):
    """Longest common subsequence length by dynamic programming."""
    m, n = len(a_tokens), len(b_tokens)
    table = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m):
        for j in range(n):
            if a_tokens[i] == b_tokens[j]:
                table[i + 1][j + 1] = table[i][j] + 1
            else:
                table[i + 1][j + 1] = max(table[i][j + 1], table[i + 1][j])
    return table[m][n]


def oracle_rouge1(a, b):
    """Unigram overlap F1 with clipped counts."""
    at, bt = naive_tokenize(a), naive_tokenize(b)
    if not at or not bt:
        return 0.0
    overlap = 0
    remaining = list(bt)
    for tok in at:
        if tok in remaining:
            remaining.remove(tok)
            overlap += 1
    if overlap == 0:
        return 0.0
    precision = overlap / len(bt)
    recall = overlap / len(at)
    return 2 * precision * recall / (precision + recall)
