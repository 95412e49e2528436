"""Seeded corpora: ground terms, query batteries, random signatures, and
substitution-lemma instances.  Everything is driven by an explicit
random.Random so runs are reproducible."""

from __future__ import annotations

import random

from lfhh.lf_syntax import (
    App,
    Const,
    LfExpr,
    Meta,
    Signature,
    make_app,
    parse_signature,
)
from lfhh.lf_typecheck import checked_signature

APPEND_TEXT = """\
nat : type.
z : nat.
s : nat -> nat.
list : type.
nil : list.
cons : nat -> list -> list.
append : list -> list -> list -> type.
appNil : {K:list} append nil K K.
appCons : {X:nat} {L:list} {K:list} {M:list} (append L K M) -> (append (cons X L) K (cons X M)).
"""

REMARK_TEXT = """\
nat : type.
z : nat.
s : nat -> nat.
num : nat -> type.
num_n : {n:nat} num n.
chk : num z -> type.
mk : {t:{x:nat} num z} chk (t z).
"""


def append_signature() -> Signature:
    return checked_signature(parse_signature(APPEND_TEXT))[0]


def remark_signature() -> Signature:
    return checked_signature(parse_signature(REMARK_TEXT))[0]


# ---------------------------------------------------------------------------
# Ground terms over the append signature
# ---------------------------------------------------------------------------


def nat_term(n: int) -> LfExpr:
    e: LfExpr = Const("z")
    for _ in range(n):
        e = App(Const("s"), e)
    return e


def list_term(elems: list[LfExpr], tail: LfExpr | None = None) -> LfExpr:
    e: LfExpr = tail if tail is not None else Const("nil")
    for x in reversed(elems):
        e = make_app(Const("cons"), [x, e])
    return e


def random_nat(rng: random.Random, max_s: int = 3) -> LfExpr:
    return nat_term(rng.randint(0, max_s))


def random_list(rng: random.Random, max_len: int = 4, max_s: int = 2) -> LfExpr:
    return list_term([random_nat(rng, max_s) for _ in range(rng.randint(0, max_len))])


def append_proof(l: list[LfExpr], k: list[LfExpr], k_tail: LfExpr | None = None) -> LfExpr:
    """Concatenation witness built by recursion on the first list; an
    independent reconstruction, not shared with the package."""
    if not l:
        return App(Const("appNil"), list_term(k, k_tail))
    rest = l[1:]
    return make_app(
        Const("appCons"),
        [
            l[0],
            list_term(rest),
            list_term(k, k_tail),
            list_term(rest + k, k_tail),
            append_proof(rest, k, k_tail),
        ],
    )


def list_elems(rng: random.Random, max_len: int = 4, max_s: int = 2) -> list[LfExpr]:
    return [random_nat(rng, max_s) for _ in range(rng.randint(0, max_len))]


# ---------------------------------------------------------------------------
# Query corpus over append/nat
# ---------------------------------------------------------------------------


def append_query_corpus(rng: random.Random, count: int) -> list[tuple[LfExpr, bool | None]]:
    """Query types paired with their expected solvability (None = don't know,
    only mode agreement is asserted)."""
    out: list[tuple[LfExpr, bool | None]] = []
    while len(out) < count:
        shape = rng.randrange(8)
        l = list_elems(rng, max_len=3)
        k = list_elems(rng, max_len=3)
        if shape == 0:
            # ground, correct
            q = make_app(Const("append"), [list_term(l), list_term(k), list_term(l + k)])
            out.append((q, True))
        elif shape == 1:
            # ground, wrong output (one extra element)
            wrong = l + k + [nat_term(0)]
            q = make_app(Const("append"), [list_term(l), list_term(k), list_term(wrong)])
            out.append((q, False))
        elif shape == 2:
            # output meta
            q = make_app(Const("append"), [list_term(l), list_term(k), Meta("Out")])
            out.append((q, True))
        elif shape == 3:
            # middle meta: solvable iff l is a prefix of m.  Unsolvable cases
            # clash on the first element so failure stays cheap in both modes.
            if rng.random() < 0.5 or not l:
                m = l + k
            else:
                m = [App(Const("s"), l[0])] + l[1:] + k
            q = make_app(Const("append"), [list_term(l), Meta("Mid"), list_term(m)])
            out.append((q, _is_prefix(l, m)))
        elif shape == 4:
            # element meta in the first list, rigid position
            if not l:
                continue
            l2 = list(l)
            l2[rng.randrange(len(l2))] = Meta("E")
            q = make_app(Const("append"), [list_term(l2), list_term(k), list_term(l + k)])
            out.append((q, None))
        elif shape == 5:
            q = Const("nat") if rng.random() < 0.5 else Const("list")
            out.append((q, True))
        elif shape == 6:
            # ground, wrong element
            if not l:
                continue
            m = l + k
            m[rng.randrange(len(l))] = App(Const("s"), m[rng.randrange(len(l))])
            q = make_app(Const("append"), [list_term(l), list_term(k), list_term(m)])
            out.append((q, None))
        else:
            # two metas sharing a name: append L L Out
            q = make_app(Const("append"), [Meta("L"), Meta("L"), Meta("Out")])
            out.append((q, True))
    return out


def _is_prefix(l: list[LfExpr], m: list[LfExpr]) -> bool:
    return len(l) <= len(m) and all(a == b for a, b in zip(l, m))


# ---------------------------------------------------------------------------
# Random small signatures
# ---------------------------------------------------------------------------


def random_signature_case(rng: random.Random) -> tuple[Signature, list[tuple[LfExpr, bool | None]]]:
    """A well-formed first-order signature with term constructors, a unary
    predicate family with structural rules (some bases intentionally missing),
    and a batch of queries against it.  Search terminates in both modes for
    every emitted query."""
    lines: list[str] = []
    n_sorts = rng.randint(1, 2)
    sorts = [f"t{i}" for i in range(n_sorts)]
    ctors: dict[str, list[tuple[str, list[str]]]] = {}
    for i, srt in enumerate(sorts):
        lines.append(f"{srt} : type.")
        base = f"b{i}"
        lines.append(f"{base} : {srt}.")
        ctors[srt] = [(base, [])]
        for j in range(rng.randint(1, 2)):
            name = f"c{i}{j}"
            args = [rng.choice(sorts[: i + 1]) for _ in range(rng.randint(1, 2))]
            lines.append(f"{name} : {' -> '.join(args + [srt])}.")
            ctors[srt].append((name, args))

    fam_sort = rng.choice(sorts)
    lines.append(f"good : {fam_sort} -> type.")
    dropped: set[str] = set()
    base_kept = True
    for cname, args in ctors[fam_sort]:
        if rng.random() < 0.25:
            dropped.add(cname)
            if not args:
                base_kept = False
            continue
        binders = "".join(f"{{x{k}:{s}}} " for k, s in enumerate(args))
        prems = "".join(f"(good x{k}) -> " for k, s in enumerate(args) if s == fam_sort)
        applied = f"({cname} {' '.join(f'x{k}' for k in range(len(args)))})" if args else cname
        lines.append(f"g{cname} : {binders}{prems}good {applied}.")

    if rng.random() < 0.5:
        # singleton family: one rigid binder, like an indexed witness
        lines.append(f"tag : {fam_sort} -> type.")
        lines.append(f"tag_of : {{n:{fam_sort}}} tag n.")

    sig = checked_signature(parse_signature("\n".join(lines)))[0]

    def ground(srt: str, depth: int) -> tuple[LfExpr, bool]:
        """Random ground term and whether `good` holds on it (for fam_sort)."""
        options = ctors[srt] if depth > 0 else [c for c in ctors[srt] if not c[1]]
        name, args = rng.choice(options)
        ok = name not in dropped
        parts: list[LfExpr] = []
        for a_srt in args:
            sub, sub_ok = ground(a_srt, depth - 1)
            parts.append(sub)
            if a_srt == fam_sort:
                ok = ok and sub_ok
        return make_app(Const(name), parts), ok

    queries: list[tuple[LfExpr, bool | None]] = []
    for _ in range(rng.randint(3, 5)):
        pick = rng.randrange(4)
        if pick == 0:
            t, ok = ground(fam_sort, rng.randint(0, 2))
            queries.append((App(Const("good"), t), ok))
        elif pick == 1 and base_kept:
            queries.append((App(Const("good"), Meta("X")), True))
        elif pick == 2:
            queries.append((Const(rng.choice(sorts)), True))
        elif pick == 3 and "tag" in sig:
            t, _ = ground(fam_sort, 1)
            queries.append((App(Const("tag"), t), True))
        else:
            queries.append((Const(fam_sort), True))
    return sig, queries


# ---------------------------------------------------------------------------
# Substitution-lemma instances
# ---------------------------------------------------------------------------


def substitution_instance(
    rng: random.Random, sig: Signature
) -> tuple[Signature, str, LfExpr, LfExpr, LfExpr, LfExpr]:
    """(extended sig, x, B, N, M, A) with sig,x:B |- M : A and sig |- N : B,
    where x genuinely occurs in M (and usually in A)."""
    if rng.random() < 0.5:
        b_name = "nat"
        n_val = random_nat(rng)
        # x appears as a list element inside an append judgment or a list
        elems = list_elems(rng, 3)
        pos = rng.randrange(len(elems) + 1)
        elems.insert(pos, Const("xv"))
        if rng.random() < 0.5:
            k = list_elems(rng, 2)
            a = make_app(Const("append"), [list_term(elems), list_term(k), list_term(elems + k)])
            m = append_proof(elems, k)
        else:
            a = Const("list")
            m = list_term(elems)
    else:
        b_name = "list"
        n_val = random_list(rng, 3)
        if rng.random() < 0.5:
            # x as the second list: append l x (l ++ x)
            l = list_elems(rng, 3)
            a = make_app(Const("append"), [list_term(l), Const("xv"), list_term(l, Const("xv"))])
            m = append_proof(l, [], Const("xv"))
        else:
            a = Const("list")
            m = list_term(list_elems(rng, 2), Const("xv"))
    extended = sig.extend("xv", Const(b_name), "type")
    return extended, "xv", Const(b_name), n_val, m, a
