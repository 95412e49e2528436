"""Terms, parsing, substitution and beta-eta-long normalization for a
dependently typed signature language.

One expression tree covers all three syntactic levels (kinds, type families,
objects).  Binders are locally nameless: bound occurrences are de Bruijn
indices, free occurrences are named nodes, and the name stored on a binder is
only a printing hint.  Structural equality of two expressions is therefore
exactly alpha-equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

__all__ = [
    "LfExpr",
    "TypeKind",
    "Pi",
    "Lam",
    "App",
    "Bound",
    "Const",
    "Meta",
    "TYPE",
    "KIND",
    "SigEntry",
    "Signature",
    "Subst",
    "LfError",
    "LfSyntaxError",
    "NormalizeError",
    "alpha_eq",
    "spine",
    "make_app",
    "instantiate",
    "abstract",
    "free_names",
    "contains_meta",
    "meta_names",
    "substitute",
    "fresh_name",
    "parse_signature",
    "parse_query",
    "parse_expr_text",
    "pretty_print",
    "print_signature",
    "beta_normalize",
    "normalize",
]


class LfError(Exception):
    """Base class for all errors raised by this package's front end."""


class LfSyntaxError(LfError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.message = message
        self.line = line
        self.col = col


class NormalizeError(LfError):
    pass


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LfExpr:
    pass


@dataclass(frozen=True)
class TypeKind(LfExpr):
    """The kind `type`."""

    def __str__(self) -> str:
        return "type"


@dataclass(frozen=True)
class Pi(LfExpr):
    """Dependent product {x:A} B.  `hint` is a display name only."""

    hint: str = field(compare=False)
    annot: LfExpr
    body: LfExpr

    def __str__(self) -> str:
        return pretty_print(self)


@dataclass(frozen=True)
class Lam(LfExpr):
    """Abstraction [x:A] M."""

    hint: str = field(compare=False)
    annot: LfExpr
    body: LfExpr

    def __str__(self) -> str:
        return pretty_print(self)


@dataclass(frozen=True)
class App(LfExpr):
    fn: LfExpr
    arg: LfExpr

    def __str__(self) -> str:
        return pretty_print(self)


@dataclass(frozen=True)
class Bound(LfExpr):
    """de Bruijn index of a binder-bound occurrence."""

    index: int

    def __str__(self) -> str:
        return f"#{self.index}"


@dataclass(frozen=True)
class Const(LfExpr):
    """A declared constant or a context variable, identified by name."""

    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Meta(LfExpr):
    """An instantiatable placeholder; legal in queries, rejected by the kernel."""

    name: str

    def __str__(self) -> str:
        return self.name


TYPE = TypeKind()

# Classifier sentinel passed to `normalize` when the expression is a kind
# (kinds have no classifier of their own).
KIND = "kind"

Subst = Mapping[str, LfExpr]


def alpha_eq(a: LfExpr, b: LfExpr) -> bool:
    """Equality up to renaming of bound variables (hints do not compare)."""
    return a == b


# ---------------------------------------------------------------------------
# Structural helpers
# ---------------------------------------------------------------------------


def spine(e: LfExpr) -> tuple[LfExpr, tuple[LfExpr, ...]]:
    """Split `e` into its application head and argument list."""
    args: list[LfExpr] = []
    while isinstance(e, App):
        args.append(e.arg)
        e = e.fn
    args.reverse()
    return e, tuple(args)


def make_app(head: LfExpr, args: Iterator[LfExpr] | tuple[LfExpr, ...] | list[LfExpr]) -> LfExpr:
    e = head
    for a in args:
        e = App(e, a)
    return e


def instantiate(body: LfExpr, value: LfExpr, depth: int = 0) -> LfExpr:
    """Replace Bound(depth) by `value` in `body`, closing one binder.

    `value` must be locally closed (no dangling indices), which makes the
    substitution capture-free by construction.
    """
    match body:
        case Bound(k):
            if k == depth:
                return value
            if k > depth:
                return Bound(k - 1)
            return body
        case App(f, a):
            return App(instantiate(f, value, depth), instantiate(a, value, depth))
        case Pi(h, annot, inner):
            return Pi(h, instantiate(annot, value, depth), instantiate(inner, value, depth + 1))
        case Lam(h, annot, inner):
            return Lam(h, instantiate(annot, value, depth), instantiate(inner, value, depth + 1))
        case _:
            return body


def abstract(e: LfExpr, name: str, depth: int = 0) -> LfExpr:
    """Turn free occurrences of Const(name) into Bound(depth): the inverse of
    opening a binder with a fresh constant."""
    match e:
        case Const(n) if n == name:
            return Bound(depth)
        case Bound(k):
            return Bound(k + 1) if k >= depth else e
        case App(f, a):
            return App(abstract(f, name, depth), abstract(a, name, depth))
        case Pi(h, annot, inner):
            return Pi(h, abstract(annot, name, depth), abstract(inner, name, depth + 1))
        case Lam(h, annot, inner):
            return Lam(h, abstract(annot, name, depth), abstract(inner, name, depth + 1))
        case _:
            return e


def free_names(e: LfExpr) -> set[str]:
    """Names of all free Const nodes."""
    out: set[str] = set()
    stack = [e]
    while stack:
        t = stack.pop()
        match t:
            case Const(n):
                out.add(n)
            case App(f, a):
                stack.append(f)
                stack.append(a)
            case Pi(_, annot, body) | Lam(_, annot, body):
                stack.append(annot)
                stack.append(body)
            case _:
                pass
    return out


def contains_meta(e: LfExpr) -> bool:
    match e:
        case Meta():
            return True
        case App(f, a):
            return contains_meta(f) or contains_meta(a)
        case Pi(_, annot, body) | Lam(_, annot, body):
            return contains_meta(annot) or contains_meta(body)
        case _:
            return False


def meta_names(e: LfExpr) -> list[str]:
    """Meta-variable names in first-occurrence order."""
    out: list[str] = []

    def walk(t: LfExpr) -> None:
        match t:
            case Meta(n):
                if n not in out:
                    out.append(n)
            case App(f, a):
                walk(f)
                walk(a)
            case Pi(_, annot, body) | Lam(_, annot, body):
                walk(annot)
                walk(body)
            case _:
                pass

    walk(e)
    return out


def substitute(e: LfExpr, s: Subst) -> LfExpr:
    """Simultaneous substitution for free variables (constants and metas) by
    name.  Replacement terms must be locally closed; bound occurrences are
    indices, so no capture can occur and the result is not renormalized."""
    if not s:
        return e
    match e:
        case Const(n) if n in s:
            return s[n]
        case Meta(n) if n in s:
            return s[n]
        case App(f, a):
            return App(substitute(f, s), substitute(a, s))
        case Pi(h, annot, body):
            return Pi(h, substitute(annot, s), substitute(body, s))
        case Lam(h, annot, body):
            return Lam(h, substitute(annot, s), substitute(body, s))
        case _:
            return e


def fresh_name(base: str, avoid: set[str]) -> str:
    """Pick a name based on `base` that is not in `avoid`."""
    base = base if base and base != "_" else "x"
    if base not in avoid and base != "type":
        return base
    i = 1
    while f"{base}{i}" in avoid:
        i += 1
    return f"{base}{i}"


# ---------------------------------------------------------------------------
# Signatures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SigEntry:
    name: str
    classifier: LfExpr
    sort: str  # "kind" for type-family declarations, "type" for object constants


def classifier_sort(classifier: LfExpr) -> str:
    """A classifier whose target (after the binder prefix) is `type` is a kind."""
    t = classifier
    while isinstance(t, Pi):
        t = t.body
    return "kind" if isinstance(t, TypeKind) else "type"


class Signature:
    """Ordered list of declarations; also serves as the typing context.

    Immutable: `extend` returns a new signature.  Entry order is meaningful,
    every classifier may reference only earlier entries.
    """

    __slots__ = ("entries", "_index")

    def __init__(self, entries: tuple[SigEntry, ...] = ()):
        self.entries = entries
        self._index = {e.name: i for i, e in enumerate(entries)}
        if len(self._index) != len(entries):
            raise LfSyntaxError("duplicate name in signature")

    def lookup(self, name: str) -> SigEntry | None:
        i = self._index.get(name)
        return self.entries[i] if i is not None else None

    def extend(self, name: str, classifier: LfExpr, sort: str) -> "Signature":
        if name in self._index:
            raise LfSyntaxError(f"duplicate name {name!r}")
        return Signature(self.entries + (SigEntry(name, classifier, sort),))

    def names(self) -> set[str]:
        return set(self._index)

    def fingerprint(self) -> str:
        return ",".join(e.name for e in self.entries) if self.entries else "."

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, Signature) and self.entries == other.entries

    def __repr__(self) -> str:
        return f"Signature({self.fingerprint()})"


# ---------------------------------------------------------------------------
# Concrete syntax
# ---------------------------------------------------------------------------
#
#   decl  :=  IDENT ":" expr "."
#   expr  :=  "type"
#          |  "{" IDENT ":" expr "}" expr          dependent product
#          |  "[" IDENT ":" expr "]" expr          abstraction
#          |  app ("->" expr)?                     right-assoc arrow sugar
#   app   :=  atom+                                left-assoc application
#   atom  :=  IDENT | "(" expr ")"
#   comments run from "%" to end of line.


_PUNCT = {"{", "}", "[", "]", "(", ")", ":", "."}


@dataclass(frozen=True)
class _Tok:
    kind: str  # "ident", "punct", "arrow", "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith("->", i):
            toks.append(_Tok("arrow", "->", line, col))
            i += 2
            col += 2
            continue
        if c in _PUNCT:
            toks.append(_Tok("punct", c, line, col))
            i += 1
            col += 1
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_'"):
                j += 1
            toks.append(_Tok("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        raise LfSyntaxError(f"unexpected character {c!r}", line, col)
    toks.append(_Tok("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str, query_sig: Signature | None = None):
        self.toks = _tokenize(text)
        self.pos = 0
        self.binders: list[str] = []
        self.query_sig = query_sig
        self.metas: list[str] = []

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str, text: str | None = None) -> _Tok:
        t = self.next()
        if t.kind != kind or (text is not None and t.text != text):
            want = text if text is not None else kind
            raise LfSyntaxError(f"expected {want!r}, found {t.text or t.kind!r}", t.line, t.col)
        return t

    def at_punct(self, text: str) -> bool:
        t = self.peek()
        return t.kind == "punct" and t.text == text

    # -- expressions --------------------------------------------------------

    def parse_expr(self) -> LfExpr:
        t = self.peek()
        if t.kind == "ident" and t.text == "type":
            self.next()
            return self._maybe_arrow(TYPE)
        if self.at_punct("{"):
            return self._binder("{", "}", Pi)
        if self.at_punct("["):
            return self._binder("[", "]", Lam)
        head = self.parse_app()
        return self._maybe_arrow(head)

    def _maybe_arrow(self, left: LfExpr) -> LfExpr:
        if self.peek().kind == "arrow":
            self.next()
            right = self.parse_expr()
            # Non-dependent product: the binder is anonymous and the body does
            # not reference it, so indices in `right` are unaffected.
            return Pi("_", left, _shift(right, 1, 0))
        return left

    def _binder(self, open_: str, close: str, node) -> LfExpr:
        self.expect("punct", open_)
        name_tok = self.expect("ident")
        name = name_tok.text
        if name == "type":
            raise LfSyntaxError("'type' cannot be a binder name", name_tok.line, name_tok.col)
        if self.query_sig is not None and name[:1].isupper():
            raise LfSyntaxError("meta-variable used at binder position", name_tok.line, name_tok.col)
        self.expect("punct", ":")
        annot = self.parse_expr()
        self.expect("punct", close)
        self.binders.append(name)
        body = self.parse_expr()
        self.binders.pop()
        # Occurrences were emitted as Bound(distance) against the binder
        # stack, so `body` already carries the right indices.
        return node(name, annot, body)

    def parse_app(self) -> LfExpr:
        e = self.parse_atom()
        while True:
            t = self.peek()
            if (t.kind == "ident" and t.text != "type") or self.at_punct("("):
                e = App(e, self.parse_atom())
            elif t.kind == "ident" and t.text == "type":
                raise LfSyntaxError("'type' cannot be applied", t.line, t.col)
            else:
                return e

    def parse_atom(self) -> LfExpr:
        t = self.next()
        if t.kind == "punct" and t.text == "(":
            e = self.parse_expr()
            self.expect("punct", ")")
            return e
        if t.kind == "ident":
            name = t.text
            for depth, b in enumerate(reversed(self.binders)):
                if b == name:
                    return Bound(depth)
            if self.query_sig is not None and name not in self.query_sig and name[:1].isupper():
                if name not in self.metas:
                    self.metas.append(name)
                return Meta(name)
            return Const(name)
        raise LfSyntaxError(f"unexpected token {t.text or t.kind!r}", t.line, t.col)


def _shift(e: LfExpr, by: int, cutoff: int) -> LfExpr:
    match e:
        case Bound(k):
            return Bound(k + by) if k >= cutoff else e
        case App(f, a):
            return App(_shift(f, by, cutoff), _shift(a, by, cutoff))
        case Pi(h, annot, body):
            return Pi(h, _shift(annot, by, cutoff), _shift(body, by, cutoff + 1))
        case Lam(h, annot, body):
            return Lam(h, _shift(annot, by, cutoff), _shift(body, by, cutoff + 1))
        case _:
            return e


def parse_signature(text: str) -> Signature:
    """Parse a sequence of declarations.  Classifiers come back raw: neither
    checked nor normalized."""
    p = _Parser(text)
    entries: list[SigEntry] = []
    seen: set[str] = set()
    while p.peek().kind != "eof":
        t = p.expect("ident")
        if t.text == "type":
            raise LfSyntaxError("'type' cannot be declared", t.line, t.col)
        if t.text in seen:
            raise LfSyntaxError(f"duplicate declaration of {t.text!r}", t.line, t.col)
        p.expect("punct", ":")
        classifier = p.parse_expr()
        p.expect("punct", ".")
        seen.add(t.text)
        entries.append(SigEntry(t.text, classifier, classifier_sort(classifier)))
    return Signature(tuple(entries))


def parse_query(text: str, sig: Signature) -> tuple[LfExpr, list[str]]:
    """Parse a goal type.  Free uppercase-initial identifiers that are not
    declared in `sig` become meta-variables, listed in first-occurrence order."""
    p = _Parser(text, query_sig=sig)
    e = p.parse_expr()
    t = p.peek()
    if t.kind != "eof":
        raise LfSyntaxError(f"trailing input {t.text!r}", t.line, t.col)
    return e, p.metas


def parse_expr_text(text: str) -> LfExpr:
    """Parse a single expression in signature mode (no meta-variables)."""
    p = _Parser(text)
    e = p.parse_expr()
    t = p.peek()
    if t.kind != "eof":
        raise LfSyntaxError(f"trailing input {t.text!r}", t.line, t.col)
    return e


def print_signature(sig: Signature) -> str:
    """Render a signature as declaration lines; reparses to an alpha-equal one."""
    return "".join(f"{e.name} : {pretty_print(e.classifier)}.\n" for e in sig)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC_EXPR = 0  # binders and arrows
_PREC_APP = 1
_PREC_ATOM = 2


def _uses_bound(e: LfExpr, depth: int) -> bool:
    match e:
        case Bound(k):
            return k == depth
        case App(f, a):
            return _uses_bound(f, depth) or _uses_bound(a, depth)
        case Pi(_, annot, body) | Lam(_, annot, body):
            return _uses_bound(annot, depth) or _uses_bound(body, depth + 1)
        case _:
            return False


def pretty_print(e: LfExpr) -> str:
    """Render in the concrete syntax; reparsing yields an alpha-equal tree."""

    def wrap(s: str, have: int, want: int) -> str:
        return f"({s})" if have < want else s

    def go(t: LfExpr, prec: int, names: list[str]) -> str:
        match t:
            case TypeKind():
                return "type"
            case Const(n) | Meta(n):
                return n
            case Bound(k):
                return names[-1 - k]
            case App():
                head, args = spine(t)
                parts = [go(head, _PREC_APP, names)] + [go(a, _PREC_ATOM, names) for a in args]
                return wrap(" ".join(parts), _PREC_APP, prec)
            case Pi(hint, annot, body):
                if not _uses_bound(body, 0):
                    left = go(annot, _PREC_APP, names)
                    # the arrow body skips the unused binder slot
                    right = go(instantiate(body, Const("_")), _PREC_EXPR, names)
                    return wrap(f"{left} -> {right}", _PREC_EXPR, prec)
                name = fresh_name(hint, free_names(body) | set(names))
                inner = go(body, _PREC_EXPR, names + [name])
                return wrap(f"{{{name}:{go(annot, _PREC_EXPR, names)}}} {inner}", _PREC_EXPR, prec)
            case Lam(hint, annot, body):
                name = fresh_name(hint, free_names(body) | set(names))
                inner = go(body, _PREC_EXPR, names + [name])
                return wrap(f"[{name}:{go(annot, _PREC_EXPR, names)}] {inner}", _PREC_EXPR, prec)
            case _:
                raise LfError(f"cannot print {t!r}")

    return go(e, _PREC_EXPR, [])


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

DEFAULT_STEP_BUDGET = 10**6


class _Budget:
    __slots__ = ("left",)

    def __init__(self, n: int):
        self.left = n

    def spend(self) -> None:
        self.left -= 1
        if self.left < 0:
            raise NormalizeError("normalization budget exceeded")


def beta_normalize(e: LfExpr, budget: int | _Budget = DEFAULT_STEP_BUDGET) -> LfExpr:
    """Full normal-order beta normalization.  The budget bounds the number of
    contractions so that ill-typed input cannot loop the kernel."""
    b = budget if isinstance(budget, _Budget) else _Budget(budget)

    def go(t: LfExpr) -> LfExpr:
        match t:
            case App(f, a):
                fn = go(f)
                if isinstance(fn, Lam):
                    b.spend()
                    return go(instantiate(fn.body, a))
                return App(fn, go(a))
            case Pi(h, annot, body):
                return Pi(h, go(annot), go(body))
            case Lam(h, annot, body):
                return Lam(h, go(annot), go(body))
            case _:
                return t

    return go(e)


def normalize(
    e: LfExpr,
    classifier: LfExpr | str,
    sig: Signature | None = None,
    budget: int = DEFAULT_STEP_BUDGET,
) -> LfExpr:
    """Beta-normalize, then eta-expand `e` against its classifier.

    `classifier` is a type (for objects), a kind (for type families), or the
    sentinel KIND when `e` itself is a kind.  The signature supplies the
    classifiers of application heads so arguments can be expanded too; heads
    that cannot be resolved (e.g. meta-variables) keep their arguments as-is.
    The result is idempotent: normalizing it again is the identity.
    """
    b = _Budget(budget)
    e = beta_normalize(e, b)
    if isinstance(classifier, LfExpr):
        classifier = beta_normalize(classifier, b)
    env: dict[str, LfExpr] = {}

    def head_classifier(h: LfExpr) -> LfExpr | None:
        match h:
            case Const(n):
                if n in env:
                    return env[n]
                if sig is not None:
                    entry = sig.lookup(n)
                    if entry is not None:
                        return entry.classifier
                return None
            case _:
                return None

    def avoid() -> set[str]:
        names = set(env)
        if sig is not None:
            names |= sig.names()
        return names

    def eta_spine(t: LfExpr) -> LfExpr:
        head, args = spine(t)
        if not args:
            return t
        cls = head_classifier(head)
        if cls is None:
            return t  # unknown head: leave arguments untouched
        out: list[LfExpr] = []
        for a in args:
            if not isinstance(cls, Pi):
                raise NormalizeError("cannot eta-expand: head applied beyond its arity")
            out.append(eta(a, cls.annot))
            cls = beta_normalize(instantiate(cls.body, a), b)
        return make_app(head, out)

    def eta(t: LfExpr, cls: LfExpr | str) -> LfExpr:
        if cls == KIND:
            match t:
                case TypeKind():
                    return t
                case Pi(h, annot, body):
                    x = fresh_name(h, avoid() | free_names(body))
                    env[x] = annot_n = eta(annot, TYPE)
                    inner = eta(instantiate(body, Const(x)), KIND)
                    del env[x]
                    return Pi(h, annot_n, abstract(inner, x))
                case _:
                    raise NormalizeError("cannot eta-expand: kind expected")
        if isinstance(cls, TypeKind):
            match t:
                case Pi(h, annot, body):
                    x = fresh_name(h, avoid() | free_names(body))
                    env[x] = annot_n = eta(annot, TYPE)
                    inner = eta(instantiate(body, Const(x)), TYPE)
                    del env[x]
                    return Pi(h, annot_n, abstract(inner, x))
                case Lam():
                    raise NormalizeError("cannot eta-expand: abstraction at kind 'type'")
                case TypeKind():
                    raise NormalizeError("cannot eta-expand: 'type' is not a type")
                case _:
                    return eta_spine(t)
        if isinstance(cls, Pi):
            if isinstance(t, Lam):
                x = fresh_name(t.hint, avoid() | free_names(t.body))
                env[x] = annot_n = eta(t.annot, TYPE)
                inner = eta(
                    beta_normalize(instantiate(t.body, Const(x)), b),
                    beta_normalize(instantiate(cls.body, Const(x)), b),
                )
                del env[x]
                return Lam(t.hint, annot_n, abstract(inner, x))
            if isinstance(t, (Pi, TypeKind)):
                raise NormalizeError("cannot eta-expand: head shape does not match classifier")
            x = fresh_name(cls.hint, avoid() | free_names(t))
            env[x] = annot_n = eta(cls.annot, TYPE)
            inner = eta(App(t, Const(x)), beta_normalize(instantiate(cls.body, Const(x)), b))
            del env[x]
            return Lam(cls.hint, annot_n, abstract(inner, x))
        # base-type classifier
        if isinstance(t, (Lam, Pi, TypeKind)):
            raise NormalizeError("cannot eta-expand: head shape does not match classifier")
        return eta_spine(t)

    return eta(e, classifier)
