"""Typed feature structures over a :class:`~lexrules.signature.Signature`.

Structures are immutable, acyclic, rooted graphs.  A structure may carry
several roots (an argument tuple); a single-rooted structure is the common
case.  Every structure is kept in a normal form:

* node types are closed under type inference (a node carrying feature F is
  at least F's introducer, and the value of F meets its restriction);
* arcs to unshared, featureless nodes whose type is exactly the
  appropriateness restriction are dropped, since they carry no information;
* nodes are numbered breadth-first from the roots, arcs visited in feature
  order.

Because of the normal form, two structures are alphabetic variants iff
their node tables are identical, and :func:`canonical_form` is a plain
serialisation.  Features that are appropriate but absent are treated as
present with their restriction type ("implicit" nodes) by
:func:`subsumes`, :func:`generalize` and path access.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence

from .signature import Signature

Path = tuple  # sequence of feature names


class FeatureStructureError(Exception):
    pass


class CycleError(FeatureStructureError):
    """Unification would have produced a cyclic structure."""


class PathError(FeatureStructureError):
    """A feature is not appropriate where a path tries to use it."""


class FeatureStructure:
    """Immutable typed feature structure with one or more roots.

    Build instances with :meth:`of_type`, :func:`build`, the AVM parser in
    :mod:`lexrules.avm`, or the operations of this module; the constructor
    itself trusts its (already normal) arguments.
    """

    __slots__ = ("sig", "types", "arcs", "roots", "_hash")

    def __init__(self, sig: Signature, types: tuple, arcs: tuple, roots: tuple):
        self.sig = sig
        self.types = types
        self.arcs = arcs
        self.roots = roots
        self._hash = None

    @classmethod
    def of_type(cls, sig: Signature, type_name: str, arity: int = 1) -> "FeatureStructure":
        """A bare node of the given type (``arity`` independent copies)."""
        if type_name not in sig:
            raise FeatureStructureError(f"unknown type {type_name!r}")
        return cls(sig, (type_name,) * arity, ((),) * arity, tuple(range(arity)))

    # -- basic protocol -------------------------------------------------
    @property
    def arity(self) -> int:
        return len(self.roots)

    @property
    def root(self) -> int:
        return self.roots[0]

    def __len__(self):
        return len(self.types)

    def _key(self):
        return (self.types, self.arcs, self.roots)

    def __eq__(self, other):
        if not isinstance(other, FeatureStructure):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    def __repr__(self):
        from .avm import render
        return f"<FS {render(self)}>"

    def __str__(self):
        from .avm import render
        return render(self)

    # -- navigation -----------------------------------------------------
    def arc_map(self, node: int) -> dict:
        return dict(self.arcs[node])

    def node_at(self, path: Sequence[str], root: int = 0) -> int | None:
        """Index of the real node at ``path`` (None if absent or implicit)."""
        n = self.roots[root]
        for f in path:
            n = dict(self.arcs[n]).get(f)
            if n is None:
                return None
        return n

    def type_at(self, path: Sequence[str], root: int = 0) -> str | None:
        """Type at ``path``, following implicit appropriate arcs.

        Returns None when a feature on the path is not appropriate.
        """
        key = _walk(self, self.roots[root], path)
        return None if key is None else _key_type(self, key)

    def paths(self, root: int = 0) -> Iterator[tuple[Path, int]]:
        """All (path, node) pairs reachable from a root via real arcs."""
        stack = [((), self.roots[root])]
        while stack:
            p, n = stack.pop()
            yield p, n
            for f, m in reversed(self.arcs[n]):
                stack.append((p + (f,), m))

    def project(self, indices: Iterable[int]) -> "FeatureStructure":
        """Restrict to the given roots (in the given order)."""
        return _normalize(self.sig, list(self.types), [dict(a) for a in self.arcs],
                          [self.roots[i] for i in indices])

    def select(self, i: int) -> "FeatureStructure":
        return self.project([i])

    def subnode(self, node: int) -> "FeatureStructure":
        return _normalize(self.sig, list(self.types), [dict(a) for a in self.arcs], [node])


# ----------------------------------------------------------------------
# normalisation
# ----------------------------------------------------------------------

def build(sig: Signature, types: Sequence[str], arcs: Sequence[dict], roots: Sequence[int]):
    """Normalise a raw graph; None if it is inconsistent with the signature.

    ``arcs[n]`` maps feature names to node indices.  Raises
    :class:`CycleError` for cyclic graphs and :class:`PathError` for
    features unknown to the signature.
    """
    for t in types:
        if t not in sig:
            raise FeatureStructureError(f"unknown type {t!r}")
    return _normalize(sig, list(types), [dict(a) for a in arcs], list(roots))


def _normalize(sig, types, arcs, roots):
    meet = sig.meet
    reach = []
    seen = set()
    stack = list(reversed(roots))
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        reach.append(n)
        stack.extend(arcs[n].values())

    # type inference to a fixpoint
    work = list(reach)
    while work:
        n = work.pop()
        t = types[n]
        for f, m in arcs[n].items():
            intro = sig.introducer(f)
            if intro is None:
                raise PathError(f"unknown feature {f!r}")
            t2 = meet(t, intro)
            if t2 is None:
                return None
            t = t2
        if t != types[n]:
            types[n] = t
        for f, m in arcs[n].items():
            tm = meet(types[m], sig.restriction(t, f))
            if tm is None:
                return None
            if tm != types[m]:
                types[m] = tm
                work.append(m)

    # acyclicity
    state = {}
    for r in roots:
        if state.get(r) == 2:
            continue
        stack = [(r, iter(arcs[r].values()))]
        state[r] = 1
        while stack:
            n, it = stack[-1]
            m = next(it, None)
            if m is None:
                state[n] = 2
                stack.pop()
                continue
            s = state.get(m)
            if s == 1:
                raise CycleError("unification produced a cyclic structure")
            if s is None:
                state[m] = 1
                stack.append((m, iter(arcs[m].values())))

    # drop uninformative arcs, children first
    indeg = dict.fromkeys(reach, 0)
    for r in roots:
        indeg[r] += 1
    for n in reach:
        for m in arcs[n].values():
            indeg[m] += 1
    done = set()

    def prune(n):
        done.add(n)
        a = arcs[n]
        for f in list(a):
            m = a[f]
            if m not in done:
                prune(m)
            if indeg[m] == 1 and not arcs[m] and types[m] == sig.restriction(types[n], f):
                del a[f]
                indeg[m] = 0

    for r in roots:
        if r not in done:
            prune(r)

    return _canonical(sig, types, arcs, roots)


def _canonical(sig, types, arcs, roots):
    """Breadth-first renumbering from the roots, arcs in feature order."""
    number = {}
    order = []
    for r in roots:
        if r not in number:
            number[r] = len(order)
            order.append(r)
    i = 0
    while i < len(order):
        n = order[i]
        i += 1
        for f in sorted(arcs[n]):
            m = arcs[n][f]
            if m not in number:
                number[m] = len(order)
                order.append(m)
    new_types = tuple(types[n] for n in order)
    new_arcs = tuple(tuple((f, number[arcs[n][f]]) for f in sorted(arcs[n])) for n in order)
    return FeatureStructure(sig, new_types, new_arcs, tuple(number[r] for r in roots))


# ----------------------------------------------------------------------
# unification
# ----------------------------------------------------------------------

def _raw(fs, offset=0):
    return (list(fs.types), [{f: m + offset for f, m in a} for a in fs.arcs])


def _concat(structures):
    types, arcs, roots = [], [], []
    for fs in structures:
        off = len(types)
        t, a = _raw(fs, off)
        types += t
        arcs += a
        roots += [r + off for r in fs.roots]
    return types, arcs, roots


def combine(*structures: FeatureStructure) -> FeatureStructure:
    """Disjoint union; the roots of all arguments in order."""
    if not structures:
        raise ValueError("combine needs at least one structure")
    types, arcs, roots = _concat(structures)
    # parts are already normal, so only the numbering changes
    return _canonical(structures[0].sig, types, arcs, roots)


def combine_unify(structures: Sequence[FeatureStructure], pairs: Iterable[tuple[int, int]]):
    """``unify_roots(combine(*structures), pairs)`` without the intermediate copy."""
    sig = structures[0].sig
    types, arcs, roots = _concat(structures)
    find = _identify(sig, types, arcs, [(roots[i], roots[j]) for i, j in pairs])
    if find is None:
        return None
    return _normalize(sig, types, arcs, [find(r) for r in roots])


def _identify(sig, types, arcs, pairs):
    """Merge node pairs (union-find); returns a representative map or None."""
    parent = list(range(len(types)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    stack = list(pairs)
    while stack:
        x, y = stack.pop()
        rx, ry = find(x), find(y)
        if rx == ry:
            continue
        t = sig.meet(types[rx], types[ry])
        if t is None:
            return None
        parent[ry] = rx
        types[rx] = t
        ax, ay = arcs[rx], arcs[ry]
        for f, m in ay.items():
            if f in ax:
                stack.append((ax[f], m))
            else:
                ax[f] = m
        arcs[ry] = {}
    for n in range(len(types)):
        if find(n) == n:
            arcs[n] = {f: find(m) for f, m in arcs[n].items()}
    return find


def unify_roots(fs: FeatureStructure, pairs: Iterable[tuple[int, int]]) -> FeatureStructure | None:
    """Identify pairs of roots (by root index) within one structure."""
    types, arcs = _raw(fs)
    find = _identify(fs.sig, types, arcs, [(fs.roots[i], fs.roots[j]) for i, j in pairs])
    if find is None:
        return None
    return _normalize(fs.sig, types, arcs, [find(r) for r in fs.roots])


def unify(a: FeatureStructure, b: FeatureStructure) -> FeatureStructure | None:
    """Most general common instance of ``a`` and ``b``, or None on failure."""
    if a.arity != b.arity:
        raise ValueError(f"arity mismatch: {a.arity} vs {b.arity}")
    if a.sig is not b.sig:
        raise ValueError("structures over different signatures")
    k = a.arity
    types, arcs, roots = _concat((a, b))
    find = _identify(a.sig, types, arcs, [(roots[i], roots[k + i]) for i in range(k)])
    if find is None:
        return None
    return _normalize(a.sig, types, arcs, [find(r) for r in roots[:k]])


def unify_at(fs: FeatureStructure, index: int, other: FeatureStructure) -> FeatureStructure | None:
    """Unify single-rooted ``other`` into root ``index`` of ``fs``."""
    if other.arity != 1:
        raise ValueError("unify_at expects a single-rooted structure")
    types, arcs, roots = _concat((fs, other))
    find = _identify(fs.sig, types, arcs, [(roots[index], roots[-1])])
    if find is None:
        return None
    return _normalize(fs.sig, types, arcs, [find(r) for r in roots[:-1]])


# ----------------------------------------------------------------------
# implicit nodes: appropriate features that are absent in normal form
# ----------------------------------------------------------------------

def _key_type(fs, key):
    if isinstance(key, int):
        return fs.types[key]
    _, parent, f = key
    return fs.sig.restriction(_key_type(fs, parent), f)


def _key_child(fs, key, f):
    if isinstance(key, int):
        for g, m in fs.arcs[key]:
            if g == f:
                return m
    if fs.sig.restriction(_key_type(fs, key), f) is None:
        return None
    return ("implicit", key, f)


def _key_features(fs, key):
    return [f for f, _ in fs.arcs[key]] if isinstance(key, int) else []


def _walk(fs, key, path):
    for f in path:
        key = _key_child(fs, key, f)
        if key is None:
            return None
    return key


# ----------------------------------------------------------------------
# subsumption and generalisation
# ----------------------------------------------------------------------

def subsumes(general: FeatureStructure, specific: FeatureStructure) -> bool:
    """True iff every piece of information in ``general`` holds in ``specific``."""
    if general.arity != specific.arity:
        return False
    sig = general.sig
    mapping: dict[int, object] = {}
    stack = list(zip(general.roots, specific.roots))
    while stack:
        g, s = stack.pop()
        if g in mapping:
            if mapping[g] != s:
                return False
            continue
        mapping[g] = s
        if not sig.is_subtype(_key_type(specific, s), general.types[g]):
            return False
        for f, gm in general.arcs[g]:
            sm = _key_child(specific, s, f)
            if sm is None:
                return False
            stack.append((gm, sm))
    return True


def equivalent(a: FeatureStructure, b: FeatureStructure) -> bool:
    return a == b


def generalize(a: FeatureStructure, b: FeatureStructure) -> FeatureStructure:
    """Least general structure subsuming both (anti-unification).

    A reentrancy survives iff it holds in both inputs; node types are
    joined; a feature survives iff it is appropriate on both sides and
    present on at least one.
    """
    if a.arity != b.arity:
        raise ValueError(f"arity mismatch: {a.arity} vs {b.arity}")
    sig = a.sig
    index: dict[tuple, int] = {}
    types: list[str] = []
    arcs: list[dict] = []

    def node(ka, kb):
        pair = (ka, kb)
        if pair in index:
            return index[pair]
        n = len(types)
        index[pair] = n
        ta, tb = _key_type(a, ka), _key_type(b, kb)
        types.append(sig.join(ta, tb))
        arcs.append({})
        feats = sorted(set(_key_features(a, ka)) | set(_key_features(b, kb)))
        for f in feats:
            ca, cb = _key_child(a, ka, f), _key_child(b, kb, f)
            if ca is None or cb is None:
                continue
            arcs[n][f] = node(ca, cb)
        return n

    roots = [node(ra, rb) for ra, rb in zip(a.roots, b.roots)]
    return _normalize(sig, types, arcs, roots)


def generalize_all(structures: Iterable[FeatureStructure]) -> FeatureStructure | None:
    acc = None
    for fs in structures:
        acc = fs if acc is None else generalize(acc, fs)
    return acc


# ----------------------------------------------------------------------
# paths and species
# ----------------------------------------------------------------------

def get_path(fs: FeatureStructure, path: Sequence[str], root: int = 0) -> FeatureStructure | None:
    """View of the node at ``path`` as a structure of its own, or None."""
    key = _walk(fs, fs.roots[root], path)
    if key is None:
        return None
    if isinstance(key, int):
        return fs.subnode(key)
    return FeatureStructure.of_type(fs.sig, _key_type(fs, key))


def path_structure(sig: Signature, path: Sequence[str], value) -> FeatureStructure:
    """A structure whose only information is ``value`` at ``path``."""
    if isinstance(value, str):
        value = FeatureStructure.of_type(sig, value)
    n = len(path)
    types = [sig.root] * n + list(value.types)
    arcs = [{path[i]: i + 1} for i in range(n)] + [{f: m + n for f, m in a} for a in value.arcs]
    if n:
        # the last arc points at the value's root
        arcs[n - 1] = {path[-1]: value.roots[0] + n}
    return _normalize(sig, types, arcs, [0 if n else value.roots[0]])


def put_path(fs: FeatureStructure, path: Sequence[str], value, root: int = 0) -> FeatureStructure | None:
    """Constrain the node at ``path``; None if the value clashes.

    Raises :class:`PathError` when a feature cannot be appropriate at the
    node it leaves from.
    """
    sig = fs.sig
    key = fs.roots[root]
    for i, f in enumerate(path):
        t = _key_type(fs, key)
        intro = sig.introducer(f)
        if intro is None or sig.meet(t, intro) is None:
            where = ".".join(path[:i]) or "<root>"
            raise PathError(f"feature {f!r} is not appropriate for {t!r} at {where}")
        key = _key_child(fs, key, f)
        if key is None:
            # appropriate only after narrowing; the rest of the path is fresh
            break
    return unify_at(fs, root, path_structure(sig, path, value))


def species_resolutions(fs: FeatureStructure, at: Iterable[Sequence[str]], root: int = 0) -> list[FeatureStructure]:
    """All ways of assigning species to the nodes at the given paths."""
    paths = sorted({tuple(p) for p in at}, key=lambda p: (len(p), p))
    sig = fs.sig
    out: dict[FeatureStructure, None] = {}

    def rec(cur, i):
        if i == len(paths):
            out.setdefault(cur)
            return
        t = cur.type_at(paths[i], root)
        if t is None:
            return
        for s in sorted(sig.species(t)):
            try:
                nxt = put_path(cur, paths[i], s, root)
            except PathError:
                continue
            if nxt is not None:
                rec(nxt, i + 1)

    rec(fs, 0)
    return list(out)


def canonical_form(fs: FeatureStructure) -> bytes:
    """Byte string equal for exactly the alphabetic variants of ``fs``."""
    parts = [",".join(map(str, fs.roots))]
    for i, (t, a) in enumerate(zip(fs.types, fs.arcs)):
        parts.append(f"{i}:{t}{{" + ",".join(f"{f}={m}" for f, m in a) + "}")
    return "|".join(parts).encode("utf-8")


def shared_paths(fs: FeatureStructure, i: int, j: int) -> set[Path]:
    """Maximal paths p with root i·p and root j·p on the same node."""
    out = set()
    stack = [((), fs.roots[i], fs.roots[j])]
    while stack:
        p, x, y = stack.pop()
        if x == y:
            if p:
                out.add(p)
            continue
        ay = dict(fs.arcs[y])
        for f, m in fs.arcs[x]:
            if f in ay:
                stack.append((p + (f,), m, ay[f]))
    return out


__all__ = [
    "FeatureStructure", "FeatureStructureError", "CycleError", "PathError",
    "build", "combine", "unify", "unify_at", "unify_roots", "subsumes", "equivalent",
    "generalize", "generalize_all", "get_path", "put_path", "path_structure",
    "species_resolutions", "canonical_form", "shared_paths",
]
