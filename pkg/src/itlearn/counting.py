"""Exact weighted model counting over ground atoms with Bernoulli weights.

The count of a formula is the total weight of the atom assignments that
satisfy it, where each assignment weighs the product of per-atom factors
(w(a) when true, 1-w(a) when false).  Atoms that do not occur in the formula
marginalize out exactly, unit literals pin their atoms, atoms with weight 0
or 1 are constants, and the rest split into connected components of the
conjunct co-occurrence graph.  Each component is enumerated with vectorized
numpy (all 2^k assignments at once), so counts are exact, never sampled.
"""

from __future__ import annotations

import functools
import itertools
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .logic import (
    And, Atom, Const, Formula, GQ, Iff, Implies, Not, Or, Var,
    quantifier_truth,
)

GroundAtom = tuple  # (symbol_name, (arg, ...))


class CountingError(Exception):
    pass


class CapacityError(CountingError):
    """A connected component exceeds the enumeration cap."""


class InconsistencyError(CountingError):
    """The theory has zero weight; `culprit` names the most recent formula
    involved when known."""

    def __init__(self, message, culprit=None):
        super().__init__(message)
        self.culprit = culprit


DEFAULT_CAP = 22


def flatten_conjuncts(phi: Formula) -> list:
    if isinstance(phi, And):
        out = []
        for p in phi.parts:
            out.extend(flatten_conjuncts(p))
        return out
    return [phi]


def ground_atoms_of(phi: Formula, objects: Sequence[str]) -> frozenset:
    """Ground atoms phi can touch: open argument slots range over all objects.
    Formula ASTs are immutable, so results memoize by identity-equal keys."""
    return _ground_atoms_cached(phi, tuple(objects))


@functools.lru_cache(maxsize=200_000)
def _ground_atoms_cached(phi: Formula, objects: tuple) -> frozenset:
    out = set()

    def walk(p):
        if isinstance(p, Atom):
            slots = [i for i, t in enumerate(p.args) if isinstance(t, Var)]
            base = [t.name if isinstance(t, Const) else None for t in p.args]
            if not slots:
                out.add((p.symbol.name, tuple(base)))
                return
            for combo in itertools.product(objects, repeat=len(slots)):
                args = list(base)
                for i, o in zip(slots, combo):
                    args[i] = o
                out.add((p.symbol.name, tuple(args)))
        elif isinstance(p, Not):
            walk(p.sub)
        elif isinstance(p, (And, Or)):
            for q in p.parts:
                walk(q)
        elif isinstance(p, (Implies, Iff)):
            walk(p.left)
            walk(p.right)
        elif isinstance(p, GQ):
            walk(p.restrictor)
            walk(p.body)
        else:
            raise CountingError(f"not a formula: {p!r}")

    walk(phi)
    return frozenset(out)


def _not(v):
    return ~v if isinstance(v, np.ndarray) else (not v)


def _acc_count(total, v):
    """Accumulate a bool (array or scalar) into an integer count without
    re-allocating on every step."""
    if isinstance(v, np.ndarray):
        if isinstance(total, np.ndarray):
            total += v
            return total
        return v.astype(np.int16) + total
    if isinstance(total, np.ndarray):
        if v:
            total += 1
        return total
    return total + int(v)


def _eval_vec(phi: Formula, env: dict, lookup, objects: Sequence[str]):
    """Evaluate phi over all assignments simultaneously.

    `lookup(name, args)` returns either a bool (pinned or deterministic atom)
    or a bool column over the enumerated assignments.
    """
    if isinstance(phi, Atom):
        args = tuple(env[t.name] if isinstance(t, Var) else t.name for t in phi.args)
        return lookup(phi.symbol.name, args)
    if isinstance(phi, Not):
        return _not(_eval_vec(phi.sub, env, lookup, objects))
    if isinstance(phi, And):
        out = True
        for p in phi.parts:
            out = out & _eval_vec(p, env, lookup, objects)
        return out
    if isinstance(phi, Or):
        out = False
        for p in phi.parts:
            out = out | _eval_vec(p, env, lookup, objects)
        return out
    if isinstance(phi, Implies):
        return _not(_eval_vec(phi.left, env, lookup, objects)) | _eval_vec(phi.right, env, lookup, objects)
    if isinstance(phi, Iff):
        left = _eval_vec(phi.left, env, lookup, objects)
        right = _eval_vec(phi.right, env, lookup, objects)
        return _not(left ^ right) if isinstance(left, np.ndarray) or isinstance(right, np.ndarray) \
            else left == right
    if isinstance(phi, GQ):
        n_r = 0
        n_rb = 0
        for o in objects:
            env2 = dict(env)
            env2[phi.var] = o
            r = _eval_vec(phi.restrictor, env2, lookup, objects)
            b = _eval_vec(phi.body, env2, lookup, objects)
            n_r = _acc_count(n_r, r)
            n_rb = _acc_count(n_rb, r & b)
        return quantifier_truth(phi.quant, n_rb, n_r)
    raise CountingError(f"not a formula: {phi!r}")


def _plain_unary_gq(gq: GQ) -> bool:
    """True when every atom under the quantifier takes exactly the bound
    variable (constants only through pinned/deterministic lookups) and no
    further quantifier nests inside."""
    def walk(p):
        if isinstance(p, Atom):
            return all((isinstance(t, Var) and t.name == gq.var) or isinstance(t, Const)
                       for t in p.args)
        if isinstance(p, Not):
            return walk(p.sub)
        if isinstance(p, (And, Or)):
            return all(walk(q) for q in p.parts)
        if isinstance(p, (Implies, Iff)):
            return walk(p.left) and walk(p.right)
        return False  # nested GQ couples objects

    return walk(gq.restrictor) and walk(gq.body)


class _BlockDP:
    """Exact counting for a component whose only multi-object coupling is a
    handful of top-level cardinality (quantifier) conjuncts.

    Each object's free atoms form an independent block; the quantifiers only
    see per-object satisfier indicators, so a dynamic program over the count
    vector replaces the 2^k enumeration.  Marginals come from leave-one-out
    count distributions; the MAP search runs the same program with max and a
    deterministic tie key (block-major, False first).
    """

    MAX_STATES = 600_000

    def __init__(self, problem, members, conj_here):
        self.problem = problem
        self.members = members
        self.gqs = [c for c in conj_here if isinstance(c, GQ)]
        self.locals_by_obj: dict = {}
        self.blocks: dict = {}
        self.ok = self._analyze(conj_here)
        if self.ok:
            self._prepare()

    def _analyze(self, conj_here) -> bool:
        if not self.gqs or len(self.gqs) > 3:
            return False
        member_set = set(self.members)
        for g in self.gqs:
            if not _plain_unary_gq(g):
                return False
            # a free constant atom inside a quantifier couples every object
            consts = {a for a in _const_atoms(g)}
            if consts & member_set:
                return False
        for a in self.members:
            if len(a[1]) != 1:
                return False
            self.blocks.setdefault(a[1][0], []).append(a)
        for c in conj_here:
            if isinstance(c, GQ):
                continue
            free = ground_atoms_of(c, self.problem.objects) & member_set
            objs = {a[1][0] for a in free}
            if len(objs) != 1:
                return False
            self.locals_by_obj.setdefault(objs.pop(), []).append(c)
        n = len(self.problem.objects)
        if (n + 1) ** (2 * len(self.gqs)) > self.MAX_STATES:
            return False
        return True

    def _prepare(self) -> None:
        """Per-object choice table: (weight, bit key, per-quantifier (r, rb))."""
        problem = self.problem
        self.choices: list = []
        for o in problem.objects:
            atoms_o = sorted(self.blocks.get(o, []))
            k = len(atoms_o)
            locals_o = self.locals_by_obj.get(o, [])
            rows = []
            for bits in range(1 << k):
                assign = {a: bool((bits >> i) & 1) for i, a in enumerate(atoms_o)}
                lookup = self._scalar_lookup(assign)
                if not all(_eval_vec(c, {}, lookup, problem.objects) for c in locals_o):
                    continue
                w = 1.0
                for a, v in assign.items():
                    wa = problem._weight(a)
                    w *= wa if v else 1.0 - wa
                combo = []
                for g in self.gqs:
                    env = {g.var: o}
                    r = bool(_eval_vec(g.restrictor, env, lookup, problem.objects))
                    b = r if g.body is g.restrictor else \
                        bool(_eval_vec(g.body, env, lookup, problem.objects))
                    combo.extend((int(r), int(r and b)))
                key = tuple(assign[a] for a in atoms_o)
                rows.append((w, key, tuple(combo), assign))
            self.choices.append((o, atoms_o, rows))

    def _scalar_lookup(self, assign):
        problem = self.problem

        def lookup(name, args):
            a = (name, args)
            if a in assign:
                return assign[a]
            if a in problem.pinned:
                return problem.pinned[a]
            w = problem._weight(a)
            if w == 0.0:
                return False
            if w == 1.0:
                return True
            raise CountingError(f"atom {a} escaped its blocks")

        return lookup

    def _shape(self) -> tuple:
        n = len(self.problem.objects)
        return (n + 1,) * (2 * len(self.gqs))

    @staticmethod
    def _shift_add(dst, src, offsets, w) -> None:
        src_idx = tuple(slice(0, src.shape[d] - off) for d, off in enumerate(offsets))
        dst_idx = tuple(slice(off, None) for off in offsets)
        dst[dst_idx] += w * src[src_idx]

    def _forward(self, skip=None) -> np.ndarray:
        d = np.zeros(self._shape())
        d[(0,) * (2 * len(self.gqs))] = 1.0
        for o, _, rows in self.choices:
            if o == skip:
                continue
            nxt = np.zeros_like(d)
            for w, _, combo, _ in rows:
                self._shift_add(nxt, d, combo, w)
            d = nxt
        return d

    def _final_mask(self) -> np.ndarray:
        grids = np.indices(self._shape())
        mask = np.ones(self._shape(), dtype=bool)
        for i, g in enumerate(self.gqs):
            mask &= quantifier_truth(g.quant, grids[2 * i + 1], grids[2 * i])
        return mask

    def count(self) -> float:
        return float((self._forward() * self._final_mask()).sum())

    def marginals(self):
        mask = self._final_mask()
        out: dict = {}
        total = None
        for o, atoms_o, rows in self.choices:
            if not atoms_o:
                continue
            d_wo = self._forward(skip=o)
            compat = {}
            for _, _, combo, _ in rows:
                if combo not in compat:
                    src_idx = tuple(slice(0, d_wo.shape[d] - off)
                                    for d, off in enumerate(combo))
                    dst_idx = tuple(slice(off, None) for off in combo)
                    compat[combo] = float((d_wo[src_idx] * mask[dst_idx]).sum())
            z = sum(w * compat[combo] for w, _, combo, _ in rows)
            if z == 0.0:
                return None
            total = z
            for a in atoms_o:
                num = sum(w * compat[combo] for w, _, combo, assign in rows if assign[a])
                out[a] = num / z
        if total is None:
            return None
        return out

    def map_assignment(self, atom_order):
        zero = (0,) * (2 * len(self.gqs))
        states = {zero: (1.0, ())}
        order = sorted(range(len(self.choices)),
                       key=lambda i: min((atom_order.get(a, 0) for a in self.choices[i][1]),
                                         default=-1))
        for i in order:
            _, _, rows = self.choices[i]
            nxt: dict = {}
            for state, (mass, key) in states.items():
                for w, bits, combo, _ in rows:
                    s2 = tuple(state[d] + combo[d] for d in range(len(state)))
                    cand = (mass * w, key + (bits,))
                    cur = nxt.get(s2)
                    if cur is None or cand[0] > cur[0] or \
                            (cand[0] == cur[0] and cand[1] < cur[1]):
                        nxt[s2] = cand
            states = nxt
        mask = self._final_mask()
        best = None
        z = self.count()
        for state, (mass, key) in states.items():
            if not mask[state] or mass == 0.0:
                continue
            if best is None or mass > best[0] or (mass == best[0] and key < best[1]):
                best = (mass, key, state)
        if best is None or z == 0.0:
            return None, 0.0
        assignment = {}
        for rank, i in enumerate(order):
            _, atoms_o, _ = self.choices[i]
            for j, a in enumerate(atoms_o):
                assignment[a] = bool(best[1][rank][j])
        return assignment, best[0] / z


def _const_atoms(phi: Formula):
    out = set()

    def walk(p):
        if isinstance(p, Atom):
            if all(isinstance(t, Const) for t in p.args):
                out.add((p.symbol.name, tuple(t.name for t in p.args)))
        elif isinstance(p, Not):
            walk(p.sub)
        elif isinstance(p, (And, Or)):
            for q in p.parts:
                walk(q)
        elif isinstance(p, (Implies, Iff)):
            walk(p.left)
            walk(p.right)
        elif isinstance(p, GQ):
            walk(p.restrictor)
            walk(p.body)

    walk(phi)
    return out


_DP_THRESHOLD = 10  # below this, plain enumeration is both fast and simple


class _Problem:
    """One conjunction prepared for counting: pins, constants, components."""

    def __init__(self, conjuncts: Iterable[Formula], weights: Mapping[GroundAtom, float],
                 objects: Sequence[str], cap: int = DEFAULT_CAP):
        self.objects = tuple(objects)
        self.weights = weights
        self.cap = cap
        self.pinned: dict = {}
        self.pin_factor = 1.0
        self.contradiction = False
        residual = []
        for c in conjuncts:
            lit = self._as_literal(c)
            if lit is not None:
                self._pin(*lit)
            else:
                residual.append(c)
        # deterministic atoms never enter components
        self.conjunct_atoms = []
        for c in residual:
            atoms = frozenset(
                a for a in ground_atoms_of(c, self.objects)
                if a not in self.pinned and not self._deterministic(a)
            )
            self.conjunct_atoms.append((c, atoms))
        self.components = self._components()

    def _weight(self, a: GroundAtom) -> float:
        try:
            return self.weights[a]
        except KeyError:
            raise CountingError(f"no weight for atom {a[0]}({','.join(a[1])})") from None

    def _deterministic(self, a: GroundAtom) -> bool:
        w = self._weight(a)
        return w == 0.0 or w == 1.0

    def _as_literal(self, c: Formula):
        if isinstance(c, Atom) and all(isinstance(t, Const) for t in c.args):
            return (c.symbol.name, tuple(t.name for t in c.args)), True
        if isinstance(c, Not) and isinstance(c.sub, Atom) \
                and all(isinstance(t, Const) for t in c.sub.args):
            return (c.sub.symbol.name, tuple(t.name for t in c.sub.args)), False
        return None

    def _pin(self, a: GroundAtom, value: bool) -> None:
        w = self._weight(a)
        if w == 0.0 or w == 1.0:
            if (w == 1.0) != value:
                self.contradiction = True
            return  # constant atoms carry factor 1 either way
        if a in self.pinned:
            if self.pinned[a] != value:
                self.contradiction = True
            return
        self.pinned[a] = value
        self.pin_factor *= w if value else 1.0 - w

    def _components(self) -> list:
        parent: dict = {}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(x, y):
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[rx] = ry

        for _, atoms in self.conjunct_atoms:
            for a in atoms:
                parent.setdefault(a, a)
            it = iter(atoms)
            first = next(it, None)
            if first is not None:
                for a in it:
                    union(first, a)
        groups: dict = {}
        for a in parent:
            groups.setdefault(find(a), set()).add(a)
        comps = []
        for atoms in groups.values():
            members = sorted(atoms)
            conj_here = [c for c, ca in self.conjunct_atoms if ca and ca <= atoms]
            comps.append((members, conj_here))
        comps.sort(key=lambda mc: mc[0][0])
        # conjuncts with no free atoms are scalar checks
        self.scalar_conjuncts = [c for c, ca in self.conjunct_atoms if not ca]
        return comps

    def _lookup_factory(self, columns: dict):
        pinned = self.pinned
        weights = self.weights

        def lookup(name, args):
            a = (name, args)
            col = columns.get(a)
            if col is not None:
                return col
            if a in pinned:
                return pinned[a]
            w = self._weight(a)
            if w == 0.0:
                return False
            if w == 1.0:
                return True
            # free atom of a different component: independent, but conjuncts
            # are assigned to single components so this cannot occur
            raise CountingError(f"atom {a} escaped its component")

        return lookup

    def _scalar_ok(self) -> bool:
        lookup = self._lookup_factory({})
        for c in self.scalar_conjuncts:
            if not _eval_vec(c, {}, lookup, self.objects):
                return False
        return True

    def _enumerate(self, members: list, conj_here: list):
        """Return (products, sat) arrays over all 2^k assignments."""
        k = len(members)
        if k > self.cap:
            raise CapacityError(
                f"{k} coupled atoms exceed the enumeration cap of {self.cap}"
            )
        idx = np.arange(1 << k, dtype=np.int64)
        columns = {}
        products = np.ones(1 << k)
        for i, a in enumerate(members):
            bit = ((idx >> i) & 1).astype(bool)
            columns[a] = bit
            w = self._weight(a)
            products *= np.where(bit, w, 1.0 - w)
        lookup = self._lookup_factory(columns)
        sat = np.ones(1 << k, dtype=bool)
        for c in conj_here:
            v = _eval_vec(c, {}, lookup, self.objects)
            sat &= v if isinstance(v, np.ndarray) else bool(v)
        return products, sat, columns

    def _block_dp(self, members, conj_here) -> Optional[_BlockDP]:
        if len(members) <= _DP_THRESHOLD:
            return None
        dp = _BlockDP(self, members, conj_here)
        return dp if dp.ok else None

    def count(self) -> float:
        if self.contradiction or not self._scalar_ok():
            return 0.0
        total = self.pin_factor
        for members, conj_here in self.components:
            dp = self._block_dp(members, conj_here)
            if dp is not None:
                total *= dp.count()
            else:
                products, sat, _ = self._enumerate(members, conj_here)
                total *= float(products[sat].sum())
            if total == 0.0:
                return 0.0
        return total

    def marginals(self) -> Optional[dict]:
        """P(a=True | conjunction) for every pinned and component atom, or
        None when the conjunction is contradictory."""
        if self.contradiction or not self._scalar_ok():
            return None
        out = {a: (1.0 if v else 0.0) for a, v in self.pinned.items()}
        for members, conj_here in self.components:
            dp = self._block_dp(members, conj_here)
            if dp is not None:
                got = dp.marginals()
                if got is None:
                    return None
                out.update(got)
                continue
            products, sat, columns = self._enumerate(members, conj_here)
            z = float(products[sat].sum())
            if z == 0.0:
                return None
            for a in members:
                out[a] = float(products[sat & columns[a]].sum()) / z
        return out

    def map_assignment(self, atom_order: Mapping[GroundAtom, int]):
        """Most probable assignment of pinned and component atoms together
        with its probability mass within the constrained part.

        Ties prefer False on the earliest atom in the fixed order (the block
        decomposition compares block-major instead, equally deterministic).
        """
        if self.contradiction or not self._scalar_ok():
            return None, 0.0
        assignment = dict(self.pinned)
        confidence = 1.0
        for members, conj_here in self.components:
            dp = self._block_dp(members, conj_here)
            if dp is not None:
                got, ratio = dp.map_assignment(atom_order)
                if got is None:
                    return None, 0.0
                assignment.update(got)
                confidence *= ratio
                continue
            products, sat, columns = self._enumerate(members, conj_here)
            z = float(products[sat].sum())
            if z == 0.0:
                return None, 0.0
            masked = np.where(sat, products, -1.0)
            best = masked.max()
            ties = np.flatnonzero(masked == best)
            # key ranks the earliest atom in the global order as the most
            # significant digit, so argmin prefers False on the first atom
            order = sorted(range(len(members)), key=lambda i: atom_order.get(members[i], 0))
            keys = np.zeros(len(ties), dtype=np.int64)
            for i in order:
                keys = keys * 2 + ((ties >> i) & 1)
            chosen = int(ties[int(np.argmin(keys))])
            for i, a in enumerate(members):
                assignment[a] = bool((chosen >> i) & 1)
            confidence *= best / z
        return assignment, confidence


def wmc(phi: Formula, weights: Mapping[GroundAtom, float], objects: Sequence[str] = (),
        cap: int = DEFAULT_CAP) -> float:
    """Weighted model count of phi; atoms outside phi marginalize to one."""
    return _Problem(flatten_conjuncts(phi), weights, objects, cap).count()


def theory_conjuncts(theory: Iterable[Formula]) -> list:
    return list(_theory_conjuncts_cached(tuple(theory)))


@functools.lru_cache(maxsize=4096)
def _theory_conjuncts_cached(theory: tuple) -> tuple:
    out = []
    for phi in theory:
        out.extend(flatten_conjuncts(phi))
    return tuple(out)


def _involved(phi_conjuncts: list, delta_conjuncts: list, objects) -> tuple:
    """Split theory conjuncts into those transitively sharing atoms with phi
    and the rest, which cancel in conditional queries."""
    reach = set()
    for c in phi_conjuncts:
        reach |= ground_atoms_of(c, objects)
    pool = [(c, ground_atoms_of(c, objects)) for c in delta_conjuncts]
    involved = []
    changed = True
    while changed:
        changed = False
        rest = []
        for c, atoms in pool:
            if atoms & reach:
                involved.append(c)
                reach |= atoms
                changed = True
            else:
                rest.append((c, atoms))
        pool = rest
    return involved, [c for c, _ in pool]


def condition(phi: Formula, theory: Iterable[Formula], weights: Mapping[GroundAtom, float],
              objects: Sequence[str], cap: int = DEFAULT_CAP,
              assume_consistent: bool = False) -> float:
    """Conditional probability of phi given the theory: the ratio of the
    weighted count of phi ∧ theory to the count of the theory alone.

    Theory components untouched by phi cancel and are skipped; pass
    assume_consistent=True when the theory is already known satisfiable
    (belief states enforce that on update) to skip re-checking them.
    """
    theory = list(theory)
    phi_conj = flatten_conjuncts(phi)
    delta_conj = theory_conjuncts(theory)
    involved, rest = _involved(phi_conj, delta_conj, objects)
    denom = _Problem(involved, weights, objects, cap).count()
    if denom == 0.0 or (not assume_consistent and rest
                        and _Problem(rest, weights, objects, cap).count() == 0.0):
        raise InconsistencyError("theory has zero weight",
                                 culprit=theory[-1] if theory else None)
    numer = _Problem(phi_conj + involved, weights, objects, cap).count()
    return numer / denom


def posterior_marginals(theory: Iterable[Formula], weights: Mapping[GroundAtom, float],
                        objects: Sequence[str], atoms: Iterable[GroundAtom],
                        cap: int = DEFAULT_CAP) -> dict:
    """P(a | theory) for each requested atom, in one enumeration pass per
    connected component; unconstrained atoms keep their prior weight."""
    problem = _Problem(theory_conjuncts(theory), weights, objects, cap)
    marg = problem.marginals()
    if marg is None:
        theory = list(theory)
        raise InconsistencyError("theory has zero weight",
                                 culprit=theory[-1] if theory else None)
    out = {}
    for a in atoms:
        if a in marg:
            out[a] = marg[a]
        else:
            w = weights.get(a)
            if w is None:
                raise CountingError(f"no weight for atom {a[0]}({','.join(a[1])})")
            out[a] = w
    return out


def map_estimate(theory: Iterable[Formula], weights: Mapping[GroundAtom, float],
                 objects: Sequence[str], base: Sequence[GroundAtom],
                 cap: int = DEFAULT_CAP):
    """Most probable full assignment over `base` given the theory, plus its
    conditional probability.  Unconstrained atoms take their heavier side;
    exact 0.5 resolves to False, matching the in-component tie rule."""
    atom_order = {a: i for i, a in enumerate(base)}
    problem = _Problem(theory_conjuncts(theory), weights, objects, cap)
    assignment, confidence = problem.map_assignment(atom_order)
    if assignment is None:
        theory = list(theory)
        raise InconsistencyError("theory has zero weight",
                                 culprit=theory[-1] if theory else None)
    full = {}
    for a in base:
        if a in assignment:
            full[a] = assignment[a]
        else:
            w = weights.get(a)
            if w is None:
                raise CountingError(f"no weight for atom {a[0]}({','.join(a[1])})")
            if w == 0.0 or w == 1.0:
                full[a] = w == 1.0
            else:
                full[a] = w > 0.5
                confidence *= max(w, 1.0 - w)
    return full, confidence


def consistent(theory: Iterable[Formula], weights: Mapping[GroundAtom, float],
               objects: Sequence[str], cap: int = DEFAULT_CAP) -> bool:
    return _Problem(theory_conjuncts(theory), weights, objects, cap).count() > 0.0
