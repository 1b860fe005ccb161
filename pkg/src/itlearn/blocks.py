"""Kinematic blocksworld: scenes, synthetic embeddings, spatial relations,
plan execution with exact undo, and an oracle teacher.

Objects live on a bounded 2-D grid with a margin between any two objects on
both axes, so directional relations are never ambiguous.  Embeddings are
concatenated per-attribute anchor vectors plus isotropic noise, standing in
for visual features.  The oracle answers questions from the ground-truth
model and corrects suboptimal actions, always truthfully.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .grammar import Correction, TaskInstruction, content_symbols, render_refexp
from .logic import (
    Atom, DomainModel, GQ, RefForm, Symbol, Var, eval_formula, referent_of,
    satisfiers, sorted_referent,
)

log = logging.getLogger(__name__)

COLORS = ("red", "green", "blue", "cyan", "grey", "magenta", "yellow")
SHAPES = ("cube", "rectangle", "cylinder")
TEXTURES = ("plain", "dotted", "star")
CONTAINER_SHAPE = "basket"
RELATIONS = ("left", "right", "front", "behind", "inside")

CATEGORY = {}
CATEGORY.update({c: "color" for c in COLORS})
CATEGORY.update({s: "shape" for s in SHAPES})
CATEGORY.update({t: "texture" for t in TEXTURES})
CATEGORY[CONTAINER_SHAPE] = "shape"


class SimulationError(Exception):
    pass


class PlanningError(SimulationError):
    """The estimated model gives no executable plan (e.g. reference failure)."""


@dataclass(frozen=True)
class SceneObject:
    id: str
    x: float
    y: float
    color: str
    shape: str
    texture: str
    embedding: tuple

    @property
    def is_container(self) -> bool:
        return self.shape == CONTAINER_SHAPE


@dataclass(frozen=True)
class Scene:
    objects: tuple
    seed: int
    eps_pos: float = 0.1
    container_half: float = 0.45
    grid: int = 8
    held: Optional[str] = None

    def by_id(self, oid: str) -> SceneObject:
        for o in self.objects:
            if o.id == oid:
                return o
        raise SimulationError(f"no object {oid!r} in scene")

    @property
    def ids(self) -> tuple:
        return tuple(o.id for o in self.objects)

    def embeddings(self) -> dict:
        return {o.id: o.embedding for o in self.objects}


@dataclass(frozen=True)
class SceneSpec:
    n_objects: tuple = (6, 7)
    container: bool = False
    exact_counts: Mapping[str, int] = field(default_factory=dict)
    grid: int = 8
    noise_sigma: float = 0.1
    dim: int = 16
    eps_pos: float = 0.1


# ---------------------------------------------------------------------------
# synthetic embeddings

def _anchor(value: str, size: int) -> np.ndarray:
    digest = hashlib.sha256(value.encode()).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    v = rng.normal(size=size)
    return v / np.linalg.norm(v)


def _block_sizes(dim: int) -> tuple:
    a = dim // 3
    return (dim - 2 * a, a, a)


def synth_embedding(color: str, shape: str, texture: str, noise_sigma: float,
                    rng: np.random.Generator, dim: int = 16) -> tuple:
    """Concatenated per-attribute anchors plus isotropic noise; identical
    attributes share identical anchors."""
    dc, ds, dt = _block_sizes(dim)
    vec = np.concatenate([_anchor("color:" + color, dc),
                          _anchor("shape:" + shape, ds),
                          _anchor("texture:" + texture, dt)])
    if noise_sigma > 0:
        vec = vec + rng.normal(scale=noise_sigma, size=dim)
    return tuple(float(v) for v in vec)


# ---------------------------------------------------------------------------
# scene generation

def generate_scene(seed: int, spec: SceneSpec = SceneSpec()) -> Scene:
    rng = np.random.default_rng(seed)
    lo, hi = spec.n_objects
    n = int(rng.integers(lo, hi + 1))
    total = n + (1 if spec.container else 0)
    if total > spec.grid:
        raise SimulationError(
            f"{total} objects cannot keep distinct rows/cols on a {spec.grid}-cell grid")
    cols = rng.permutation(spec.grid)[:total]
    rows = rng.permutation(spec.grid)[:total]
    attrs = []
    for _ in range(n):
        attrs.append({
            "color": str(rng.choice(COLORS)),
            "shape": str(rng.choice(SHAPES)),
            "texture": str(rng.choice(TEXTURES)),
        })
    for symbol, count in spec.exact_counts.items():
        category = CATEGORY.get(symbol)
        if category is None:
            raise SimulationError(f"exact count for unknown attribute {symbol!r}")
        if count > n:
            raise SimulationError(f"cannot place {count} {symbol} among {n} objects")
        chosen = rng.choice(n, size=count, replace=False)
        alternatives = [v for v in {"color": COLORS, "shape": SHAPES, "texture": TEXTURES}[category]
                        if v != symbol]
        for i in range(n):
            if i in chosen:
                attrs[i][category] = symbol
            elif attrs[i][category] == symbol:
                attrs[i][category] = str(rng.choice(alternatives))
    objects = []
    for i in range(n):
        a = attrs[i]
        objects.append(SceneObject(
            id=f"o{i + 1}", x=float(cols[i]), y=float(rows[i]),
            color=a["color"], shape=a["shape"], texture=a["texture"],
            embedding=synth_embedding(a["color"], a["shape"], a["texture"],
                                      spec.noise_sigma, rng, spec.dim),
        ))
    if spec.container:
        objects.append(SceneObject(
            id=f"o{n + 1}", x=float(cols[n]), y=float(rows[n]),
            color="grey", shape=CONTAINER_SHAPE, texture="plain",
            embedding=synth_embedding("grey", CONTAINER_SHAPE, "plain",
                                      spec.noise_sigma, rng, spec.dim),
        ))
    return Scene(tuple(objects), seed=seed, eps_pos=spec.eps_pos, grid=spec.grid)


# ---------------------------------------------------------------------------
# ground truth

def spatial_holds(scene: Scene, rel: str, o1: str, o2: str) -> bool:
    """Axis comparisons with the scene margin.  Camera convention: +x runs
    right and +y runs toward the viewer, so 'front' means larger y."""
    a, b = scene.by_id(o1), scene.by_id(o2)
    eps = scene.eps_pos
    if rel == "left":
        return a.x < b.x - eps
    if rel == "right":
        return a.x > b.x + eps
    if rel == "front":
        return a.y > b.y + eps
    if rel == "behind":
        return a.y < b.y - eps
    if rel == "inside":
        return (b.is_container and o1 != o2
                and abs(a.x - b.x) <= scene.container_half
                and abs(a.y - b.y) <= scene.container_half)
    raise SimulationError(f"unknown relation {rel!r}")


def scene_vocabulary(scene: Scene) -> tuple:
    unary = list(COLORS) + list(SHAPES) + list(TEXTURES) + ["object"]
    if any(o.is_container for o in scene.objects):
        unary.append(CONTAINER_SHAPE)
    return tuple(Symbol(p, 1) for p in unary) + tuple(Symbol(r, 2) for r in RELATIONS)


def ground_truth(scene: Scene) -> DomainModel:
    vocab = scene_vocabulary(scene)
    ids = scene.ids
    interp = {}
    for sym in vocab:
        if sym.arity == 1:
            if sym.name == "object":
                interp[sym] = frozenset((o,) for o in ids)
            else:
                interp[sym] = frozenset(
                    (o.id,) for o in scene.objects
                    if sym.name in (o.color, o.shape, o.texture))
        else:
            interp[sym] = frozenset(
                (a, b) for a, b in itertools.product(ids, ids)
                if a != b and spatial_holds(scene, sym.name, a, b))
    return DomainModel(ids, vocab, interp)


def relation_atoms(scene: Scene) -> dict:
    """Ground-truth spatial atoms with fixed 0/1 weights for the belief."""
    out = {}
    for rel in RELATIONS:
        for a, b in itertools.product(scene.ids, scene.ids):
            out[(rel, (a, b))] = (a != b) and spatial_holds(scene, rel, a, b)
    return out


# ---------------------------------------------------------------------------
# execution actions

@dataclass(frozen=True)
class Pick:
    obj: str
    kind: str = "pick"


@dataclass(frozen=True)
class Place:
    obj: str
    pos: tuple
    landmarks: tuple  # believed indirect referent, for feedback attribution
    kind: str = "place"


@dataclass(frozen=True)
class Complete:
    kind: str = "complete"


def apply_action(scene: Scene, action) -> tuple:
    """Apply one action; returns (new_scene, undo_token).  The token is the
    prior scene, so undo is exact by construction."""
    token = scene
    if isinstance(action, Pick):
        if scene.held is not None:
            raise SimulationError(f"cannot pick {action.obj}: already holding {scene.held}")
        scene.by_id(action.obj)
        return replace(scene, held=action.obj), token
    if isinstance(action, Place):
        if scene.held != action.obj:
            raise SimulationError(f"cannot place {action.obj}: not holding it")
        x, y = action.pos
        if not _pose_free(scene, action.obj, x, y):
            raise SimulationError(f"pose {action.pos} is occupied or too close to another object")
        objects = tuple(replace(o, x=float(x), y=float(y)) if o.id == action.obj else o
                        for o in scene.objects)
        return replace(scene, objects=objects, held=None), token
    if isinstance(action, Complete):
        return scene, token
    raise SimulationError(f"unknown action {action!r}")


def undo(token: Scene) -> Scene:
    return token


def _pose_free(scene: Scene, moving: str, x: float, y: float) -> bool:
    """Clearance on both axes against every other object, preserving the
    no-tie-zone invariant for directional relations."""
    eps = scene.eps_pos
    for o in scene.objects:
        if o.id == moving:
            continue
        if abs(o.x - x) <= eps or abs(o.y - y) <= eps:
            return False
    return True


# ---------------------------------------------------------------------------
# goals and planning

def _shift_vars(r: RefForm) -> RefForm:
    """Rename x->x1, x1->x2, ... so the indirect refexp nests under the goal."""
    mapping = {}

    def rename(phi):
        if isinstance(phi, Atom):
            args = tuple(Var(_next(t.name)) if isinstance(t, Var) else t for t in phi.args)
            return Atom(phi.symbol, args)
        if isinstance(phi, GQ):
            return GQ(phi.quant, _next(phi.var), rename(phi.restrictor), rename(phi.body))
        if hasattr(phi, "parts"):
            return type(phi)(tuple(rename(p) for p in phi.parts))
        if hasattr(phi, "sub"):
            return type(phi)(rename(phi.sub))
        if hasattr(phi, "left"):
            return type(phi)(rename(phi.left), rename(phi.right))
        raise SimulationError(f"not a formula: {phi!r}")

    def _next(name: str) -> str:
        if name not in mapping:
            k = 0 if name == "x" else int(name[1:])
            mapping[name] = f"x{k + 1}"
        return mapping[name]

    return RefForm(r.quant, _next(r.var), rename(r.restrictor))


def goal_formula(t: TaskInstruction):
    """The instruction as a closed sentence: the direct quantifier scopes over
    an embedded indirect quantifier relating each moved object to the
    landmark(s)."""
    indirect = _shift_vars(t.indirect)
    rel = Atom(Symbol(t.relation, 2), (Var("x"), Var(indirect.var)))
    body = GQ(indirect.quant, indirect.var, indirect.restrictor, rel)
    return GQ(t.direct.quant, "x", t.direct.restrictor, body)


def goal_satisfied(scene: Scene, t: TaskInstruction) -> bool:
    return eval_formula(ground_truth(scene), {}, goal_formula(t))


def _candidate_poses(scene: Scene, landmark_ids: Sequence[str]):
    lows = -2.0
    highs = scene.grid + 1.0
    landmark = scene.by_id(landmark_ids[0])
    xs = np.arange(lows, highs + 0.25, 0.5)
    ys = np.arange(lows, highs + 0.25, 0.5)
    poses = [(float(x), float(y)) for x in xs for y in ys]
    poses.sort(key=lambda p: (abs(p[0] - landmark.x) + abs(p[1] - landmark.y), p[0], p[1]))
    return poses


_CONTAINER_SLOTS = ((-0.32, -0.32), (-0.16, -0.16), (0.16, 0.16), (0.32, 0.32))


def find_pose(scene: Scene, moving: str, rel: str, landmark_ids: Sequence[str]):
    """First deterministic pose that realizes the relation to every landmark
    and keeps the margin to every other object."""
    if rel == "inside":
        container = scene.by_id(landmark_ids[0])
        if not container.is_container:
            raise PlanningError(f"{container.id} is not a container")
        for dx, dy in _CONTAINER_SLOTS:
            x, y = container.x + dx, container.y + dy
            if _pose_free(scene, moving, x, y):
                return (x, y)
        raise PlanningError("no free slot inside the container")
    containers = [o for o in scene.objects if o.is_container and o.id != moving]
    for x, y in _candidate_poses(scene, landmark_ids):
        if any(abs(x - c.x) <= scene.container_half and abs(y - c.y) <= scene.container_half
               for c in containers):
            continue  # directional placements stay out of container footprints
        if not _pose_free(scene, moving, x, y):
            continue
        trial_objects = tuple(replace(o, x=x, y=y) if o.id == moving else o
                              for o in scene.objects)
        trial = replace(scene, objects=trial_objects)
        if all(spatial_holds(trial, rel, moving, l) for l in landmark_ids):
            return (x, y)
    raise PlanningError(f"no pose realizes {rel} of {landmark_ids}")


def plan_execution(model: DomainModel, t: TaskInstruction, scene: Scene) -> list:
    """Pick/place sequence under the estimated model, then a completion claim.

    A goal the model already takes to hold (including vacuously, when a
    universal direct referent is empty) plans straight to the completion
    claim.  Multi-member referents resolve to the first disjoint member pair
    in object order; reference failure raises PlanningError so the caller
    can fall back to asking.
    """
    if eval_formula(model, {}, goal_formula(t)):
        return [Complete()]
    direct_ref = [m for m in sorted_referent(model, referent_of(model, t.direct)) if m]
    indirect_ref = [m for m in sorted_referent(model, referent_of(model, t.indirect)) if m]
    if not direct_ref or not indirect_ref:
        raise PlanningError("reference failure under the estimated model")
    chosen = next(((d, i) for d in direct_ref for i in indirect_ref if not (d & i)), None)
    if chosen is None:
        raise PlanningError("direct and indirect referents overlap")
    targets = sorted(chosen[0], key=model.objects.index)
    landmarks = tuple(sorted(chosen[1], key=model.objects.index))
    actions = []
    work = scene
    for obj in targets:
        if all(spatial_holds(work, t.relation, obj, l) for l in landmarks):
            continue
        pos = find_pose(work, obj, t.relation, landmarks)
        actions.append(Pick(obj))
        actions.append(Place(obj, pos, landmarks))
        objects = tuple(replace(o, x=pos[0], y=pos[1]) if o.id == obj else o
                        for o in work.objects)
        work = replace(work, objects=objects)
    actions.append(Complete())
    return actions


# ---------------------------------------------------------------------------
# oracle teacher

class ReferenceFailure:
    """Answer token for a question whose ground-truth referent is empty."""

    def __repr__(self):
        return "ReferenceFailure()"


REFERENCE_FAILURE = ReferenceFailure()


def _category_value(obj: SceneObject, category: str) -> str:
    if category == "color":
        return obj.color
    if category == "shape":
        return obj.shape
    if category == "texture":
        return obj.texture
    return "object"


def _correction_refexp(obj: SceneObject, restrictor_symbols: Sequence[str]) -> RefForm:
    """Name the object's true attribute in the category of the violated
    conjunct; the head noun's category wins when several are violated, and
    the head noun is kept when it itself holds."""
    head = restrictor_symbols[-1]

    def holds(sym: str) -> bool:
        if sym == "object":
            return True
        return sym in (obj.color, obj.shape, obj.texture)

    violated = [s for s in restrictor_symbols if not holds(s)]
    if not violated:
        raise SimulationError("correction requested for a non-violating object")
    if head in violated:
        named = _category_value(obj, CATEGORY.get(head, "shape"))
        words = [named]
    else:
        named = _category_value(obj, CATEGORY.get(violated[0], "color"))
        words = [named, head]
    from .grammar import parse_refexp  # local import avoids a cycle at module load
    return parse_refexp("a " + " ".join(words))


class OracleTeacher:
    """Scripted collaborative teacher: answers from ground truth, corrects
    suboptimal actions, never lies."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def answer(self, question_refexp: RefForm, scene: Scene, t: TaskInstruction):
        model = ground_truth(scene)
        members = [m for m in sorted_referent(model, referent_of(model, question_refexp)) if m]
        if not members:
            return REFERENCE_FAILURE
        choice = members[int(self.rng.integers(len(members)))]
        return tuple(sorted(choice, key=scene.ids.index))

    def feedback(self, action, scene: Scene, t: TaskInstruction) -> Optional[Correction]:
        model = ground_truth(scene)
        if isinstance(action, Pick):
            direct_syms = content_symbols(t.direct)
            sat = set(satisfiers(model, t.direct.restrictor, t.direct.var))
            if action.obj in sat:
                return None
            refexp = _correction_refexp(scene.by_id(action.obj), direct_syms)
            return Correction(f"No. This is {render_refexp(refexp)}.", refexp, action.obj)
        if isinstance(action, Place):
            indirect_syms = content_symbols(t.indirect)
            sat = set(satisfiers(model, t.indirect.restrictor, t.indirect.var))
            wrong = [l for l in action.landmarks if l not in sat]
            if not wrong:
                return None
            refexp = _correction_refexp(scene.by_id(wrong[0]), indirect_syms)
            return Correction(f"No. This is {render_refexp(refexp)}.", refexp, wrong[0])
        if isinstance(action, Complete):
            if goal_satisfied(scene, t):
                return None
            direct_syms = content_symbols(t.direct)
            goal = goal_formula(t)
            body = goal.body
            renegade = None
            for o in satisfiers(model, t.direct.restrictor, t.direct.var):
                if not eval_formula(model, {"x": o}, body):
                    renegade = o
                    break
            if renegade is None:
                raise SimulationError("goal unsatisfied but no renegade object found")
            head = direct_syms[-1]
            named = _category_value(scene.by_id(renegade), CATEGORY.get(head, "shape"))
            from .grammar import parse_refexp
            refexp = parse_refexp("a " + named)
            return Correction(f"No. This is {render_refexp(refexp)}.", refexp, renegade)
        raise SimulationError(f"unknown action {action!r}")


# ---------------------------------------------------------------------------
# task generation

def _attr_symbols(obj: SceneObject) -> dict:
    return {"color": obj.color, "shape": obj.shape, "texture": obj.texture}


def _sample_restrictor(scene: Scene, rng: np.random.Generator,
                       allow_object_head: bool = True) -> tuple:
    """Returns (symbols list ending at the head noun, satisfier id set)."""
    movables = [o for o in scene.objects if not o.is_container]
    target = movables[int(rng.integers(len(movables)))]
    head_pool = [target.shape]
    if allow_object_head:
        head_pool.append("object")
    head = head_pool[int(rng.integers(len(head_pool)))] if rng.random() < 0.25 else target.shape
    mods = []
    if rng.random() < 0.45:
        mods.append(target.color)
    if rng.random() < 0.35:
        mods.append(target.texture)
    symbols = mods + [head]
    sat = set()
    for o in scene.objects:
        attrs = {o.color, o.shape, o.texture, "object"}
        if all(s in attrs for s in symbols):
            sat.add(o.id)
    return symbols, sat


def generate_task(scene: Scene, rng: np.random.Generator,
                  max_moves: int = 3, tries: int = 60) -> TaskInstruction:
    """A satisfiable rearrangement over the scene vocabulary: nonempty ground
    referents, direct and indirect sets disjoint, a bounded move count, and a
    goal that does not already hold (so acting is never vacuous)."""
    from .grammar import parse_instruction
    container = next((o for o in scene.objects if o.is_container), None)
    for _ in range(tries):
        use_container = container is not None and rng.random() < 0.5
        d_syms, d_sat = _sample_restrictor(scene, rng, allow_object_head=not use_container)
        if not d_sat or (container is not None and container.id in d_sat):
            continue
        quant_roll = rng.random()
        if quant_roll < 0.4 and len(d_sat) <= max_moves:
            det = "the " + {1: "one", 2: "two", 3: "three"}[len(d_sat)]
            plural = len(d_sat) > 1
        elif quant_roll < 0.7 and len(d_sat) <= max_moves:
            det = "every"
            plural = False
        else:
            det = "a"
            plural = False
        d_words = " ".join(_surface_words(d_syms, plural))
        if use_container:
            text = f"put {det} {d_words} inside the basket"
            parsed = parse_instruction(text)
            if d_sat & {container.id} or goal_satisfied(scene, parsed):
                continue
            return parsed
        i_syms, i_sat = _sample_restrictor(scene, rng, allow_object_head=False)
        if not i_sat or (i_sat & d_sat) or (container is not None and container.id in i_sat):
            continue
        if len(i_sat) == 1 and rng.random() < 0.6:
            i_det = "the one"
        elif len(i_sat) <= max_moves and rng.random() < 0.3:
            i_det = "the " + {1: "one", 2: "two", 3: "three"}[len(i_sat)]
        else:
            i_det = "a"
        i_plural = i_det in ("the two", "the three")
        i_words = " ".join(_surface_words(i_syms, i_plural))
        rel = ("left", "right", "front", "behind")[int(rng.integers(4))]
        rel_surface = {"left": "to the left of", "right": "to the right of",
                       "front": "in front of", "behind": "behind"}[rel]
        text = f"move {det} {d_words} {rel_surface} {i_det} {i_words}"
        parsed = parse_instruction(text)
        if goal_satisfied(scene, parsed):
            continue
        return parsed
    raise SimulationError("could not sample a satisfiable task for this scene")


def _surface_words(symbols: Sequence[str], plural: bool) -> list:
    from .grammar import SURFACE, pluralize
    words = [SURFACE.get(s, s) for s in symbols[:-1]]
    words.append(pluralize(symbols[-1]) if plural else SURFACE.get(symbols[-1], symbols[-1]))
    return words


# ---------------------------------------------------------------------------
# scene files

def scene_to_dict(scene: Scene) -> dict:
    return {
        "seed": scene.seed,
        "eps_pos": scene.eps_pos,
        "grid": scene.grid,
        "objects": [
            {"id": o.id, "position": [o.x, o.y], "color": o.color,
             "shape": o.shape, "texture": o.texture,
             "embedding": list(o.embedding)}
            for o in scene.objects
        ],
    }


def scene_from_dict(data: dict, noise_sigma: float = 0.1, dim: int = 16) -> Scene:
    rng = np.random.default_rng(int(data.get("seed", 0)))
    objects = []
    for entry in data["objects"]:
        emb = entry.get("embedding")
        if emb is None:
            emb = synth_embedding(entry["color"], entry["shape"], entry["texture"],
                                  noise_sigma, rng, dim)
        objects.append(SceneObject(
            id=entry["id"], x=float(entry["position"][0]), y=float(entry["position"][1]),
            color=entry["color"], shape=entry["shape"], texture=entry["texture"],
            embedding=tuple(float(v) for v in emb),
        ))
    return Scene(tuple(objects), seed=int(data.get("seed", 0)),
                 eps_pos=float(data.get("eps_pos", 0.1)), grid=int(data.get("grid", 8)))


def load_scene(path: str) -> Scene:
    with open(path) as fh:
        return scene_from_dict(json.load(fh))


def save_scene(scene: Scene, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(scene_to_dict(scene), fh, indent=2, sort_keys=True)
