"""Two-dimensional cobordism classes, generator words, and their target data.

A cobordism class records, per connected component, the genus and the
wiring of its boundary circles to the ordered source/target circles.
Composition glues every target circle of the first class to the matching
source circle of the second; the genus bookkeeping follows Euler
characteristic (a merged group of C components glued along P circle
pairs gains P - C + 1 handles).  Quivers thicken to classes through
their component invariants, and the class of a bounded component maps to
the dimension and octopus shape of its associated reduced space.
"""

from __future__ import annotations

from dataclasses import dataclass

from .homotopy import OctopusForm

__all__ = [
    "ArityMismatchError",
    "CobComponent",
    "CobClass",
    "GENERATORS",
    "generator_class",
    "identity_class",
    "CobWord",
    "parse_word",
    "evaluate",
    "compose",
    "tensor",
    "thicken",
    "quiver_for",
    "ModuliSpace",
    "Point",
    "FormalSequence",
    "ham_description",
    "check_relations",
    "RelationResult",
]


class ArityMismatchError(Exception):
    pass


@dataclass(frozen=True)
class CobComponent:
    """One connected piece: genus plus the source/target circles it owns."""

    genus: int
    inputs: tuple
    outputs: tuple

    def key(self):
        return (self.inputs, self.outputs, self.genus)

    @property
    def closed(self):
        return not self.inputs and not self.outputs


@dataclass(frozen=True)
class CobClass:
    """Isomorphism class of a cobordism between ordered circle families."""

    n_in: int
    n_out: int
    components: tuple

    @staticmethod
    def build(n_in, n_out, components):
        comps = tuple(
            sorted(
                (
                    CobComponent(c.genus, tuple(sorted(c.inputs)), tuple(sorted(c.outputs)))
                    for c in components
                ),
                key=lambda c: c.key(),
            )
        )
        seen_in = sorted(i for c in comps for i in c.inputs)
        seen_out = sorted(o for c in comps for o in c.outputs)
        if seen_in != list(range(n_in)) or seen_out != list(range(n_out)):
            raise ArityMismatchError("boundary circles must partition the objects")
        return CobClass(n_in, n_out, comps)

    def component_shapes(self):
        return sorted((c.genus, len(c.inputs), len(c.outputs)) for c in self.components)


_GEN_DATA = {
    "cup": (1, 0),
    "cap": (0, 1),
    "merge": (2, 1),
    "split": (1, 2),
    "id": (1, 1),
    "cyl": (1, 1),
    "swap": (2, 2),
}

GENERATORS = tuple(sorted(_GEN_DATA))


def generator_class(name):
    name = name.lower()
    if name not in _GEN_DATA:
        raise ArityMismatchError(f"unknown generator {name!r}")
    if name == "swap":
        return CobClass.build(
            2,
            2,
            [CobComponent(0, (0,), (1,)), CobComponent(0, (1,), (0,))],
        )
    n_in, n_out = _GEN_DATA[name]
    return CobClass.build(
        n_in, n_out, [CobComponent(0, tuple(range(n_in)), tuple(range(n_out)))]
    )


def identity_class(n):
    return CobClass.build(
        n, n, [CobComponent(0, (i,), (i,)) for i in range(n)]
    )


def tensor(c1, c2):
    """Disjoint union with c2's circles placed after c1's."""
    comps = list(c1.components)
    comps += [
        CobComponent(
            c.genus,
            tuple(i + c1.n_in for i in c.inputs),
            tuple(o + c1.n_out for o in c.outputs),
        )
        for c in c2.components
    ]
    return CobClass.build(c1.n_in + c2.n_in, c1.n_out + c2.n_out, comps)


def compose(c1, c2):
    """Glue every target circle of c1 to the same-position source circle of c2."""
    if c1.n_out != c2.n_in:
        raise ArityMismatchError(
            f"cannot compose: {c1.n_out} outputs against {c2.n_in} inputs"
        )
    # union-find over the components of both sides
    nodes = [("a", i) for i in range(len(c1.components))]
    nodes += [("b", j) for j in range(len(c2.components))]
    parent = {n: n for n in nodes}

    def find(n):
        while parent[n] != n:
            parent[n] = parent[parent[n]]
            n = parent[n]
        return n

    def union(m, n):
        rm, rn = find(m), find(n)
        if rm != rn:
            parent[rm] = rn

    owner_out = {}
    for i, c in enumerate(c1.components):
        for o in c.outputs:
            owner_out[o] = ("a", i)
    owner_in = {}
    for j, c in enumerate(c2.components):
        for i in c.inputs:
            owner_in[i] = ("b", j)
    for circle in range(c1.n_out):
        union(owner_out[circle], owner_in[circle])

    groups = {}
    for n in nodes:
        groups.setdefault(find(n), []).append(n)
    merged = []
    for members in groups.values():
        genus_sum = 0
        inputs = []
        outputs = []
        pairs = 0
        for side, idx in members:
            c = (c1 if side == "a" else c2).components[idx]
            genus_sum += c.genus
            if side == "a":
                inputs.extend(c.inputs)
                pairs += len(c.outputs)
            else:
                outputs.extend(c.outputs)
        genus = genus_sum + pairs - len(members) + 1
        merged.append(CobComponent(genus, tuple(inputs), tuple(outputs)))
    return CobClass.build(c1.n_in, c2.n_out, merged)


@dataclass(frozen=True)
class CobWord:
    """Layers of generator names; adjacent layers must compose."""

    layers: tuple

    @staticmethod
    def build(layers):
        return CobWord(tuple(tuple(name.lower() for name in layer) for layer in layers))

    def to_text(self):
        return ";".join(",".join(layer) for layer in self.layers)


def parse_word(text):
    layers = []
    for chunk in text.strip().split(";"):
        names = [name.strip() for name in chunk.split(",") if name.strip()]
        if not names:
            raise ArityMismatchError("empty layer in word")
        layers.append(names)
    if not layers:
        raise ArityMismatchError("empty word")
    return CobWord.build(layers)


def _layer_class(layer):
    cls = generator_class(layer[0])
    for name in layer[1:]:
        cls = tensor(cls, generator_class(name))
    return cls


def evaluate(word):
    """Value of a generator word as a cobordism class."""
    if isinstance(word, str):
        word = parse_word(word)
    cls = _layer_class(word.layers[0])
    for layer in word.layers[1:]:
        cls = compose(cls, _layer_class(layer))
    return cls


def thicken(q):
    """Cobordism class of a quiver: per component its invariants, sources
    and targets wired in sorted boundary-vertex order."""
    q_in = q.boundary_in()
    q_out = q.boundary_out()
    pos_in = {v: i for i, v in enumerate(q_in)}
    pos_out = {v: i for i, v in enumerate(q_out)}
    comps = []
    for comp, genus, _, _ in q.invariants():
        comps.append(
            CobComponent(
                genus,
                tuple(pos_in[v] for v in comp.boundary_in()),
                tuple(pos_out[v] for v in comp.boundary_out()),
            )
        )
    return CobClass.build(len(q_in), len(q_out), comps)


def quiver_for(cls):
    """A quiver realizing a class whose components all have boundary.

    In/out leg labels encode the circle positions so that thickening the
    result reproduces the class exactly.
    """
    from .quiver import Quiver

    vertices = []
    edges = []
    for k, comp in enumerate(cls.components):
        if comp.closed:
            raise ArityMismatchError("closed components have no quiver model")
        hub = f"c{k}"
        ins = [f"in{i:03d}" for i in comp.inputs]
        outs = [f"out{o:03d}" for o in comp.outputs]
        shape = OctopusForm(comp.genus, len(ins), len(outs))
        part = shape.realize(in_labels=ins, out_labels=outs, hub=hub)
        vertices.extend(sorted(part.vertices))
        edges.extend((e.id + f"_{k}", e.src, e.dst) for e in part.edges)
    return Quiver.build(vertices, edges)


@dataclass(frozen=True)
class ModuliSpace:
    dimension: int
    shape: OctopusForm


@dataclass(frozen=True)
class Point:
    pass


@dataclass(frozen=True)
class FormalSequence:
    """Closed component cut along one circle into two bounded pieces."""

    parts: tuple  # two (genus, n_in, n_out) shapes composing to the surface


def ham_description(cls, spec):
    """Target datum per component.

    Bounded components with at least two boundary-or-handle features map
    to a reduced space of dimension 2 (g + m + n - 1) dim G with their
    octopus shape; disks map to a point; closed components map to a
    formal two-part cut.
    """
    out = []
    for comp in cls.components:
        g = comp.genus
        m = len(comp.inputs)
        n = len(comp.outputs)
        if comp.closed:
            out.append(FormalSequence(((0, 0, 1), (g, 1, 0))))
        elif g == 0 and m + n == 1:
            out.append(Point())
        else:
            out.append(
                ModuliSpace(2 * (g + m + n - 1) * spec.dim, OctopusForm(g, m, n))
            )
    return out


def _dims(cls, spec):
    return sorted(
        d.dimension if isinstance(d, ModuliSpace) else 0
        for d in ham_description(cls, spec)
    )


@dataclass(frozen=True)
class RelationResult:
    name: str
    lhs: CobClass
    rhs: CobClass
    equal: bool
    dims_consistent: bool


_RELATIONS = [
    ("unit-left", "cap,id;merge", "id"),
    ("unit-right", "id,cap;merge", "id"),
    ("counit-left", "split;cup,id", "id"),
    ("counit-right", "split;id,cup", "id"),
    ("associativity", "merge,id;merge", "id,merge;merge"),
    ("coassociativity", "split;split,id", "split;id,split"),
    ("frobenius-left", "id,split;merge,id", "merge;split"),
    ("frobenius-right", "split,id;id,merge", "merge;split"),
    ("commutativity", "swap;merge", "merge"),
    ("cocommutativity", "split;swap", "split"),
    ("swap-involution", "swap;swap", "id,id"),
    ("swap-unit", "cap,id;swap", "id,cap"),
    ("swap-counit", "cup,id", "swap;id,cup"),
    ("twist", "split;swap;merge", "split;merge"),
]


def check_relations(spec):
    """Evaluate both sides of the generating relations as classes."""
    out = []
    for name, lhs_word, rhs_word in _RELATIONS:
        lhs = evaluate(lhs_word)
        rhs = evaluate(rhs_word)
        out.append(
            RelationResult(
                name,
                lhs,
                rhs,
                lhs == rhs,
                _dims(lhs, spec) == _dims(rhs, spec),
            )
        )
    return out
