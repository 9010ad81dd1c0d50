"""Ordered ideal triangulations: parsing, signs, edge classes, angle data.

Conventions
-----------
* Edge indices of a tetrahedron: 0:01 1:02 2:03 3:12 4:13 5:23.
* Dihedral angles: a on 01/23, b on 02/13, c on 03/12.
* Shapes: z sits on the a-edges. For a positive tetrahedron z' is paired
  with c and z'' with b; a negative tetrahedron swaps the two.
* Face k is the face opposite vertex k. Its three vertices are carried, in
  increasing order, to the three vertices of the target face.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .errors import MalformedInput, OrderViolation, UnknownEdge, UnpairedFace

EDGES = tuple(combinations(range(4), 2))
EDGE_INDEX = {e: i for i, e in enumerate(EDGES)}
ANGLE_OF_EDGE = (0, 1, 2, 2, 1, 0)  # 0:a 1:b 2:c
ANGLE_NAMES = "abc"
SHAPE_NAMES = ("z", "z'", "z''")


def shape_of_angle(eps: int, angle: int) -> int:
    """0 -> z, 1 -> z', 2 -> z''."""
    if angle == 0:
        return 0
    if eps == 1:
        return 1 if angle == 2 else 2
    return 1 if angle == 1 else 2


def angle_of_shape(eps: int, shape: int) -> int:
    for ang in range(3):
        if shape_of_angle(eps, ang) == shape:
            return ang
    raise ValueError(shape)


def face_vertices(k: int) -> tuple[int, ...]:
    return tuple(v for v in range(4) if v != k)


def face_map(k: int, m: int) -> dict[int, int]:
    """Order-respecting vertex map from face k to face m."""
    return dict(zip(face_vertices(k), face_vertices(m)))


@dataclass(frozen=True)
class PeripheralCurve:
    c: tuple[int, ...]
    cp: tuple[int, ...]
    cpp: tuple[int, ...]

    @classmethod
    def zero(cls, N: int) -> "PeripheralCurve":
        return cls((0,) * N, (0,) * N, (0,) * N)

    def negated(self) -> "PeripheralCurve":
        return PeripheralCurve(
            tuple(-x for x in self.c), tuple(-x for x in self.cp), tuple(-x for x in self.cpp)
        )

    def permuted(self, perm: Sequence[int]) -> "PeripheralCurve":
        # perm[old] = new
        def p(v):
            out = [0] * len(v)
            for old, new in enumerate(perm):
                out[new] = v[old]
            return tuple(out)

        return PeripheralCurve(p(self.c), p(self.cp), p(self.cpp))

    def to_json(self) -> dict:
        return {"c": list(self.c), "cp": list(self.cp), "cpp": list(self.cpp)}


@dataclass(frozen=True)
class AngleStructure:
    """Angles in radians, shape (N, 3) columns a, b, c. Exact pi-multiples optional."""

    angles: np.ndarray
    exact: tuple[tuple[Fraction, Fraction, Fraction], ...] | None = None

    @classmethod
    def from_pi_fractions(cls, rows: Sequence[Sequence]) -> "AngleStructure":
        ex = tuple(tuple(Fraction(x) for x in r) for r in rows)
        arr = np.array([[float(x) * np.pi for x in r] for r in ex], dtype=float)
        return cls(arr, ex)

    @classmethod
    def uniform(cls, N: int) -> "AngleStructure":
        return cls.from_pi_fractions([[Fraction(1, 3)] * 3 for _ in range(N)])

    @property
    def a(self) -> np.ndarray:
        return self.angles[:, 0]

    @property
    def b(self) -> np.ndarray:
        return self.angles[:, 1]

    @property
    def c(self) -> np.ndarray:
        return self.angles[:, 2]

    def is_shape_structure(self, tol: float = 1e-12) -> bool:
        return bool(
            np.all(self.angles > 0)
            and np.all(self.angles < np.pi)
            and np.allclose(self.angles.sum(axis=1), np.pi, atol=tol)
        )


@dataclass(frozen=True)
class OrderedTriangulation:
    N: int
    gluings: tuple[tuple[tuple[int, int], ...], ...]
    signs: tuple[int, ...]
    edge_classes: tuple[tuple[tuple[int, int], ...], ...]  # (tet, edge index)
    face_classes: tuple[tuple[tuple[int, int], tuple[int, int]], ...]
    meridian: PeripheralCurve
    longitude: PeripheralCurve
    name: str = ""
    face_labels: tuple[tuple[str, int, int], ...] | None = None
    sign_flip: bool = False
    # (i, tet) -> counts of z, z', z'' corners
    incidence: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def num_edges(self) -> int:
        return len(self.edge_classes)

    def edge_class_of(self, tet: int, edge: int) -> int:
        for i, cls in enumerate(self.edge_classes):
            if (tet, edge) in cls:
                return i
        raise UnknownEdge((tet, edge))


def _union_find(n):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)

    return find, union


def _compute_signs(N, gluings, flip=False):
    eps = [0] * N
    eps[0] = -1 if flip else 1
    stack = [0]
    while stack:
        t = stack.pop()
        for k, (t2, m) in enumerate(gluings[t]):
            want = -eps[t] * (-1) ** (k + m)
            if eps[t2] == 0:
                eps[t2] = want
                stack.append(t2)
            elif eps[t2] != want:
                raise MalformedInput("gluings are not orientation consistent")
    if 0 in eps:
        raise MalformedInput("triangulation is disconnected")
    return tuple(eps)


def build_triangulation(
    gluings: Sequence[Sequence[tuple[int, int]]],
    meridian: PeripheralCurve | None = None,
    longitude: PeripheralCurve | None = None,
    name: str = "",
    face_labels=None,
    sign_flip: bool = False,
    perms: Sequence[Sequence[Sequence[int] | None]] | None = None,
) -> OrderedTriangulation:
    N = len(gluings)
    if N == 0:
        raise MalformedInput("no tetrahedra")
    G = []
    for t in range(N):
        row = gluings[t]
        if len(row) != 4:
            raise MalformedInput(f"tetrahedron {t} needs 4 faces")
        out = []
        for k, tgt in enumerate(row):
            if tgt is None:
                raise UnpairedFace(f"face {k} of tetrahedron {t} is not glued")
            t2, m = int(tgt[0]), int(tgt[1])
            if not (0 <= t2 < N and 0 <= m < 4):
                raise MalformedInput(f"bad target {tgt} at ({t},{k})")
            out.append((t2, m))
        G.append(tuple(out))
    for t in range(N):
        for k, (t2, m) in enumerate(G[t]):
            if (t2, m) == (t, k) or G[t2][m] != (t, k):
                raise UnpairedFace(f"face ({t},{k}) has no partner")
            if perms is not None and perms[t][k] is not None:
                p = list(perms[t][k])
                if sorted(p) != [0, 1, 2, 3] or p[k] != m:
                    raise MalformedInput(f"bad permutation at ({t},{k})")
                if [p[v] for v in face_vertices(k)] != list(face_vertices(m)):
                    raise OrderViolation(f"gluing ({t},{k})->({t2},{m}) does not respect vertex order")

    signs = _compute_signs(N, G, sign_flip)

    # edge classes
    find, union = _union_find(6 * N)
    vfind, vunion = _union_find(4 * N)
    for t in range(N):
        for k, (t2, m) in enumerate(G[t]):
            fm = face_map(k, m)
            for v, w in combinations(face_vertices(k), 2):
                e2 = tuple(sorted((fm[v], fm[w])))
                union(6 * t + EDGE_INDEX[(v, w)], 6 * t2 + EDGE_INDEX[e2])
            for v in face_vertices(k):
                vunion(4 * t + v, 4 * t2 + fm[v])
    classes: dict[int, list] = {}
    for x in range(6 * N):
        classes.setdefault(find(x), []).append((x // 6, x % 6))
    edge_classes = tuple(tuple(sorted(c)) for c in sorted(classes.values()))
    nverts = len({vfind(x) for x in range(4 * N)})
    if nverts != 1 or len(edge_classes) != N:
        raise MalformedInput(
            f"expected one cusp and N edges, got {nverts} vertices and {len(edge_classes)} edges"
        )

    faces = []
    seen = set()
    for t in range(N):
        for k in range(4):
            if (t, k) in seen:
                continue
            other = G[t][k]
            seen.update({(t, k), other})
            faces.append(((t, k), other))

    inc = np.zeros((N, N, 3), dtype=np.int64)
    for i, cls in enumerate(edge_classes):
        for t, e in cls:
            inc[i, t, shape_of_angle(signs[t], ANGLE_OF_EDGE[e])] += 1

    zero = PeripheralCurve.zero(N)
    mer = meridian or zero
    lon = longitude or zero
    for curve in (mer, lon):
        if not (len(curve.c) == len(curve.cp) == len(curve.cpp) == N):
            raise MalformedInput("peripheral arrays must have length N")

    labels = None
    if face_labels is not None:
        labels = tuple((str(l), int(t), int(k)) for l, t, k in face_labels)
        if len(labels) != 2 * N:
            raise MalformedInput("face_labels must name all 2N faces")
        cls_of = {}
        for j, (p, q) in enumerate(faces):
            cls_of[p] = cls_of[q] = j
        if sorted(cls_of[(t, k)] for _, t, k in labels) != list(range(2 * N)):
            raise MalformedInput("face_labels must hit every face class once")

    return OrderedTriangulation(
        N=N,
        gluings=tuple(G),
        signs=signs,
        edge_classes=edge_classes,
        face_classes=tuple(faces),
        meridian=mer,
        longitude=lon,
        name=name,
        face_labels=labels,
        sign_flip=sign_flip,
        incidence=inc,
    )


def _curve_from_json(d, N) -> PeripheralCurve:
    try:
        c, cp, cpp = d["c"], d["cp"], d["cpp"]
        return PeripheralCurve(tuple(int(x) for x in c), tuple(int(x) for x in cp), tuple(int(x) for x in cpp))
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"bad peripheral curve: {exc}") from exc


def parse_triangulation(text: str | Mapping) -> OrderedTriangulation:
    if isinstance(text, Mapping):
        data = text
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"not JSON: {exc}") from exc
    if not isinstance(data, Mapping):
        raise MalformedInput("top level must be an object")
    try:
        N = int(data["num_tetrahedra"])
        raw = data["gluings"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"missing field: {exc}") from exc
    if not isinstance(raw, list) or len(raw) != N:
        raise MalformedInput("gluings must list every tetrahedron")
    gl, perms = [], []
    for t, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != 4:
            raise MalformedInput(f"tetrahedron {t} needs 4 face entries")
        grow, prow = [], []
        for entry in row:
            if entry is None:
                grow.append(None)
                prow.append(None)
                continue
            try:
                grow.append((int(entry["tet"]), int(entry["face"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedInput(f"bad gluing entry {entry!r}") from exc
            prow.append(entry.get("perm"))
        gl.append(grow)
        perms.append(prow)
    per = data.get("peripheral", {}) or {}
    mer = _curve_from_json(per["meridian"], N) if "meridian" in per else None
    lon = _curve_from_json(per["longitude"], N) if "longitude" in per else None
    labels = data.get("face_labels")
    if labels is not None:
        try:
            labels = [(d["label"], d["tet"], d["face"]) for d in labels]
        except (KeyError, TypeError) as exc:
            raise MalformedInput(f"bad face_labels: {exc}") from exc
    return build_triangulation(
        gl, mer, lon, name=str(data.get("name", "")), face_labels=labels,
        sign_flip=bool(data.get("flip_orientation", False)), perms=perms,
    )


def serialize(T: OrderedTriangulation) -> str:
    d = {
        "name": T.name,
        "num_tetrahedra": T.N,
        "gluings": [[{"tet": t, "face": m} for t, m in row] for row in T.gluings],
        "peripheral": {"meridian": T.meridian.to_json(), "longitude": T.longitude.to_json()},
    }
    if T.face_labels is not None:
        d["face_labels"] = [{"label": l, "tet": t, "face": k} for l, t, k in T.face_labels]
    if T.sign_flip:
        d["flip_orientation"] = True
    return json.dumps(d, sort_keys=True)


def renumber(T: OrderedTriangulation, perm: Sequence[int]) -> OrderedTriangulation:
    """Relabel tetrahedra: old index t becomes perm[t]."""
    N = T.N
    inv = [0] * N
    for old, new in enumerate(perm):
        inv[new] = old
    gl = [[(perm[t2], m) for t2, m in T.gluings[inv[new]]] for new in range(N)]
    labels = None
    if T.face_labels is not None:
        labels = [(l, perm[t], k) for l, t, k in T.face_labels]
    # keep the orientation of the old first tetrahedron
    flip = T.signs[inv[0]] == -1
    return build_triangulation(
        gl, T.meridian.permuted(perm), T.longitude.permuted(perm), T.name, labels, flip
    )


def canonical_form(T: OrderedTriangulation) -> tuple:
    """Relabelling-invariant key: lexicographically least BFS numbering."""
    best = None
    for start in range(T.N):
        order = {start: 0}
        queue = [start]
        while queue:
            t = queue.pop(0)
            for t2, _ in T.gluings[t]:
                if t2 not in order:
                    order[t2] = len(order)
                    queue.append(t2)
        inv = sorted(order, key=order.get)
        key = tuple(tuple((order[t2], m) for t2, m in T.gluings[t]) for t in inv)
        if best is None or key < best:
            best = key
    return best


# -- edge incidence --------------------------------------------------------

def classify_edges(T: OrderedTriangulation) -> np.ndarray:
    """Array inc[i, j, s]: corners of shape s (0:z 1:z' 2:z'') of tet j around edge i."""
    return T.incidence.copy()


def weight_terms(T: OrderedTriangulation, e: int) -> dict[tuple[int, str], int]:
    if not 0 <= e < T.num_edges:
        raise UnknownEdge(e)
    out: dict[tuple[int, str], int] = {}
    for t, ei in T.edge_classes[e]:
        key = (t, ANGLE_NAMES[ANGLE_OF_EDGE[ei]])
        out[key] = out.get(key, 0) + 1
    return out


def weight_expression(T: OrderedTriangulation, e: int, tet_names: Sequence[str] | None = None) -> str:
    names = tet_names or [str(t) for t in range(T.N)]
    parts = []
    for (t, ang), cnt in sorted(weight_terms(T, e).items()):
        parts.append(f"{'' if cnt == 1 else cnt}{ang}_{names[t]}")
    return " + ".join(parts)


def weight_function(T: OrderedTriangulation, alpha: AngleStructure, e: int) -> float:
    terms = weight_terms(T, e)
    return float(sum(cnt * alpha.angles[t, "abc".index(ang)] for (t, ang), cnt in terms.items()))


def weight_function_exact(T: OrderedTriangulation, alpha: AngleStructure, e: int) -> Fraction:
    """Weight in units of pi, for structures carrying exact angles."""
    if alpha.exact is None:
        raise ValueError("angle structure has no exact data")
    terms = weight_terms(T, e)
    return sum((cnt * alpha.exact[t]["abc".index(ang)] for (t, ang), cnt in terms.items()), Fraction(0))


def in_angle_space(T: OrderedTriangulation, alpha: AngleStructure, tol: float = 1e-10) -> bool:
    if not alpha.is_shape_structure(tol):
        return False
    return all(abs(weight_function(T, alpha, e) - 2 * np.pi) < tol for e in range(T.num_edges))


def shape_angles(T: OrderedTriangulation, alpha: AngleStructure) -> np.ndarray:
    """(N, 3) array of angles paired with z, z', z''."""
    out = np.empty((T.N, 3))
    for t in range(T.N):
        for s in range(3):
            out[t, s] = alpha.angles[t, angle_of_shape(T.signs[t], s)]
    return out


def angular_holonomy(T: OrderedTriangulation, alpha: AngleStructure, sigma: PeripheralCurve) -> float:
    sa = shape_angles(T, alpha)
    coeffs = np.array([sigma.c, sigma.cp, sigma.cpp], dtype=float).T
    return float((coeffs * sa).sum())


def load_bundled(name: str = "fig8") -> OrderedTriangulation:
    from importlib import resources

    text = resources.files("famed.data").joinpath(f"{name}.json").read_text()
    return parse_triangulation(text)
