"""JSON input parsing with line-numbered validation errors.

Rationals are written as ``"p/q"`` strings (plain JSON integers are also
accepted); floats are rejected.
"""

from __future__ import annotations

import json
from fractions import Fraction
from json.decoder import scanstring
from typing import Any, Dict, List, Tuple

from .errors import ValidationError
from .geometry import LatticePolytope
from .plfun import AffinePiece, PLConvexFunction
from .quantize import SubtorusDirections, ToricTestConfig

Path = Tuple[Any, ...]


class InputError(ValidationError):
    """Validation error tied to a location in a JSON document."""

    def __init__(self, message: str, path: Path = (), line: int | None = None):
        self.path = path
        self.line = line
        super().__init__(message)

    def describe(self, source: str = "<input>") -> str:
        where = "/".join(str(p) for p in self.path) or "<root>"
        line = self.line if self.line is not None else 1
        return f"{source}:{line}: {self} (at {where})"


def _skip_ws(text: str, pos: int) -> int:
    while pos < len(text) and text[pos] in " \t\r\n":
        pos += 1
    return pos


def line_index(text: str) -> Dict[Path, int]:
    """Map every JSON path in ``text`` to the 1-based line where its value starts."""
    decoder = json.JSONDecoder()
    lines: Dict[Path, int] = {}

    def line_of(pos: int) -> int:
        return text.count("\n", 0, pos) + 1

    def walk(pos: int, path: Path) -> int:
        pos = _skip_ws(text, pos)
        lines[path] = line_of(pos)
        ch = text[pos]
        if ch == "{":
            pos = _skip_ws(text, pos + 1)
            if text[pos] == "}":
                return pos + 1
            while True:
                pos = _skip_ws(text, pos)
                key, pos = scanstring(text, pos + 1)
                pos = _skip_ws(text, pos) + 1  # ':'
                pos = _skip_ws(text, walk(pos, path + (key,)))
                if text[pos] == "}":
                    return pos + 1
                pos += 1  # ','
        if ch == "[":
            pos = _skip_ws(text, pos + 1)
            if text[pos] == "]":
                return pos + 1
            i = 0
            while True:
                pos = _skip_ws(text, walk(pos, path + (i,)))
                i += 1
                if text[pos] == "]":
                    return pos + 1
                pos += 1
        _, end = decoder.raw_decode(text, pos)
        return end

    walk(0, ())
    return lines


class Document:
    """Parsed JSON plus its line index; ``error`` builds located InputErrors."""

    def __init__(self, text: str):
        try:
            self.data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON: {exc.msg} (column {exc.colno})", (), exc.lineno) from None
        self.lines = line_index(text)

    @classmethod
    def load(cls, path: str) -> "Document":
        with open(path, encoding="utf-8") as fh:
            return cls(fh.read())

    def error(self, message: str, path: Path) -> InputError:
        probe = path
        while probe and probe not in self.lines:
            probe = probe[:-1]
        return InputError(message, path, self.lines.get(probe, 1))


def parse_rational(doc: Document, value, path: Path) -> Fraction:
    if isinstance(value, bool) or isinstance(value, float):
        raise doc.error(f"expected an exact rational ('p/q' string or integer), got {value!r}", path)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise doc.error(f"cannot parse rational {value!r}", path) from None
    raise doc.error(f"expected a rational, got {type(value).__name__}", path)


def _vector(doc: Document, value, path: Path, n: int | None = None) -> Tuple[Fraction, ...]:
    if not isinstance(value, list):
        raise doc.error("expected a list of rationals", path)
    out = tuple(parse_rational(doc, x, path + (i,)) for i, x in enumerate(value))
    if n is not None and len(out) != n:
        raise doc.error(f"expected {n} entries, got {len(out)}", path)
    return out


def parse_polytope(doc: Document, obj, path: Path = ()) -> LatticePolytope:
    if not isinstance(obj, dict):
        raise doc.error("polytope must be an object", path)
    n = obj.get("dim")
    if n is not None and (not isinstance(n, int) or isinstance(n, bool) or n < 1):
        raise doc.error("dim must be a positive integer", path + ("dim",))
    try:
        if "vertices" in obj:
            verts = obj["vertices"]
            if not isinstance(verts, list) or not verts:
                raise doc.error("vertices must be a nonempty list", path + ("vertices",))
            pts = [_vector(doc, v, path + ("vertices", i), n) for i, v in enumerate(verts)]
            P = LatticePolytope.from_vertices(pts)
        elif "facets" in obj:
            facets = obj["facets"]
            if not isinstance(facets, list) or not facets:
                raise doc.error("facets must be a nonempty list", path + ("facets",))
            ineqs = []
            for i, fct in enumerate(facets):
                fp = path + ("facets", i)
                if not isinstance(fct, dict) or "normal" not in fct or "offset" not in fct:
                    raise doc.error("facet needs 'normal' and 'offset'", fp)
                normal = fct["normal"]
                if not isinstance(normal, list) or any(
                    not isinstance(x, int) or isinstance(x, bool) for x in normal
                ):
                    raise doc.error("facet normal must be a list of integers", fp + ("normal",))
                if n is not None and len(normal) != n:
                    raise doc.error(f"expected {n} entries", fp + ("normal",))
                ineqs.append((normal, parse_rational(doc, fct["offset"], fp + ("offset",))))
            P = LatticePolytope.from_inequalities(ineqs, n)
        else:
            raise doc.error("polytope needs 'vertices' or 'facets'", path)
    except InputError:
        raise
    except ValidationError as exc:
        raise doc.error(str(exc), path) from None
    if n is not None and P.dim != n:
        raise doc.error(f"dim {n} does not match the data", path + ("dim",))
    return P


def parse_function(doc: Document, obj, n: int, path: Path = ()) -> PLConvexFunction:
    if not isinstance(obj, dict) or not isinstance(obj.get("pieces"), list) or not obj["pieces"]:
        raise doc.error("function needs a nonempty 'pieces' list", path)
    pieces = []
    for i, piece in enumerate(obj["pieces"]):
        pp = path + ("pieces", i)
        if not isinstance(piece, dict) or "slope" not in piece:
            raise doc.error("piece needs 'slope' (and optional 'constant')", pp)
        slope = _vector(doc, piece["slope"], pp + ("slope",), n)
        const = parse_rational(doc, piece.get("constant", 0), pp + ("constant",))
        pieces.append(AffinePiece(slope, const))
    return PLConvexFunction(tuple(pieces))


def parse_config(doc: Document, obj, path: Path = ()) -> ToricTestConfig:
    if not isinstance(obj, dict):
        raise doc.error("configuration must be an object", path)
    for key in ("polytope", "function"):
        if key not in obj:
            raise doc.error(f"missing '{key}'", path)
    P = parse_polytope(doc, obj["polytope"], path + ("polytope",))
    f = parse_function(doc, obj["function"], P.dim, path + ("function",))
    return ToricTestConfig.build(P, f)


def parse_corpus(doc: Document) -> List[Tuple[str, ToricTestConfig]]:
    """Either {"configs": [{"id", "polytope", "function"}, ...]} or
    {"polytope": ..., "functions": [...]} sharing one polytope."""
    data = doc.data
    if not isinstance(data, dict):
        raise doc.error("expected an object", ())
    if "configs" in data:
        out = []
        if not isinstance(data["configs"], list):
            raise doc.error("'configs' must be a list", ("configs",))
        for i, item in enumerate(data["configs"]):
            tc = parse_config(doc, item, ("configs", i))
            out.append((str(item.get("id", f"c{i}")), tc))
        return out
    if "functions" in data:
        P = parse_polytope(doc, data.get("polytope"), ("polytope",))
        if not isinstance(data["functions"], list):
            raise doc.error("'functions' must be a list", ("functions",))
        out = []
        for i, item in enumerate(data["functions"]):
            f = parse_function(doc, item, P.dim, ("functions", i))
            name = item.get("id", f"f{i}") if isinstance(item, dict) else f"f{i}"
            out.append((str(name), ToricTestConfig.build(P, f)))
        return out
    return [("c0", parse_config(doc, data))]


def parse_torus(spec: str, n: int) -> SubtorusDirections:
    """``full``, ``none``, or a JSON matrix of rationals (rows are basis vectors)."""
    s = spec.strip()
    if s == "full":
        return SubtorusDirections.full(n)
    if s == "none":
        return SubtorusDirections.none(n)
    doc = Document(s)
    rows = doc.data
    if not isinstance(rows, list):
        raise InputError("torus basis must be 'full', 'none' or a list of vectors")
    basis = [_vector(doc, r, (i,), n) for i, r in enumerate(rows)]
    try:
        return SubtorusDirections(n, tuple(basis))
    except ValidationError as exc:
        raise InputError(str(exc)) from None
