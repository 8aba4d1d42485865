"""Text format for knowledge bases (``.itkb`` files).

The format is whitespace-insensitive, uses ``#`` line comments, and is
parsed by a small recursive-descent parser (LL(1) plus one token of
lookahead for trailing annotations). Grammar:

    kb_file  := header item*
    header   := "kb" STRING "version" STRING [note_clause]
    item     := tree | failure_mode | constant
    tree     := "tree" IDENT "title" STRING "{" node* "}"
    node     := "start" "->" IDENT
              | ("action"|"note") IDENT STRING "->" IDENT [note_clause]
              | "decision" IDENT STRING ["open"] "{" branch* "}" [note_clause]
              | "jump" IDENT STRING "to" IDENT "resume" IDENT [note_clause]
              | "return" IDENT STRING [note_clause]
              | "finding" IDENT STRING ["mode" IDENT] [note_clause]
              | "finish" IDENT [STRING] [note_clause]
    branch   := STRING "->" IDENT
    note_clause  := "note" STRING
    failure_mode := "failure_mode" IDENT "area" IDENT "name" STRING
                    "impact" LEVEL "time" LEVEL "disturbance" LEVEL
                    ["notes" STRING]
    constant := "constant" IDENT "=" NUMBER [UNIT]

Strings are double-quoted with backslash escapes for quote, backslash,
newline and carriage return. Keywords are contextual, so node and tree
identifiers may collide with keyword spellings without breaking anything.

``parse`` either returns a fully validated knowledge base (plus source
spans for every node) or raises :class:`ParseFailure` carrying positioned
diagnostics; it never hands back a partially valid bundle. ``serialize``
is deterministic: equal knowledge bases produce byte-equal text, and
``parse(serialize(kb))`` reproduces ``kb`` structurally.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .model import (
    Area,
    Constant,
    CostVector,
    Edge,
    FailureMode,
    JumpTarget,
    KnowledgeBase,
    Node,
    NodeKind,
    SeverityLevel,
    TreeGraph,
    build_knowledge_base,
)

KB_FILE_SUFFIX = ".itkb"

#: Display text given to the implicit start node of every tree.
START_TEXT = "Start"
#: Default display text for a finish node declared without one.
FINISH_TEXT = "Finish"


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str  # "error" or "warning"
    line: int  # 1-based
    column: int  # 1-based
    message: str
    snippet: str

    def __str__(self) -> str:
        return f"{self.severity} {self.line}:{self.column}: {self.message}"


class ParseFailure(Exception):
    """Input could not be parsed into a valid knowledge base."""

    def __init__(self, diagnostics: list[ParseDiagnostic]):
        self.diagnostics = diagnostics
        first = diagnostics[0] if diagnostics else None
        summary = str(first) if first else "parse failed"
        if len(diagnostics) > 1:
            summary += f" (+{len(diagnostics) - 1} more)"
        super().__init__(summary)


@dataclass(frozen=True)
class ParseResult:
    kb: KnowledgeBase
    #: (tree id, node id) -> (line, column) of the node's declaration.
    spans: dict[tuple[str, str], tuple[int, int]]


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"-?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")

_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "r": "\r"}
_UNESCAPES = {"\n": "\\n", "\r": "\\r", '"': '\\"', "\\": "\\\\"}


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT STRING NUMBER ARROW LBRACE RBRACE EQUALS EOF
    value: str
    line: int
    column: int


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.lines = text.split("\n")
        self.pos = 0
        self.line = 1
        self.col = 1

    def _snippet(self, line: int) -> str:
        if 1 <= line <= len(self.lines):
            return self.lines[line - 1]
        return ""

    def error(self, message: str, line: int, col: int) -> ParseFailure:
        diag = ParseDiagnostic("error", line, col, message, self._snippet(line))
        return ParseFailure([diag])

    def _advance(self, n: int = 1) -> None:
        for _ in range(n):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def tokens(self) -> list[_Token]:
        out: list[_Token] = []
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch in " \t\r\n":
                self._advance()
                continue
            if ch == "#":
                while self.pos < len(text) and text[self.pos] != "\n":
                    self._advance()
                continue
            line, col = self.line, self.col
            if ch == '"':
                out.append(self._string(line, col))
                continue
            if ch == "{":
                out.append(_Token("LBRACE", "{", line, col))
                self._advance()
                continue
            if ch == "}":
                out.append(_Token("RBRACE", "}", line, col))
                self._advance()
                continue
            if ch == "=":
                out.append(_Token("EQUALS", "=", line, col))
                self._advance()
                continue
            if ch == "-" and self.pos + 1 < len(text) and text[self.pos + 1] == ">":
                out.append(_Token("ARROW", "->", line, col))
                self._advance(2)
                continue
            m = _NUMBER_RE.match(text, self.pos)
            if m and (ch.isdigit() or ch in "-."):
                out.append(_Token("NUMBER", m.group(), line, col))
                self._advance(len(m.group()))
                continue
            m = _IDENT_RE.match(text, self.pos)
            if m:
                out.append(_Token("IDENT", m.group(), line, col))
                self._advance(len(m.group()))
                continue
            raise self.error(f"unexpected character {ch!r}", line, col)
        out.append(_Token("EOF", "", self.line, self.col))
        return out

    def _string(self, line: int, col: int) -> _Token:
        self._advance()  # opening quote
        chars: list[str] = []
        text = self.text
        while True:
            if self.pos >= len(text):
                raise self.error("unterminated string", line, col)
            ch = text[self.pos]
            if ch == "\n":
                raise self.error(
                    "unterminated string (use \\n for embedded newlines)",
                    line,
                    col,
                )
            if ch == '"':
                self._advance()
                return _Token("STRING", "".join(chars), line, col)
            if ch == "\\":
                if self.pos + 1 >= len(text):
                    raise self.error("unterminated string", line, col)
                esc = text[self.pos + 1]
                if esc not in _ESCAPES:
                    raise self.error(
                        f"unknown escape sequence '\\{esc}'", self.line, self.col
                    )
                chars.append(_ESCAPES[esc])
                self._advance(2)
                continue
            chars.append(ch)
            self._advance()


def escape_string(value: str) -> str:
    return '"' + "".join(_UNESCAPES.get(ch, ch) for ch in value) + '"'


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


@dataclass
class _NodeSpec:
    node: Node
    pos: tuple[int, int]
    # positions of the identifiers this node references, for diagnostics
    edge_positions: list[tuple[int, int]] = field(default_factory=list)
    jump_tree_pos: tuple[int, int] | None = None
    jump_resume_pos: tuple[int, int] | None = None
    mode_pos: tuple[int, int] | None = None


@dataclass
class _TreeSpec:
    id: str
    title: str
    pos: tuple[int, int]
    nodes: list[_NodeSpec] = field(default_factory=list)


class _Parser:
    def __init__(self, text: str):
        self.lexer = _Lexer(text)
        self.toks = self.lexer.tokens()
        self.i = 0
        self.diagnostics: list[ParseDiagnostic] = []

    # -- token helpers ------------------------------------------------

    def peek(self, ahead: int = 0) -> _Token:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> _Token:
        tok = self.toks[self.i]
        if tok.kind != "EOF":
            self.i += 1
        return tok

    def fail(self, tok: _Token, message: str) -> ParseFailure:
        return self.lexer.error(message, tok.line, tok.column)

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.next()
        if tok.kind != kind:
            raise self.fail(tok, f"expected {what}, found {tok.value!r}")
        return tok

    def keyword(self, word: str) -> _Token:
        tok = self.next()
        if tok.kind != "IDENT" or tok.value != word:
            raise self.fail(tok, f"expected '{word}', found {tok.value!r}")
        return tok

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "IDENT" and tok.value == word

    def semantic_error(self, pos: tuple[int, int], message: str) -> None:
        line, col = pos
        self.diagnostics.append(
            ParseDiagnostic("error", line, col, message, self.lexer._snippet(line))
        )

    # -- productions --------------------------------------------------

    def parse(self) -> ParseResult:
        self.keyword("kb")
        name = self.expect("STRING", "knowledge base name").value
        self.keyword("version")
        version = self.expect("STRING", "version string").value
        kb_note = self._maybe_note_clause()

        trees: list[_TreeSpec] = []
        modes: list[tuple[FailureMode, tuple[int, int]]] = []
        constants: dict[str, Constant] = {}

        while True:
            tok = self.peek()
            if tok.kind == "EOF":
                break
            if tok.kind != "IDENT":
                raise self.fail(tok, "expected 'tree', 'failure_mode' or 'constant'")
            if tok.value == "tree":
                trees.append(self._tree())
            elif tok.value == "failure_mode":
                modes.append(self._failure_mode())
            elif tok.value == "constant":
                self._constant(constants)
            else:
                raise self.fail(
                    tok, "expected 'tree', 'failure_mode' or 'constant'"
                )

        self._resolve(trees, modes)
        if self.diagnostics:
            raise ParseFailure(
                sorted(self.diagnostics, key=lambda d: (d.line, d.column))
            )

        kb = build_knowledge_base(
            name=name,
            version=version,
            trees=[
                TreeGraph(t.id, t.title, tuple(s.node for s in t.nodes))
                for t in trees
            ],
            catalog=[m for m, _ in modes],
            constants=constants,
            notes=kb_note,
        )
        spans = {
            (t.id, s.node.id): s.pos for t in trees for s in t.nodes
        }
        return ParseResult(kb, spans)

    def _maybe_note_clause(self) -> str | None:
        if self.at_keyword("note") and self.peek(1).kind == "STRING":
            self.next()
            return self.expect("STRING", "note text").value
        return None

    def _tree(self) -> _TreeSpec:
        pos_tok = self.keyword("tree")
        tree_id = self.expect("IDENT", "tree id").value
        self.keyword("title")
        title = self.expect("STRING", "tree title").value
        spec = _TreeSpec(tree_id, title, (pos_tok.line, pos_tok.column))
        self.expect("LBRACE", "'{'")
        while not self.peek().kind == "RBRACE":
            tok = self.peek()
            if tok.kind == "EOF":
                raise self.fail(tok, "unexpected end of input inside tree block")
            spec.nodes.append(self._node())
        self.expect("RBRACE", "'}'")
        return spec

    def _node(self) -> _NodeSpec:
        tok = self.next()
        if tok.kind != "IDENT":
            raise self.fail(tok, "expected a node declaration")
        pos = (tok.line, tok.column)
        kind = tok.value

        if kind == "start":
            self.expect("ARROW", "'->'")
            target = self.expect("IDENT", "start successor")
            spec = _NodeSpec(
                Node("start", NodeKind.START, START_TEXT, (Edge(None, target.value),)),
                pos,
                edge_positions=[(target.line, target.column)],
            )
            spec.node = self._with_note(spec.node)
            return spec

        if kind in ("action", "note"):
            node_id = self.expect("IDENT", "node id").value
            text = self.expect("STRING", "node text").value
            self.expect("ARROW", "'->'")
            target = self.expect("IDENT", "edge target")
            node = Node(
                node_id,
                NodeKind.ACTION if kind == "action" else NodeKind.NOTE,
                text,
                (Edge(None, target.value),),
            )
            spec = _NodeSpec(node, pos, edge_positions=[(target.line, target.column)])
            spec.node = self._with_note(spec.node)
            return spec

        if kind == "decision":
            node_id = self.expect("IDENT", "node id").value
            text = self.expect("STRING", "node text").value
            open_flag = False
            if self.at_keyword("open"):
                self.next()
                open_flag = True
            self.expect("LBRACE", "'{'")
            edges: list[Edge] = []
            edge_positions: list[tuple[int, int]] = []
            seen_labels: set[str] = set()
            while self.peek().kind != "RBRACE":
                label_tok = self.expect("STRING", "branch label")
                if label_tok.value == "":
                    self.semantic_error(
                        (label_tok.line, label_tok.column),
                        f"empty branch label on decision '{node_id}'",
                    )
                if label_tok.value in seen_labels:
                    self.semantic_error(
                        (label_tok.line, label_tok.column),
                        f"duplicate branch label {label_tok.value!r} on "
                        f"decision '{node_id}'",
                    )
                seen_labels.add(label_tok.value)
                self.expect("ARROW", "'->'")
                target = self.expect("IDENT", "branch target")
                edges.append(Edge(label_tok.value, target.value))
                edge_positions.append((target.line, target.column))
            self.expect("RBRACE", "'}'")
            if not open_flag and len(seen_labels) < 2:
                self.semantic_error(
                    pos,
                    f"decision '{node_id}' needs at least 2 branches "
                    "(or the open flag)",
                )
            node = Node(node_id, NodeKind.DECISION, text, tuple(edges), open_flag=open_flag)
            spec = _NodeSpec(node, pos, edge_positions=edge_positions)
            spec.node = self._with_note(spec.node)
            return spec

        if kind == "jump":
            node_id = self.expect("IDENT", "node id").value
            text = self.expect("STRING", "node text").value
            self.keyword("to")
            tree_tok = self.expect("IDENT", "target tree id")
            self.keyword("resume")
            resume_tok = self.expect("IDENT", "resume node id")
            node = Node(
                node_id,
                NodeKind.JUMP,
                text,
                jump_target=JumpTarget(tree_tok.value, resume_tok.value),
            )
            spec = _NodeSpec(
                node,
                pos,
                jump_tree_pos=(tree_tok.line, tree_tok.column),
                jump_resume_pos=(resume_tok.line, resume_tok.column),
            )
            spec.node = self._with_note(spec.node)
            return spec

        if kind == "return":
            node_id = self.expect("IDENT", "node id").value
            text = self.expect("STRING", "node text").value
            spec = _NodeSpec(Node(node_id, NodeKind.RETURN, text), pos)
            spec.node = self._with_note(spec.node)
            return spec

        if kind == "finding":
            node_id = self.expect("IDENT", "node id").value
            text = self.expect("STRING", "node text").value
            mode_ref: str | None = None
            mode_pos: tuple[int, int] | None = None
            if self.at_keyword("mode"):
                self.next()
                mode_tok = self.expect("IDENT", "failure mode id")
                mode_ref = mode_tok.value
                mode_pos = (mode_tok.line, mode_tok.column)
            node = Node(node_id, NodeKind.FINDING, text, failure_mode_ref=mode_ref)
            spec = _NodeSpec(node, pos, mode_pos=mode_pos)
            spec.node = self._with_note(spec.node)
            return spec

        if kind == "finish":
            node_id = self.expect("IDENT", "node id").value
            text = FINISH_TEXT
            if self.peek().kind == "STRING":
                text = self.next().value
            spec = _NodeSpec(Node(node_id, NodeKind.FINISH, text), pos)
            spec.node = self._with_note(spec.node)
            return spec

        raise self.fail(tok, f"unknown node kind {kind!r}")

    def _with_note(self, node: Node) -> Node:
        note = self._maybe_note_clause()
        if note is None:
            return node
        return Node(
            node.id,
            node.kind,
            node.text,
            node.edges,
            jump_target=node.jump_target,
            failure_mode_ref=node.failure_mode_ref,
            open_flag=node.open_flag,
            note=note,
        )

    def _failure_mode(self) -> tuple[FailureMode, tuple[int, int]]:
        pos_tok = self.keyword("failure_mode")
        mode_id = self.expect("IDENT", "failure mode id").value
        self.keyword("area")
        area_tok = self.expect("IDENT", "area")
        try:
            area = Area(area_tok.value)
        except ValueError:
            raise self.fail(
                area_tok,
                f"unknown area {area_tok.value!r} (expected one of "
                f"{', '.join(a.value for a in Area)})",
            )
        self.keyword("name")
        name = self.expect("STRING", "failure mode name").value
        self.keyword("impact")
        impact = self._level()
        self.keyword("time")
        time_cost = self._level()
        self.keyword("disturbance")
        disturbance = self._level()
        notes: str | None = None
        if self.at_keyword("notes"):
            self.next()
            notes = self.expect("STRING", "notes text").value
        mode = FailureMode(
            mode_id, area, name, CostVector(impact, time_cost, disturbance), notes
        )
        return mode, (pos_tok.line, pos_tok.column)

    def _level(self) -> SeverityLevel:
        tok = self.expect("IDENT", "severity level")
        try:
            return SeverityLevel(tok.value)
        except ValueError:
            raise self.fail(
                tok, f"unknown severity level {tok.value!r} (expected Low, "
                "Medium or High)"
            )

    def _constant(self, constants: dict[str, Constant]) -> None:
        self.keyword("constant")
        name_tok = self.expect("IDENT", "constant name")
        self.expect("EQUALS", "'='")
        num_tok = self.expect("NUMBER", "numeric value")
        unit: str | None = None
        nxt = self.peek()
        if nxt.kind == "IDENT" and nxt.value not in ("tree", "failure_mode", "constant"):
            unit = self.next().value
        if name_tok.value in constants:
            self.semantic_error(
                (name_tok.line, name_tok.column),
                f"duplicate constant '{name_tok.value}'",
            )
        constants[name_tok.value] = Constant(float(num_tok.value), unit)

    # -- cross-reference resolution ------------------------------------

    def _resolve(
        self,
        trees: list[_TreeSpec],
        modes: list[tuple[FailureMode, tuple[int, int]]],
    ) -> None:
        tree_ids: set[str] = set()
        for tree in trees:
            if tree.id in tree_ids:
                self.semantic_error(tree.pos, f"duplicate tree id '{tree.id}'")
            tree_ids.add(tree.id)

        mode_ids: set[str] = set()
        for mode, pos in modes:
            if mode.id in mode_ids:
                self.semantic_error(pos, f"duplicate failure mode id '{mode.id}'")
            mode_ids.add(mode.id)

        for tree in trees:
            node_ids: set[str] = set()
            starts = 0
            for spec in tree.nodes:
                if spec.node.id in node_ids:
                    self.semantic_error(
                        spec.pos,
                        f"duplicate node id '{spec.node.id}' in tree '{tree.id}'",
                    )
                node_ids.add(spec.node.id)
                if spec.node.kind is NodeKind.START:
                    starts += 1
            if starts == 0:
                self.semantic_error(tree.pos, f"tree '{tree.id}' has no start node")
            elif starts > 1:
                self.semantic_error(
                    tree.pos, f"tree '{tree.id}' has {starts} start nodes"
                )

            for spec in tree.nodes:
                for edge, edge_pos in zip(spec.node.edges, spec.edge_positions):
                    if edge.target not in node_ids:
                        self.semantic_error(
                            edge_pos,
                            f"unresolved edge target '{edge.target}' in tree "
                            f"'{tree.id}'",
                        )
                target = spec.node.jump_target
                if target is not None:
                    if target.tree not in tree_ids:
                        assert spec.jump_tree_pos is not None
                        self.semantic_error(
                            spec.jump_tree_pos,
                            f"unresolved jump target tree '{target.tree}'",
                        )
                    if target.resume not in node_ids:
                        assert spec.jump_resume_pos is not None
                        self.semantic_error(
                            spec.jump_resume_pos,
                            f"unresolved jump resume node '{target.resume}' in "
                            f"tree '{tree.id}'",
                        )
                ref = spec.node.failure_mode_ref
                if ref is not None and ref not in mode_ids:
                    assert spec.mode_pos is not None
                    self.semantic_error(
                        spec.mode_pos, f"unresolved failure mode reference '{ref}'"
                    )


def parse(text: str) -> ParseResult:
    """Parse knowledge-base source text.

    Returns:
        ParseResult with the validated KnowledgeBase and a span map giving
        the declaration position of every node.

    Raises:
        ParseFailure: lexical, syntax or reference errors, each carrying
            a 1-based line/column and the offending source line.
    """
    return _Parser(text).parse()


def parse_file(path: str | Path) -> ParseResult:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse(fh.read())


# ---------------------------------------------------------------------------
# Serializer
# ---------------------------------------------------------------------------


def serialize(kb: KnowledgeBase) -> str:
    """Render ``kb`` as canonical DSL text.

    Output is a pure function of the knowledge base: trees, nodes, catalog
    entries and constants are emitted in declaration order, so equal
    bundles serialize to byte-equal text.
    """
    out: list[str] = []
    header = f"kb {escape_string(kb.name)} version {escape_string(kb.version)}"
    if kb.notes is not None:
        header += f" note {escape_string(kb.notes)}"
    out.append(header)

    for tree in kb.trees:
        out.append("")
        out.append(f"tree {tree.id} title {escape_string(tree.title)} {{")
        for node in tree.nodes:
            out.extend(_node_lines(node))
        out.append("}")

    if kb.catalog:
        out.append("")
        for mode in kb.catalog:
            line = (
                f"failure_mode {mode.id} area {mode.area.value} "
                f"name {escape_string(mode.name)} "
                f"impact {mode.cost.operational_impact.value} "
                f"time {mode.cost.time_cost.value} "
                f"disturbance {mode.cost.disturbance_risk.value}"
            )
            if mode.notes is not None:
                line += f" notes {escape_string(mode.notes)}"
            out.append(line)

    if kb.constants:
        out.append("")
        for name, constant in kb.constants.items():
            line = f"constant {name} = {float(constant.value)!r}"
            if constant.unit is not None:
                line += f" {constant.unit}"
            out.append(line)

    out.append("")
    return "\n".join(out)


def _note_suffix(node: Node) -> str:
    if node.note is None:
        return ""
    return f" note {escape_string(node.note)}"


def _node_lines(node: Node) -> list[str]:
    ind = "  "
    if node.kind is NodeKind.START:
        return [f"{ind}start -> {node.edges[0].target}{_note_suffix(node)}"]
    if node.kind in (NodeKind.ACTION, NodeKind.NOTE):
        return [
            f"{ind}{node.kind.value} {node.id} {escape_string(node.text)} "
            f"-> {node.edges[0].target}{_note_suffix(node)}"
        ]
    if node.kind is NodeKind.DECISION:
        head = f"{ind}decision {node.id} {escape_string(node.text)}"
        if node.open_flag:
            head += " open"
        lines = [head + " {"]
        for edge in node.edges:
            lines.append(f"{ind}{ind}{escape_string(edge.label or '')} -> {edge.target}")
        lines.append(f"{ind}}}{_note_suffix(node)}")
        return lines
    if node.kind is NodeKind.JUMP:
        assert node.jump_target is not None
        return [
            f"{ind}jump {node.id} {escape_string(node.text)} "
            f"to {node.jump_target.tree} resume {node.jump_target.resume}"
            f"{_note_suffix(node)}"
        ]
    if node.kind is NodeKind.RETURN:
        return [f"{ind}return {node.id} {escape_string(node.text)}{_note_suffix(node)}"]
    if node.kind is NodeKind.FINDING:
        line = f"{ind}finding {node.id} {escape_string(node.text)}"
        if node.failure_mode_ref is not None:
            line += f" mode {node.failure_mode_ref}"
        return [line + _note_suffix(node)]
    if node.kind is NodeKind.FINISH:
        line = f"{ind}finish {node.id}"
        if node.text != FINISH_TEXT:
            line += f" {escape_string(node.text)}"
        return [line + _note_suffix(node)]
    raise AssertionError(f"unhandled node kind {node.kind!r}")


def write_file(kb: KnowledgeBase, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(serialize(kb))
