"""A small SPICE-flavoured netlist dialect.

Cards (first letter of the name selects the kind, names are case-insensitive)::

    R<name> n1 n2 <value>
    C<name> n1 n2 <value>
    M<name> n1 n2 [RON=..] [ROFF=..] [D=..] [MU=..] [ETA=..] [P=..] [X0=..] [WINDOW=..]
    V<name> n+ n- <value> | DC <value> | SIN(off amp freq [phase]) | PULSE(v1 v2 td tr tf pw per)
    E<name> out+ out- in+ in- <gain> [VMAX=<knee>]
    O<name> out in+ in-

Directives: ``.title <text>``, ``.tran <step> <stop>``, ``.param NAME=value``,
``.probe V(n) V(a,b) I(elem) X(memristor)``, ``.end``. Lines starting with
``*`` are comments. Numbers take the suffixes f p n u m k meg g, and a
``{NAME}`` reference to a ``.param``. Node ``0`` is ground.

Memristor current flows from ``n1`` to ``n2``; with ``ETA=1`` positive current
grows the doped region. ``E`` cards with ``VMAX`` saturate softly:
``v_out = VMAX * tanh(gain * v_in / VMAX)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields
from typing import ClassVar, Iterable

from .device_models import WINDOWS, MemristorParams

__all__ = [
    "NetlistError", "UnknownCard", "BadArity", "DuplicateName", "BadNumber",
    "BadParameter", "BadDirective", "BadEncoding", "MissingGround", "DisconnectedNode",
    "DC", "SIN", "PULSE", "SourceSpec",
    "Component", "Resistor", "Capacitor", "Memristor", "VoltageSource", "VCVS", "OpAmp",
    "Tran", "Param", "Probe", "Directive",
    "Netlist", "parse", "serialize", "parse_number", "format_number", "SUFFIXES",
]


# --------------------------------------------------------------------------
# errors


class NetlistError(ValueError):
    """Parse or validation failure, located at 1-based ``line`` and ``col``."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"line {line}, col {col}: {type(self).__name__}: {message}")


class UnknownCard(NetlistError):
    pass


class BadArity(NetlistError):
    pass


class DuplicateName(NetlistError):
    pass


class BadNumber(NetlistError):
    pass


class BadParameter(NetlistError):
    pass


class BadDirective(NetlistError):
    pass


class BadEncoding(NetlistError):
    pass


class MissingGround(NetlistError):
    pass


class DisconnectedNode(NetlistError):
    pass


# --------------------------------------------------------------------------
# numbers

SUFFIXES = {
    "f": 1e-15, "p": 1e-12, "n": 1e-9, "u": 1e-6, "m": 1e-3,
    "k": 1e3, "meg": 1e6, "g": 1e9,
}
_UNITS = ("ohms", "ohm", "hz", "v", "a", "s", "f", "h")
_NUM_RE = re.compile(
    r"([+-]?(?:\d+\.?\d*|\.\d+)(?:e[+-]?\d+)?)(meg|[fpnumkg])?(" + "|".join(_UNITS) + r")?",
    re.IGNORECASE,
)


def parse_number(text: str) -> float:
    """Parse ``text`` with an optional engineering suffix and unit; ValueError if malformed."""
    m = _NUM_RE.fullmatch(text)
    if m is None:
        raise ValueError(f"not a number: {text!r}")
    mantissa, suffix, _unit = m.groups()
    value = float(mantissa)
    if suffix:
        # exact for exponent-free mantissas: "10n" -> 10e-9, not 10 * 1e-9
        if "e" not in mantissa.lower():
            exp = {"f": -15, "p": -12, "n": -9, "u": -6, "m": -3, "k": 3, "meg": 6, "g": 9}[suffix.lower()]
            value = float(f"{mantissa}e{exp}")
        else:
            value *= SUFFIXES[suffix.lower()]
    if not math.isfinite(value):
        raise ValueError(f"number out of range: {text!r}")
    return value


def format_number(value: float) -> str:
    return repr(float(value))


# --------------------------------------------------------------------------
# sources


@dataclass(frozen=True)
class DC:
    level: float

    def value(self, t: float) -> float:
        return self.level

    def card(self) -> str:
        return f"DC {format_number(self.level)}"


@dataclass(frozen=True)
class SIN:
    offset: float
    amplitude: float
    freq: float
    phase: float = 0.0  # degrees

    def __post_init__(self):
        if not self.freq > 0:
            raise ValueError("SIN frequency must be positive")

    def value(self, t: float) -> float:
        return self.offset + self.amplitude * math.sin(2 * math.pi * self.freq * t + math.radians(self.phase))

    def card(self) -> str:
        args = " ".join(format_number(v) for v in (self.offset, self.amplitude, self.freq, self.phase))
        return f"SIN({args})"


@dataclass(frozen=True)
class PULSE:
    v1: float
    v2: float
    delay: float
    rise: float
    fall: float
    width: float
    period: float

    def __post_init__(self):
        if min(self.delay, self.rise, self.fall, self.width) < 0:
            raise ValueError("PULSE times must be non-negative")
        if not self.period > 0 or self.period < self.rise + self.width + self.fall:
            raise ValueError("PULSE period must be positive and >= rise + width + fall")

    def value(self, t: float) -> float:
        if t < self.delay:
            return self.v1
        tt = math.fmod(t - self.delay, self.period)
        if tt < self.rise:
            return self.v1 + (self.v2 - self.v1) * tt / self.rise
        tt -= self.rise
        if tt <= self.width:
            return self.v2
        tt -= self.width
        if tt < self.fall:
            return self.v2 + (self.v1 - self.v2) * tt / self.fall
        return self.v1

    def card(self) -> str:
        args = " ".join(format_number(getattr(self, f.name)) for f in fields(self))
        return f"PULSE({args})"


SourceSpec = DC | SIN | PULSE


# --------------------------------------------------------------------------
# components


@dataclass(frozen=True)
class Component:
    name: str
    nodes: tuple[str, ...]

    letter: ClassVar[str] = ""
    arity: ClassVar[int] = 2

    def card(self) -> str:
        raise NotImplementedError

    def links(self) -> list[tuple[str, str]]:
        """Node pairs this element ties together electrically (for connectivity)."""
        return [(self.nodes[0], self.nodes[1])]


@dataclass(frozen=True)
class Resistor(Component):
    value: float = 1.0
    letter: ClassVar[str] = "R"

    def card(self) -> str:
        return f"{self.name} {' '.join(self.nodes)} {format_number(self.value)}"


@dataclass(frozen=True)
class Capacitor(Component):
    value: float = 1.0
    letter: ClassVar[str] = "C"

    def card(self) -> str:
        return f"{self.name} {' '.join(self.nodes)} {format_number(self.value)}"


_MEM_KEYS = {"RON": "r_on", "ROFF": "r_off", "D": "d", "MU": "mu_v", "ETA": "eta", "P": "p", "X0": "x0", "WINDOW": "window"}


@dataclass(frozen=True)
class Memristor(Component):
    params: MemristorParams = field(default_factory=MemristorParams)
    letter: ClassVar[str] = "M"

    def card(self) -> str:
        p = self.params
        kv = [
            f"RON={format_number(p.r_on)}", f"ROFF={format_number(p.r_off)}", f"D={format_number(p.d)}",
            f"MU={format_number(p.mu_v)}", f"ETA={p.eta}", f"P={p.p}", f"X0={format_number(p.x0)}",
            f"WINDOW={p.window}",
        ]
        return f"{self.name} {' '.join(self.nodes)} {' '.join(kv)}"


@dataclass(frozen=True)
class VoltageSource(Component):
    source: SourceSpec = DC(0.0)
    letter: ClassVar[str] = "V"

    def card(self) -> str:
        return f"{self.name} {' '.join(self.nodes)} {self.source.card()}"


@dataclass(frozen=True)
class VCVS(Component):
    """Voltage-controlled voltage source; ``vmax`` enables tanh soft clipping."""

    gain: float = 1.0
    vmax: float | None = None
    letter: ClassVar[str] = "E"
    arity: ClassVar[int] = 4

    def card(self) -> str:
        s = f"{self.name} {' '.join(self.nodes)} {format_number(self.gain)}"
        if self.vmax is not None:
            s += f" VMAX={format_number(self.vmax)}"
        return s

    def links(self):
        return [(self.nodes[0], self.nodes[1])]


@dataclass(frozen=True)
class OpAmp(Component):
    """Ideal op-amp: nodes are (out, in+, in-); output is ground-referenced."""

    letter: ClassVar[str] = "O"
    arity: ClassVar[int] = 3

    def card(self) -> str:
        return f"{self.name} {' '.join(self.nodes)}"

    def links(self):
        return [(self.nodes[0], "0")]


_KINDS = {cls.letter: cls for cls in (Resistor, Capacitor, Memristor, VoltageSource, VCVS, OpAmp)}


# --------------------------------------------------------------------------
# directives


@dataclass(frozen=True)
class Tran:
    step: float
    stop: float

    def card(self) -> str:
        return f".tran {format_number(self.step)} {format_number(self.stop)}"


@dataclass(frozen=True)
class Param:
    name: str
    value: float

    def card(self) -> str:
        return f".param {self.name}={format_number(self.value)}"


@dataclass(frozen=True)
class Probe:
    labels: tuple[str, ...]

    def card(self) -> str:
        return ".probe " + " ".join(self.labels)


Directive = Tran | Param | Probe


# --------------------------------------------------------------------------
# netlist


@dataclass
class Netlist:
    title: str = ""
    components: tuple[Component, ...] = ()
    directives: tuple[Directive, ...] = ()

    def __post_init__(self):
        self.components = tuple(self.components)
        self.directives = tuple(self.directives)

    @property
    def node_names(self) -> list[str]:
        """Non-ground nodes in order of first appearance."""
        seen: dict[str, None] = {}
        for comp in self.components:
            for n in comp.nodes:
                if n != "0":
                    seen.setdefault(n, None)
        return list(seen)

    @property
    def tran(self) -> Tran | None:
        found = [d for d in self.directives if isinstance(d, Tran)]
        return found[-1] if found else None

    @property
    def probes(self) -> list[str]:
        return [label for d in self.directives if isinstance(d, Probe) for label in d.labels]

    @property
    def params(self) -> dict[str, float]:
        return {d.name: d.value for d in self.directives if isinstance(d, Param)}

    def component(self, name: str) -> Component:
        key = name.casefold()
        for comp in self.components:
            if comp.name.casefold() == key:
                return comp
        raise KeyError(name)

    def of_kind(self, cls: type) -> list:
        return [c for c in self.components if isinstance(c, cls)]

    def validate(self, lines: dict[str, int] | None = None) -> "Netlist":
        """Check names, arity, ground and connectivity; raise on the first problem."""
        lines = lines or {}
        seen: set[str] = set()
        for comp in self.components:
            ln = lines.get(comp.name.casefold(), 0)
            key = comp.name.casefold()
            if key in seen:
                raise DuplicateName(f"component {comp.name!r} already defined", ln, 1)
            seen.add(key)
            if len(comp.nodes) != comp.arity:
                raise BadArity(f"{comp.name} needs {comp.arity} nodes, got {len(comp.nodes)}", ln, 1)
        nodes = self.node_names
        all_nodes = {n for c in self.components for n in c.nodes}
        if all_nodes and "0" not in all_nodes:
            last = max(lines.values(), default=0)
            raise MissingGround("no ground node '0' in netlist", last, 1)
        adj: dict[str, set[str]] = {n: set() for n in all_nodes | {"0"}}
        for comp in self.components:
            for a, b in comp.links():
                adj[a].add(b)
                adj[b].add(a)
        reached = {"0"}
        stack = ["0"]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in reached:
                    reached.add(nb)
                    stack.append(nb)
        for n in nodes:
            if n not in reached:
                user = next(c for c in self.components if n in c.nodes)
                ln = lines.get(user.name.casefold(), 0)
                raise DisconnectedNode(f"node {n!r} has no path to ground", ln, 1)
        for label in self.probes:
            _check_probe(label, self)
        return self


_PROBE_RE = re.compile(r"([VIX])\(([^(),\s]+)(?:,([^(),\s]+))?\)")


def _check_probe(label: str, netlist: Netlist) -> None:
    m = _PROBE_RE.fullmatch(label)
    if m is None:
        raise BadDirective(f"bad probe {label!r}")
    kind, a, b = m.groups()
    if kind == "V":
        known = set(netlist.node_names) | {"0"}
        for n in (a, b):
            if n is not None and n not in known:
                raise BadDirective(f"probe {label!r} names unknown node {n!r}")
    else:
        if b is not None:
            raise BadDirective(f"probe {label!r} takes one element name")
        try:
            comp = netlist.component(a)
        except KeyError:
            raise BadDirective(f"probe {label!r} names unknown element {a!r}") from None
        if kind == "X" and not isinstance(comp, Memristor):
            raise BadDirective(f"state probe {label!r} needs a memristor")


# --------------------------------------------------------------------------
# parser

_TOKEN_RE = re.compile(r"[(),=]|[^\s(),=]+")


@dataclass
class _Tok:
    text: str
    col: int


def _tokenize(line: str) -> list[_Tok]:
    return [_Tok(m.group(), m.start() + 1) for m in _TOKEN_RE.finditer(line)]


class _Parser:
    def __init__(self, lineno: int, toks: list[_Tok], params: dict[str, float]):
        self.lineno = lineno
        self.toks = toks
        self.pos = 0
        self.params = params

    def err(self, cls, msg, tok: _Tok | None = None):
        col = tok.col if tok is not None else (self.toks[-1].col + len(self.toks[-1].text) if self.toks else 1)
        return cls(msg, self.lineno, col)

    def peek(self) -> _Tok | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self, what: str) -> _Tok:
        tok = self.peek()
        if tok is None:
            raise self.err(BadArity, f"expected {what}")
        self.pos += 1
        return tok

    def at_end(self) -> bool:
        return self.pos >= len(self.toks)

    def number(self, what: str) -> float:
        return self.value_of(self.next(what), what)

    def value_of(self, tok: _Tok, what: str) -> float:
        text = tok.text
        if text.startswith("{") and text.endswith("}") and len(text) > 2:
            key = text[1:-1].casefold()
            if key not in self.params:
                raise self.err(BadNumber, f"undefined parameter {text[1:-1]!r}", tok)
            return self.params[key]
        try:
            return parse_number(text)
        except ValueError:
            raise self.err(BadNumber, f"bad {what}: {text!r}", tok) from None

    def node(self) -> str:
        tok = self.next("node")
        if tok.text in "(),=":
            raise self.err(BadArity, f"expected node, got {tok.text!r}", tok)
        return tok.text.lower()

    def expect(self, text: str) -> _Tok:
        tok = self.next(repr(text))
        if tok.text != text:
            raise self.err(BadArity, f"expected {text!r}, got {tok.text!r}", tok)
        return tok

    def keyvals(self) -> list[tuple[_Tok, _Tok]]:
        out = []
        while not self.at_end():
            key = self.next("key")
            if key.text in "(),=":
                raise self.err(BadParameter, f"unexpected {key.text!r}", key)
            self.expect("=")
            val = self.next("value")
            if val.text in "(),=":
                raise self.err(BadParameter, f"missing value for {key.text}", val)
            out.append((key, val))
        return out

    def finish(self) -> None:
        if not self.at_end():
            tok = self.peek()
            raise self.err(BadArity, f"unexpected trailing {tok.text!r}", tok)


def _parse_source(p: _Parser):
    tok = p.peek()
    if tok is None:
        raise p.err(BadArity, "voltage source needs a value")
    kw = tok.text.upper()
    if kw in ("SIN", "PULSE"):
        p.pos += 1
        p.expect("(")
        args = []
        while True:
            t = p.peek()
            if t is None:
                raise p.err(BadArity, f"unterminated {kw}(")
            if t.text == ")":
                p.pos += 1
                break
            if t.text == ",":
                p.pos += 1
                continue
            args.append((t, p.number(f"{kw} argument")))
        need = (3, 4) if kw == "SIN" else (7,)
        if len(args) not in need:
            raise p.err(BadArity, f"{kw} takes {' or '.join(map(str, need))} arguments, got {len(args)}", tok)
        vals = [v for _, v in args]
        try:
            return SIN(*vals) if kw == "SIN" else PULSE(*vals)
        except ValueError as e:
            raise p.err(BadParameter, str(e), tok) from None
    if kw == "DC":
        p.pos += 1
    return DC(p.number("source value"))


def _parse_card(p: _Parser) -> Component:
    head = p.next("card")
    name = head.text
    if name in "(),=" or name[0].upper() not in _KINDS:
        raise p.err(UnknownCard, f"unknown card {name!r}", head)
    cls = _KINDS[name[0].upper()]
    nodes = []
    for _ in range(cls.arity):
        tok = p.peek()
        if tok is None or tok.text in "(),=":
            raise p.err(BadArity, f"{name} needs {cls.arity} nodes, got {len(nodes)}", tok)
        nodes.append(p.node())
    nodes = tuple(nodes)

    if cls in (Resistor, Capacitor):
        vtok = p.peek()
        value = p.number("value")
        p.finish()
        if not value > 0:
            raise p.err(BadParameter, f"{name} value must be positive", vtok)
        return cls(name, nodes, value)
    if cls is VoltageSource:
        src = _parse_source(p)
        p.finish()
        return VoltageSource(name, nodes, src)
    if cls is VCVS:
        gain = p.number("gain")
        vmax = None
        for key, val in p.keyvals():
            if key.text.upper() != "VMAX":
                raise p.err(BadParameter, f"unknown key {key.text!r}", key)
            vmax = p.value_of(val, "VMAX")
            if not vmax > 0:
                raise p.err(BadParameter, "VMAX must be positive", val)
        return VCVS(name, nodes, gain, vmax)
    if cls is OpAmp:
        p.finish()
        return OpAmp(name, nodes)
    # memristor
    kwargs = {}
    for key, val in p.keyvals():
        attr = _MEM_KEYS.get(key.text.upper())
        if attr is None:
            raise p.err(BadParameter, f"unknown memristor key {key.text!r}", key)
        if attr == "window":
            if val.text.lower() not in WINDOWS:
                raise p.err(BadParameter, f"unknown window {val.text!r}", val)
            kwargs[attr] = val.text.lower()
            continue
        num = p.value_of(val, key.text)
        if attr in ("eta", "p"):
            if num != int(num):
                raise p.err(BadParameter, f"{key.text} must be an integer", val)
            num = int(num)
        kwargs[attr] = num
    try:
        params = MemristorParams(**kwargs)
    except ValueError as e:
        raise p.err(BadParameter, str(e), head) from None
    return Memristor(name, nodes, params)


def _parse_probe_labels(p: _Parser, netlist_nodes=None) -> tuple[str, ...]:
    labels = []
    while not p.at_end():
        kind = p.next("probe")
        if kind.text.upper() not in ("V", "I", "X"):
            raise p.err(BadDirective, f"bad probe {kind.text!r}", kind)
        p.expect("(")
        a = p.next("probe argument")
        if a.text in "(),=":
            raise p.err(BadDirective, "empty probe", a)
        args = [a.text]
        t = p.next("')'")
        if t.text == ",":
            b = p.next("probe argument")
            if b.text in "(),=":
                raise p.err(BadDirective, "bad probe argument", b)
            args.append(b.text)
            t = p.next("')'")
        if t.text != ")":
            raise p.err(BadDirective, f"expected ')', got {t.text!r}", t)
        k = kind.text.upper()
        if k == "V":
            args = [x.lower() for x in args]
        labels.append(f"{k}({','.join(args)})")
    if not labels:
        raise p.err(BadDirective, ".probe needs at least one label")
    return tuple(labels)


def parse(text: str | bytes) -> Netlist:
    """Parse netlist text; raise a :class:`NetlistError` subclass on any problem."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as e:
            before = bytes(text)[: e.start]
            line = before.count(b"\n") + 1
            col = e.start - (before.rfind(b"\n") + 1) + 1
            raise BadEncoding("invalid UTF-8", line, col) from None
    raw_lines = text.splitlines()

    # first pass: .param, so values may reference parameters defined anywhere
    params: dict[str, float] = {}
    body: list[tuple[int, str]] = []
    for idx, line in enumerate(raw_lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("*"):
            continue
        if stripped.lower() == ".end" or stripped.lower().startswith(".end "):
            break
        body.append((idx, line))

    directives: list[Directive] = []
    title = ""
    for idx, line in body:
        stripped = line.strip()
        if stripped.lower().startswith(".param"):
            toks = _tokenize(line)
            p = _Parser(idx, toks[1:], params)
            if toks[0].text.lower() != ".param":
                raise p.err(UnknownCard, f"unknown directive {toks[0].text!r}", toks[0])
            pairs = p.keyvals()
            if not pairs:
                raise p.err(BadDirective, ".param needs NAME=value")
            for key, val in pairs:
                value = p.value_of(val, key.text)
                params[key.text.casefold()] = value

    components: list[Component] = []
    lines_of: dict[str, int] = {}
    for idx, line in body:
        toks = _tokenize(line)
        head = toks[0]
        if head.text.startswith("."):
            word = head.text.lower()
            p = _Parser(idx, toks[1:], params)
            if word == ".title":
                title = line.strip()[len(".title"):].strip()
            elif word == ".tran":
                step = p.number("tran step")
                stop = p.number("tran stop")
                p.finish()
                if not (0 < step < stop):
                    raise BadDirective(".tran needs 0 < step < stop", idx, head.col)
                directives.append(Tran(step, stop))
            elif word == ".param":
                for key, val in p.keyvals():
                    directives.append(Param(key.text, params[key.text.casefold()]))
            elif word == ".probe":
                directives.append(Probe(_parse_probe_labels(p)))
            else:
                raise UnknownCard(f"unknown directive {head.text!r}", idx, head.col)
            continue
        p = _Parser(idx, toks, params)
        comp = _parse_card(p)
        key = comp.name.casefold()
        if key in lines_of:
            raise DuplicateName(
                f"component {comp.name!r} already defined on line {lines_of[key]}", idx, head.col)
        lines_of[key] = idx
        components.append(comp)

    netlist = Netlist(title, tuple(components), tuple(_canonical_probes(directives, components)))
    try:
        return netlist.validate(lines_of)
    except NetlistError as e:
        if isinstance(e, BadDirective) and e.line == 0:
            probe_line = next((i for i, ln in body if ln.strip().lower().startswith(".probe")), 0)
            raise BadDirective(e.message, probe_line, 1) from None
        raise


def _canonical_probes(directives: Iterable[Directive], components: list[Component]) -> list[Directive]:
    names = {c.name.casefold(): c.name for c in components}
    out = []
    for d in directives:
        if isinstance(d, Probe):
            fixed = []
            for label in d.labels:
                if label[0] in "IX":
                    inner = label[2:-1]
                    label = f"{label[0]}({names.get(inner.casefold(), inner)})"
                fixed.append(label)
            d = Probe(tuple(fixed))
        out.append(d)
    return out


def serialize(netlist: Netlist) -> str:
    """Canonical text; ``parse(serialize(n)) == n`` for any valid netlist."""
    lines = []
    if netlist.title:
        lines.append(f".title {netlist.title}")
    lines.extend(c.card() for c in netlist.components)
    lines.extend(d.card() for d in netlist.directives)
    lines.append(".end")
    return "\n".join(lines) + "\n"
