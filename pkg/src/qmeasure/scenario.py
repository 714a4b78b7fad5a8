"""Plain-text scenario files.

A scenario is a sequence of sections::

    # comment
    [system]
    kind = finite
    n = 2

    [event left]
    history = 0 0
    history = 1 0

Each section has a name, an optional label and ``key = value`` entries;
keys may repeat. Complex numbers are written ``re,im``. The canonical
form (one blank line between sections, single spaces around ``=``, no
comments) is what :meth:`Scenario.dump` produces, and
``Scenario.parse(text).dump() == text`` for canonical ``text``.

The ``build_*`` functions turn a parsed scenario into library objects.
"""

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .continuum import (
    ContinuumSystem,
    ConvergenceLadder,
    Grid,
    PropagatorSpec,
    gaussian_packet,
    halfline_packet,
)
from .dynamics import (
    EvolutionSchedule,
    basis_state,
    nearest_neighbor_schedule,
    random_density_matrix,
    random_schedule,
    random_state,
    trivial_schedule,
)
from .events import ContinuumEvent, FiniteEvent, FiniteSampleSpace, HomogeneousEvent, Region
from .exceptions import UsageError

SECTIONS = {
    "system", "dynamics", "unitary", "state", "density", "event",
    "propagator", "grid", "ladder", "wavefunction",
    "check", "gns", "onto", "esck", "reconstruct", "interference",
}
LABELLED = {"unitary", "event"}


class ScenarioError(UsageError):
    """Malformed or inconsistent scenario file."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass
class Section:
    name: str
    label: str = ""
    entries: list = field(default_factory=list)

    def values(self, key):
        return [v for k, v in self.entries if k == key]

    def get(self, key, default=None):
        vals = self.values(key)
        if len(vals) > 1:
            raise ScenarioError(f"key {key!r} repeated in [{self.header}]")
        return vals[0] if vals else default

    def require(self, key):
        val = self.get(key)
        if val is None:
            raise ScenarioError(f"[{self.header}] needs {key!r}")
        return val

    def keys(self):
        return {k for k, _ in self.entries}

    @property
    def header(self):
        return f"{self.name} {self.label}".strip()


@dataclass
class Scenario:
    sections: list = field(default_factory=list)

    @classmethod
    def parse(cls, text):
        sections = []
        current = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("["):
                if not line.endswith("]"):
                    raise ScenarioError(f"unterminated section header {raw!r}", lineno)
                parts = line[1:-1].split()
                if not parts:
                    raise ScenarioError("empty section header", lineno)
                name, label = parts[0], " ".join(parts[1:])
                if name not in SECTIONS:
                    raise ScenarioError(f"unknown section [{name}]", lineno)
                if (name in LABELLED) != bool(label):
                    need = "needs" if name in LABELLED else "takes no"
                    raise ScenarioError(f"section [{name}] {need} a label", lineno)
                current = Section(name, label)
                if any(s.header == current.header for s in sections):
                    raise ScenarioError(f"duplicate section [{current.header}]", lineno)
                sections.append(current)
                continue
            if current is None:
                raise ScenarioError("entry outside any section", lineno)
            if "=" not in line:
                raise ScenarioError(f"expected 'key = value', got {raw!r}", lineno)
            key, value = (s.strip() for s in line.split("=", 1))
            if not key or " " in key:
                raise ScenarioError(f"bad key {key!r}", lineno)
            current.entries.append((key, " ".join(value.split())))
        scn = cls(sections)
        if scn.section("system") is None:
            raise ScenarioError("missing [system] section")
        return scn

    @classmethod
    def load(cls, path):
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario {path}: {exc.strerror}") from exc
        return cls.parse(text)

    def dump(self):
        blocks = []
        for s in self.sections:
            lines = [f"[{s.header}]"] + [f"{k} = {v}" for k, v in s.entries]
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"

    def digest(self):
        return hashlib.sha256(self.dump().encode()).hexdigest()

    def section(self, name, label=""):
        for s in self.sections:
            if s.name == name and s.label == label:
                return s
        return None

    def labelled(self, name):
        return [s for s in self.sections if s.name == name]

    def options(self, name):
        """Entries of an optional section, or an empty section."""
        return self.section(name) or Section(name)

    @property
    def kind(self):
        kind = self.section("system").require("kind")
        if kind not in ("finite", "continuum"):
            raise ScenarioError(f"system kind must be 'finite' or 'continuum', got {kind!r}")
        return kind

    @property
    def seed(self):
        return as_int(self.section("system").get("seed", "0"), "seed")


# ---------------------------------------------------------------------------
# value helpers


def as_int(text, what="value"):
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ScenarioError(f"{what} must be an integer, got {text!r}") from None


def as_float(text, what="value"):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ScenarioError(f"{what} must be a number, got {text!r}") from None


def as_floats(text, what="value"):
    return [as_float(t, what) for t in text.split()]


def as_ints(text, what="value"):
    return [as_int(t, what) for t in text.split()]


def as_bool(text, what="value"):
    if text in ("true", "yes", "1"):
        return True
    if text in ("false", "no", "0"):
        return False
    raise ScenarioError(f"{what} must be true or false, got {text!r}")


def parse_complex(token):
    parts = token.split(",")
    if len(parts) != 2:
        raise ScenarioError(f"complex numbers are written 're,im', got {token!r}")
    return complex(as_float(parts[0]), as_float(parts[1]))


def format_complex(z):
    z = complex(z)
    return f"{float(z.real)!r},{float(z.imag)!r}"


def parse_complex_row(text):
    return np.array([parse_complex(t) for t in text.split()])


def format_complex_row(values):
    return " ".join(format_complex(z) for z in values)


def parse_region(text):
    """``full``, ``empty``, ``[a,b]``, ``[a,b]|[c,d]`` or ``~[a,b]``."""
    text = text.strip()
    if text == "full":
        return Region.full()
    if text == "empty":
        return Region.empty()
    outside = text.startswith("~")
    body = text[1:] if outside else text
    intervals = []
    for piece in body.split("|"):
        piece = piece.strip()
        if not (piece.startswith("[") and piece.endswith("]")):
            raise ScenarioError(f"bad region {text!r}")
        lo, hi = (as_float(v, "interval endpoint") for v in piece[1:-1].split(","))
        if not hi > lo:
            raise ScenarioError(f"empty interval in region {text!r}")
        intervals.append((lo, hi))
    return Region.outside(intervals) if outside else Region.union(intervals)


def format_region(region):
    if region.kind == "full":
        return "full"
    body = "|".join(f"[{lo!r},{hi!r}]" for lo, hi in region.intervals()) or "empty"
    return ("~" if region.kind == "complement" else "") + body


# ---------------------------------------------------------------------------
# finite systems


@dataclass
class FiniteSetup:
    sched: EvolutionSchedule
    state: np.ndarray
    events: dict
    mixed: bool = False

    @property
    def space(self):
        return self.sched.space


def _finite_schedule(scn, n, N):
    system = scn.section("system")
    times = as_floats(system.get("times", " ".join(str(k) for k in range(N))), "times")
    if len(times) != N:
        raise ScenarioError(f"{N} times expected, got {len(times)}")
    explicit = scn.labelled("unitary")
    dyn = scn.section("dynamics")
    if explicit and dyn is not None:
        raise ScenarioError("give either [dynamics] or [unitary k] sections, not both")
    if explicit:
        steps = {}
        for s in explicit:
            k = as_int(s.label, "unitary index")
            rows = [parse_complex_row(r) for r in s.values("row")]
            if len(rows) != n or any(r.size != n for r in rows):
                raise ScenarioError(f"[unitary {k}] must have {n} rows of {n} entries")
            steps[k] = np.array(rows)
        if sorted(steps) != list(range(N - 1)):
            raise ScenarioError(f"need [unitary 0] .. [unitary {N - 2}]")
        # unitarity is reported by the checks rather than enforced here
        return EvolutionSchedule.unchecked(times, tuple(steps[k] for k in range(N - 1)))
    if dyn is None:
        raise ScenarioError("finite scenarios need [dynamics] or [unitary k] sections")
    gen = dyn.require("generator")
    seed = as_int(dyn.get("seed", str(scn.seed)), "seed")
    if gen == "haar":
        sched = random_schedule(n, N, seed)
    elif gen == "trivial":
        sched = trivial_schedule(n, N)
    elif gen == "nearest_neighbor":
        sched = nearest_neighbor_schedule(n, N, seed)
    else:
        raise ScenarioError(f"unknown generator {gen!r}")
    return EvolutionSchedule(times, sched.steps)


def _finite_state(scn, n):
    st, dm = scn.section("state"), scn.section("density")
    if (st is None) == (dm is None):
        raise ScenarioError("give exactly one of [state] and [density]")
    if st is not None:
        if st.get("basis") is not None:
            return basis_state(n, as_int(st.get("basis"), "basis")), False
        if st.get("values") is not None:
            psi = parse_complex_row(st.get("values"))
            if psi.size != n:
                raise ScenarioError(f"state has {psi.size} entries, expected {n}")
            return psi, False
        return random_state(n, as_int(st.get("seed", str(scn.seed)), "seed")), False
    rows = dm.values("row")
    if rows:
        rho = np.array([parse_complex_row(r) for r in rows])
        if rho.shape != (n, n):
            raise ScenarioError(f"density matrix must be {n}x{n}")
        return rho, True
    rank = as_int(dm.require("rank"), "rank")
    return random_density_matrix(n, rank, as_int(dm.get("seed", str(scn.seed)), "seed")), True


def _finite_event(space, sec):
    mask = 0
    for text in sec.values("history"):
        h = as_ints(text, "history")
        try:
            mask |= FiniteEvent.from_histories(space, [h]).mask
        except ValueError as exc:
            raise ScenarioError(f"[{sec.header}]: {exc}") from None
    for text in sec.values("cylinder"):
        constraints = {}
        for tok in text.split():
            slot, _, configs = tok.partition(":")
            constraints[as_int(slot, "slot")] = as_ints(configs.replace(",", " "), "configuration")
        try:
            mask |= FiniteEvent.cylinder(space, constraints).mask
        except ValueError as exc:
            raise ScenarioError(f"[{sec.header}]: {exc}") from None
    if as_bool(sec.get("all", "false"), "all"):
        mask = FiniteEvent.full(space).mask
    unknown = sec.keys() - {"history", "cylinder", "all"}
    if unknown:
        raise ScenarioError(f"[{sec.header}] has unknown keys {sorted(unknown)}")
    return FiniteEvent(space, mask)


def build_finite(scn):
    if scn.kind != "finite":
        raise ScenarioError("this command needs a finite scenario")
    system = scn.section("system")
    n, N = as_int(system.require("n"), "n"), as_int(system.require("N"), "N")
    if n < 1 or N < 2:
        raise ScenarioError("need n >= 1 and N >= 2")
    sched = _finite_schedule(scn, n, N)
    state, mixed = _finite_state(scn, n)
    space = FiniteSampleSpace(n, N)
    events = {s.label: _finite_event(space, s) for s in scn.labelled("event")}
    return FiniteSetup(sched, state, events, mixed)


# ---------------------------------------------------------------------------
# continuum systems


@dataclass
class ContinuumSetup:
    system: object
    spec: object
    psi: object
    grid: object
    ladder: object
    T: float
    events: dict


def _continuum_event(sec):
    parts = []
    for text in sec.values("part"):
        times, regions = [], []
        for tok in text.split():
            t, sep, reg = tok.partition(":")
            if not sep:
                raise ScenarioError(f"[{sec.header}]: expected 'time:region', got {tok!r}")
            times.append(as_float(t, "time"))
            regions.append(parse_region(reg))
        try:
            parts.append(HomogeneousEvent(tuple(times), tuple(regions)))
        except ValueError as exc:
            raise ScenarioError(f"[{sec.header}]: {exc}") from None
    if not parts:
        raise ScenarioError(f"[{sec.header}] needs at least one 'part'")
    try:
        return ContinuumEvent(tuple(parts))
    except ValueError as exc:
        raise ScenarioError(f"[{sec.header}]: {exc}") from None


def build_continuum(scn):
    if scn.kind != "continuum":
        raise ScenarioError("this command needs a continuum scenario")
    p = scn.options("propagator")
    A = p.get("A", "0")
    try:
        spec = PropagatorSpec(
            kind=p.get("kind", "free"),
            mass=as_float(p.get("mass", "1")),
            hbar=as_float(p.get("hbar", "1")),
            charge=as_float(p.get("charge", "1")),
            A=tuple(as_floats(A)),
            omega=as_float(p.get("omega", "1")),
        )
        g = scn.options("grid")
        grid = Grid(
            as_float(g.get("lo", "-12")),
            as_float(g.get("hi", "12")),
            as_int(g.get("order", "20")),
            as_float(g.get("max_panel", "0.5")),
            as_float(g.get("oversample", "2")),
        )
        lad = scn.section("ladder")
        ladder = None
        if lad is not None:
            ladder = ConvergenceLadder(
                tuple(as_floats(lad.require("epsilons"))),
                as_int(lad.get("order")) if lad.get("order") else None,
                as_float(lad.get("tol", "1e-6")),
            )
        w = scn.options("wavefunction")
        family = w.get("family", "gaussian")
        if family == "gaussian":
            psi = gaussian_packet(as_float(w.get("x0", "0")), as_float(w.get("p0", "0")), as_float(w.get("sigma", "1")), spec.hbar)
        elif family == "halfline":
            psi = halfline_packet(as_float(w.get("x0", "2")), as_float(w.get("sigma", "0.5")), spec.hbar, as_float(w.get("p0", "0")))
        else:
            raise ScenarioError(f"unknown wave-function family {family!r}")
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    T = as_float(scn.section("system").get("T", "1"), "T")
    events = {s.label: _continuum_event(s) for s in scn.labelled("event")}
    system = ContinuumSystem(psi, spec, grid, ladder)
    return ContinuumSetup(system, spec, psi, grid, ladder, T, events)
