"""``qmeasure`` command-line interface.

Every command reads a scenario file, runs a set of checks and prints a
report. Exit status: 0 if every check passes, 1 if one fails, 2 for
usage or scenario errors, 3 when a computation does not converge.
"""

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .continuum import check_esck, inner, lemma4_reconstruct, reconstruct_step_function
from .dynamics import DecoherenceFunctional, verify_axioms
from .events import ContinuumEvent, FiniteEvent, HomogeneousEvent, Region
from .exceptions import AxiomViolationError, HypothesisFailure, NumericalError, QMeasureError, UsageError
from .gns import f0_map, invert_via_witness, onto_witness_search, singleton_hilbert_space
from .scenario import Scenario, ScenarioError, as_bool, as_float, as_floats, as_int, build_continuum, build_finite

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3
THREADS_ENV = "QMEASURE_THREADS"

PASS, FAIL, INFO, NA = "PASS", "FAIL", "INFO", "N/A"


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".6e")
    if isinstance(value, complex):
        return f"{value.real:.6e},{value.imag:.6e}"
    return str(value)


@dataclass
class Record:
    name: str
    value: object
    tol: object = None
    status: str = INFO

    @classmethod
    def check(cls, name, value, tol, ok):
        return cls(name, value, tol, PASS if ok else FAIL)


@dataclass
class Report:
    command: str
    scenario: str
    digest: str
    records: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def add(self, record):
        self.records.append(record)

    @property
    def passed(self):
        return all(r.status != FAIL for r in self.records)

    def body(self):
        rows = [(r.name, _fmt(r.value), "-" if r.tol is None else _fmt(r.tol), r.status) for r in self.records]
        widths = [max([len(h)] + [len(row[i]) for row in rows]) for i, h in enumerate(("check", "value", "tol", "status"))]
        lines = [
            f"command: {self.command}",
            f"scenario: {self.scenario}",
            f"digest: sha256:{self.digest}",
            "",
            "  ".join(h.ljust(w) for h, w in zip(("check", "value", "tol", "status"), widths)).rstrip(),
        ]
        lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows]
        lines += ["", f"result: {PASS if self.passed else FAIL}"]
        return "\n".join(lines) + "\n"

    def render(self):
        timing = " ".join(f"{k}={v:.3f}s" for k, v in self.timings.items())
        return self.body() + f"timings: {timing}\n"

    def to_dict(self):
        def plain(v):
            if isinstance(v, complex):
                return [v.real, v.imag]
            if isinstance(v, np.generic):
                return v.item()
            return v

        return {
            "command": self.command,
            "scenario": self.scenario,
            "digest": self.digest,
            "passed": self.passed,
            "records": [
                {"name": r.name, "value": plain(r.value), "tol": plain(r.tol), "status": r.status} for r in self.records
            ],
            "timings": self.timings,
        }


def _threads():
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def _random_finite_events(space, count, rng):
    out = []
    for _ in range(count):
        bools = rng.random(space.size) < 0.5
        out.append(FiniteEvent.from_bools(space, bools))
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_check_axioms(scn, args, report):
    opts = scn.options("check")
    seed = args.seed if args.seed is not None else scn.seed
    if scn.kind == "finite":
        setup = build_finite(scn)
        tol = args.tol if args.tol is not None else as_float(opts.get("tol", "1e-10"), "tol")
        events = list(setup.events.values())
        count = as_int(opts.get("random_events", "0" if events else "12"), "random_events")
        events += _random_finite_events(setup.space, count, np.random.default_rng(seed))
        if not events:
            raise ScenarioError("no events to check")
        res = verify_axioms(events, setup.state, setup.sched, tol=tol, seed=seed)
        for name, value, t, ok in res.as_records():
            report.add(Record.check(name, value, t, ok))
        report.add(Record.check("unitarity", res.unitarity, 1e-10, res.unitarity <= 1e-10))
        return
    setup = build_continuum(scn)
    tol = args.tol if args.tol is not None else as_float(opts.get("tol", "1e-4"), "tol")
    system = setup.system
    omega = ContinuumEvent.of(_omega(setup.T))
    names = list(setup.events)
    events = [setup.events[k] for k in names]
    norm = abs(system(omega, omega) - 1.0)
    report.add(Record.check("normalization", norm, tol, norm <= tol))
    if events:
        G = system.gram(events)
        herm = float(np.max(np.abs(G - G.conj().T)))
        mineig = float(np.linalg.eigvalsh((G + G.conj().T) / 2)[0])
        report.add(Record.check("hermiticity", herm, tol, herm <= tol))
        report.add(Record.check("min_eigenvalue", mineig, -tol, mineig >= -tol))
        states = [system.restricted(e) for e in events]
        bi = 0.0
        for i in range(len(events)):
            for j in range(i + 1, len(events)):
                if not (events[i] * events[j]).is_empty():
                    continue
                joint = system.restricted(events[i] | events[j])
                for k, r in enumerate(states):
                    lhs = inner(r, joint, setup.grid)
                    bi = max(bi, abs(lhs - G[k, i] - G[k, j]))
        report.add(Record.check("bi_additivity", bi, tol, bi <= tol))
    for key, value in system.provenance().items():
        report.add(Record(f"provenance.{key}", value if not isinstance(value, list) else " ".join(_fmt(v) for v in value)))


def _omega(T):
    return HomogeneousEvent((0.0, T), (Region.full(), Region.full()))


def cmd_gns(scn, args, report):
    setup = build_finite(scn)
    opts = scn.options("gns")
    rank_tol = args.rank_tol if args.rank_tol is not None else as_float(opts.get("rank_tol", "1e-10"), "rank_tol")
    try:
        hs = singleton_hilbert_space(setup.state, setup.sched, rank_tol=rank_tol)
    except AxiomViolationError as exc:
        report.add(Record.check("positivity", str(exc), None, False))
        return
    dim = hs.rank_
    expected = opts.get("expect_dim")
    if expected is None:
        report.add(Record("dim_H2", dim, rank_tol))
    else:
        report.add(Record.check("dim_H2", dim, rank_tol, dim == as_int(expected, "expect_dim")))
    rank = DecoherenceFunctional(setup.state, setup.sched).rank
    report.add(Record("state_rank", rank))
    report.add(Record("isomorphic", dim == rank * setup.sched.n))
    if not setup.mixed:
        witness = onto_witness_search(setup.state, setup.sched)
        expect_onto = opts.get("expect_onto")
        value = "onto" if witness.is_onto else "not-onto:" + ",".join(map(str, witness.unreachable))
        if expect_onto is None:
            report.add(Record("witness", value))
        else:
            report.add(Record.check("witness", value, None, witness.is_onto == as_bool(expect_onto, "expect_onto")))


def cmd_onto(scn, args, report):
    setup = build_finite(scn)
    if setup.mixed:
        raise ScenarioError("onto needs a pure initial state")
    opts = scn.options("onto")
    tol = args.tol if args.tol is not None else as_float(opts.get("tol", "1e-12"), "tol")
    witness = onto_witness_search(setup.state, setup.sched)
    expect = as_bool(opts.get("expect_onto", "true"), "expect_onto")
    report.add(Record.check("onto", witness.is_onto, None, witness.is_onto == expect))
    if not witness.is_onto:
        report.add(Record("unreachable", " ".join(map(str, witness.unreachable))))
        return
    report.add(Record("min_witness_amplitude", float(np.min(np.abs(witness.amplitudes)))))
    seed = args.seed if args.seed is not None else scn.seed
    rng = np.random.default_rng(seed)
    D = DecoherenceFunctional(setup.state, setup.sched)
    worst = 0.0
    count = as_int(opts.get("targets", "20"), "targets")
    for _ in range(count):
        phi = rng.standard_normal(setup.sched.n) + 1j * rng.standard_normal(setup.sched.n)
        u = invert_via_witness(phi, witness)
        worst = max(worst, float(np.max(np.abs(f0_map(u, D) - phi))))
    report.add(Record.check("inversion_residual", worst, tol, worst <= tol))


def cmd_esck(scn, args, report):
    setup = build_continuum(scn)
    opts = scn.options("esck")
    tol = args.tol if args.tol is not None else as_float(opts.get("tol", "1e-3"), "tol")
    t1, t2, t3 = as_floats(opts.get("times", "0 0.5 1"), "times")
    points = as_floats(opts.get("points", "-2 -1 0 1 2"), "points")
    pairs = [(x3, x1) for x3 in points for x1 in points]

    def run(pair):
        return check_esck(setup.spec, pair[0], t3, pair[1], t1, t2, setup.ladder, setup.grid)

    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        results = list(pool.map(run, pairs))
    for (x3, x1), res in zip(pairs, results):
        name = f"residual(x3={x3:g},x1={x1:g})"
        if not res.applicable:
            report.add(Record(name, res.reason, tol, NA))
        else:
            report.add(Record.check(name, res.residual, tol, res.residual < tol))


def cmd_reconstruct(scn, args, report):
    setup = build_continuum(scn)
    opts = scn.options("reconstruct")
    eps = args.tol if args.tol is not None else as_float(opts.require("eps"), "eps")
    expect_failure = as_bool(opts.get("expect_failure", "false"), "expect_failure")
    t_source = as_float(opts.get("t_source", "0"), "t_source")
    steps = [tuple(as_floats(s, "step")) for s in opts.values("step")]
    interval = opts.get("interval")
    if (interval is None) == (not steps):
        raise ScenarioError("[reconstruct] needs exactly one of 'interval' or 'step' entries")
    if any(len(s) != 3 for s in steps):
        raise ScenarioError("each step is 'lo hi weight'")
    try:
        if interval is not None:
            lo, hi = as_floats(interval, "interval")
            res = lemma4_reconstruct((lo, hi), eps, setup.psi, setup.spec, setup.T, system=setup.system, t_source=t_source)
        else:
            res = reconstruct_step_function(steps, eps, setup.psi, setup.spec, setup.T, setup.grid, setup.ladder, t_source=t_source)
    except HypothesisFailure as exc:
        report.add(Record.check("hypothesis", f"fails at x={exc.point:g}", None, expect_failure))
        return
    report.add(Record.check("hypothesis", "holds", None, not expect_failure))
    report.add(Record.check("l2_error", res.error, eps, res.error < eps))
    report.add(Record("cells", res.cells))
    if np.isfinite(res.P):
        report.add(Record("lower_bound_P", res.P))


def cmd_interference(scn, args, report):
    setup = build_continuum(scn)
    opts = scn.options("interference")
    a_name, b_name = opts.require("alpha"), opts.require("beta")
    for name in (a_name, b_name):
        if name not in setup.events:
            raise ScenarioError(f"no [event {name}] section")
    threshold = args.tol if args.tol is not None else as_float(opts.get("min", "1e-6"), "min")
    a, b = setup.events[a_name], setup.events[b_name]
    if not (a * b).is_empty():
        raise ScenarioError("interference needs disjoint events")
    system = setup.system
    mu_a, mu_b, mu_ab = system.measure(a), system.measure(b), system.measure(a | b)
    d_ab, d_ba = system(a, b), system(b, a)
    report.add(Record("mu_alpha", mu_a))
    report.add(Record("mu_beta", mu_b))
    report.add(Record("mu_union", mu_ab))
    report.add(Record("D_alpha_beta", complex(d_ab)))
    herm = abs(d_ab - np.conj(d_ba))
    report.add(Record.check("hermiticity", herm, 1e-10, herm <= 1e-10))
    term = mu_ab - mu_a - mu_b
    report.add(Record.check("interference", term, threshold, abs(term) > threshold))
    for key, value in system.provenance().items():
        report.add(Record(f"provenance.{key}", value if not isinstance(value, list) else " ".join(_fmt(v) for v in value)))


COMMANDS = {
    "check-axioms": cmd_check_axioms,
    "gns": cmd_gns,
    "onto": cmd_onto,
    "esck": cmd_esck,
    "reconstruct": cmd_reconstruct,
    "interference": cmd_interference,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="qmeasure", description="Quantum measure theory experiments from scenario files.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("scenario", help="path to a scenario file")
        p.add_argument("--tol", type=float, default=None, help="override the check tolerance")
        p.add_argument("--rank-tol", type=float, default=None, help="relative eigenvalue cutoff for dim H2")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--out", default=None, help="also write the report as JSON to this path")
    return parser


def run(argv=None, stdout=None, stderr=None):
    """Run the CLI and return the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    start = time.perf_counter()
    try:
        args.threads = _threads()
        scn = Scenario.load(args.scenario)
        report = Report(args.command, os.path.basename(args.scenario), scn.digest())
        with threadpool_limits(limits=args.threads):
            COMMANDS[args.command](scn, args, report)
    except NumericalError as exc:
        print(f"qmeasure: numerical error: {exc}", file=stderr)
        for key, value in (exc.diagnostics or {}).items():
            print(f"  {key}: {value}", file=stderr)
        return EXIT_NUMERICAL
    except (UsageError, ValueError) as exc:
        print(f"qmeasure: error: {exc}", file=stderr)
        return EXIT_USAGE
    except QMeasureError as exc:
        print(f"qmeasure: error: {exc}", file=stderr)
        return EXIT_FAIL
    report.timings["total"] = time.perf_counter() - start
    stdout.write(report.render())
    if args.out:
        try:
            with open(args.out, "w") as fh:
                json.dump(report.to_dict(), fh, indent=2)
                fh.write("\n")
        except OSError as exc:
            print(f"qmeasure: cannot write {args.out}: {exc.strerror}", file=stderr)
            return EXIT_USAGE
    return EXIT_PASS if report.passed else EXIT_FAIL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
