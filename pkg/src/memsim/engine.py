"""Fixed-step transient simulation by modified nodal analysis.

Unknowns are the non-ground node voltages followed by one branch current per
V, E and O element (current entering the first node of the element). Each
capacitor becomes a companion conductance plus history current source;
memristors are stamped as resistors of value ``M(x)`` with ``x`` frozen
during a solve, and the state update alternates with the circuit solve until
both settle.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from . import device_models as dm
from .device_models import window_kernel
from .linalg import SingularMatrix, factor, lu_inplace, lu_solve, solve_factored
from .netlist import VCVS, Capacitor, Memristor, Netlist, OpAmp, Resistor, VoltageSource

__all__ = [
    "SimulationError", "NonConvergence", "SingularMatrix",
    "SimConfig", "MnaSystem", "Waveform", "assemble", "transient_run",
]

METHODS = ("trapezoidal", "backward-euler")


class SimulationError(RuntimeError):
    pass


class NonConvergence(SimulationError):
    def __init__(self, step: int, t: float, detail: str = ""):
        self.step = step
        self.t = t
        super().__init__(f"inner iteration did not converge at step {step} (t={t:.6g} s){detail}")


@dataclass(frozen=True)
class SimConfig:
    dt: float
    t_stop: float
    newton_tol: float = 1e-9
    max_inner_iters: int = 50
    method: str = "trapezoidal"
    state_tol: float = 1e-9
    #: op-amp output clamp in volts (e.g. 15.0); ``None`` keeps op-amps ideal
    opamp_rail: float | None = None

    def __post_init__(self):
        if not (self.dt > 0 and self.t_stop > self.dt and self.newton_tol > 0):
            raise ValueError("need dt > 0, t_stop > dt, newton_tol > 0")
        if self.method in ("trap", "be"):
            object.__setattr__(self, "method", {"trap": "trapezoidal", "be": "backward-euler"}[self.method])
        if self.method not in METHODS:
            raise ValueError(f"unknown integration method {self.method!r}")

    @classmethod
    def from_netlist(cls, netlist: Netlist, **overrides) -> "SimConfig":
        tran = netlist.tran
        kw = {}
        if tran is not None:
            kw.update(dt=tran.step, t_stop=tran.stop)
        kw.update({k: v for k, v in overrides.items() if v is not None})
        if "dt" not in kw or "t_stop" not in kw:
            raise ValueError("no .tran directive and no dt/t_stop given")
        return cls(**kw)

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.t_stop / self.dt + 1e-9))


@dataclass
class MnaSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    node_index: dict[str, int]
    branch_index: dict[str, int]
    _lu: tuple | None = field(default=None, repr=False)

    def solve(self) -> np.ndarray:
        if self._lu is None:
            self._lu = factor(self.matrix)
        return solve_factored(self._lu, self.rhs)

    def voltage(self, solution: np.ndarray, node: str) -> float:
        return 0.0 if node == "0" else float(solution[self.node_index[node]])


@dataclass
class Waveform:
    t: np.ndarray
    channels: dict[str, np.ndarray]
    dt: float

    def __post_init__(self):
        n = len(self.t)
        for name, values in self.channels.items():
            if len(values) != n:
                raise ValueError(f"channel {name!r} has {len(values)} samples, expected {n}")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]

    @property
    def names(self) -> list[str]:
        return list(self.channels)

    def tail(self, fraction: float = 0.5) -> "Waveform":
        start = len(self.t) - int(len(self.t) * fraction)
        return Waveform(self.t[start:], {k: v[start:] for k, v in self.channels.items()}, self.dt)

    def to_csv(self, dest) -> None:
        """Write ``t`` plus one column per channel, full double precision."""
        if isinstance(dest, (str, Path)):
            with open(dest, "w", newline="") as fh:
                self._write(fh)
        else:
            self._write(dest)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        self._write(buf)
        return buf.getvalue()

    def _write(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *self.channels])
        cols = [self.t, *self.channels.values()]
        for row in zip(*cols):
            w.writerow([format(float(v), ".17g") for v in row])

    @classmethod
    def from_csv(cls, src) -> "Waveform":
        if isinstance(src, (str, Path)):
            with open(src, newline="") as fh:
                rows = list(csv.reader(fh))
        else:
            rows = list(csv.reader(src))
        header, body = rows[0], rows[1:]
        if not header or header[0] != "t":
            raise ValueError("first column must be 't'")
        data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header))
        t = data[:, 0]
        dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
        return cls(t, {name: data[:, k] for k, name in enumerate(header) if k > 0}, dt)


def _stamp_g(a: np.ndarray, i: int, j: int, g: float) -> None:
    if i >= 0:
        a[i, i] += g
    if j >= 0:
        a[j, j] += g
    if i >= 0 and j >= 0:
        a[i, j] -= g
        a[j, i] -= g


def _soft_clip(gain: float, vmax: float | None, vin: float) -> tuple[float, float]:
    """Output and slope of the E-card transfer at ``vin``."""
    if vmax is None:
        return gain * vin, gain
    th = math.tanh(gain * vin / vmax)
    return vmax * th, gain * (1.0 - th * th)


def _incidence(size: int, i: int, j: int) -> np.ndarray:
    col = np.zeros(size)
    if i >= 0:
        col[i] = 1.0
    if j >= 0:
        col[j] = -1.0
    return col


class _Circuit:
    """Index maps, incidence vectors and stamping for one netlist."""

    def __init__(self, netlist: Netlist):
        self.netlist = netlist
        self.node_index = {n: k for k, n in enumerate(netlist.node_names)}
        self.n_nodes = len(self.node_index)
        ix = self.ix
        self.resistors = [(ix(c.nodes[0]), ix(c.nodes[1]), 1.0 / c.value) for c in netlist.of_kind(Resistor)]
        self.caps = netlist.of_kind(Capacitor)
        self.cap_nodes = [(ix(c.nodes[0]), ix(c.nodes[1])) for c in self.caps]
        self.cap_values = np.array([c.value for c in self.caps])
        self.mems = netlist.of_kind(Memristor)
        self.mem_nodes = [(ix(c.nodes[0]), ix(c.nodes[1])) for c in self.mems]
        self.vsrcs = netlist.of_kind(VoltageSource)
        self.vcvs = netlist.of_kind(VCVS)
        self.opamps = netlist.of_kind(OpAmp)
        branch_elems = [*self.vsrcs, *self.vcvs, *self.opamps]
        self.branch_index = {c.name: self.n_nodes + k for k, c in enumerate(branch_elems)}
        self.size = self.n_nodes + len(branch_elems)
        self.soft = [e for e in self.vcvs if e.vmax is not None]
        self.src_rows = [self.branch_index[s.name] for s in self.vsrcs]

        size = self.size
        self.u_cap = np.column_stack([_incidence(size, i, j) for i, j in self.cap_nodes]) \
            if self.caps else np.zeros((size, 0))
        self.u_mem = np.column_stack([_incidence(size, i, j) for i, j in self.mem_nodes]) \
            if self.mems else np.zeros((size, 0))
        ps = [m.params for m in self.mems]
        self.r_on = np.array([p.r_on for p in ps])
        self.r_off = np.array([p.r_off for p in ps])
        self.coef = np.array([p.eta * p.drift_coefficient for p in ps])
        self.p = np.array([p.p for p in ps], dtype=int)
        self.window = np.array([p.window for p in ps]) if ps else np.array([], dtype=str)
        self.x0 = np.array([p.x0 for p in ps])

    def ix(self, node: str) -> int:
        return -1 if node == "0" else self.node_index[node]

    @staticmethod
    def v(sol: np.ndarray, k: int) -> float:
        return 0.0 if k < 0 else sol[k]

    # -- memristor bank, vectorized over devices
    def mem_resistance(self, x: np.ndarray) -> np.ndarray:
        return dm.mixed_resistance(self.r_on, self.r_off, x)

    def mem_currents(self, sol: np.ndarray, x: np.ndarray) -> np.ndarray:
        return (self.u_mem.T @ sol[: self.size]) / self.mem_resistance(x)

    def cap_voltages(self, sol: np.ndarray) -> np.ndarray:
        return self.u_cap.T @ sol[: self.size]

    # -- stamping
    def static_matrix(self, dt: float | None, method: str) -> np.ndarray:
        """Stamps that stay fixed within a run. ``dt=None`` gives the t=0 system,
        in which capacitors are voltage sources (one extra row each)."""
        size = self.size + (len(self.caps) if dt is None else 0)
        a = np.zeros((size, size))
        for i, j, g in self.resistors:
            _stamp_g(a, i, j, g)
        if dt is not None:
            scale = 2.0 if method == "trapezoidal" else 1.0
            for (i, j), c in zip(self.cap_nodes, self.caps):
                _stamp_g(a, i, j, scale * c.value / dt)
        else:
            for k, (i, j) in enumerate(self.cap_nodes):
                self._stamp_branch(a, self.size + k, i, j)
        for src in self.vsrcs:
            self._stamp_branch(a, self.branch_index[src.name], self.ix(src.nodes[0]), self.ix(src.nodes[1]))
        for e in self.vcvs:
            k = self.branch_index[e.name]
            self._stamp_branch(a, k, self.ix(e.nodes[0]), self.ix(e.nodes[1]))
            if e.vmax is None:
                self._stamp_control(a, k, e, e.gain)
        for o in self.opamps:
            k = self.branch_index[o.name]
            out, ip, im = (self.ix(n) for n in o.nodes)
            if out >= 0:
                a[out, k] += 1.0
            if ip >= 0:
                a[k, ip] += 1.0
            if im >= 0:
                a[k, im] -= 1.0
        return a

    @staticmethod
    def _stamp_branch(a, k, i, j):
        if i >= 0:
            a[i, k] += 1.0
            a[k, i] += 1.0
        if j >= 0:
            a[j, k] -= 1.0
            a[k, j] -= 1.0

    def _stamp_control(self, a, k, e, slope):
        ip, im = self.ix(e.nodes[2]), self.ix(e.nodes[3])
        if ip >= 0:
            a[k, ip] -= slope
        if im >= 0:
            a[k, im] += slope

    def soft_terms(self, guess: np.ndarray):
        """Per soft-clip E card: (row, slope, rhs term) linearized at ``guess``."""
        out = []
        for e in self.soft:
            vin = self.v(guess, self.ix(e.nodes[2])) - self.v(guess, self.ix(e.nodes[3]))
            vout, slope = _soft_clip(e.gain, e.vmax, vin)
            out.append((self.branch_index[e.name], slope, vout - slope * vin))
        return out

    def dynamic(self, a, b, guess, x, sat):
        """Add iteration-dependent stamps: memristors, soft-clip E cards, clamped op-amps."""
        for (i, j), r in zip(self.mem_nodes, self.mem_resistance(np.asarray(x, dtype=float))):
            _stamp_g(a, i, j, 1.0 / r)
        for e, (k, slope, rhs) in zip(self.soft, self.soft_terms(guess)):
            self._stamp_control(a, k, e, slope)
            b[k] += rhs
        for o, s in zip(self.opamps, sat):
            if s:
                k = self.branch_index[o.name]
                a[k, :] = 0.0
                a[k, self.ix(o.nodes[0])] = 1.0
                b[k] = s

    def source_rhs(self, b, t):
        for row, src in zip(self.src_rows, self.vsrcs):
            b[row] = src.source.value(t)


def assemble(netlist: Netlist, states=None, prev=None, dt: float | None = None, t: float = 0.0,
             method: str = "trapezoidal") -> MnaSystem:
    """Stamp the MNA system for one solve.

    ``states`` maps memristor names to x (default: each card's x0). ``prev`` is
    ``(solution, capacitor_currents)`` from the previous step and supplies the
    capacitor history. With ``dt=None`` capacitors are held at their previous
    voltage (0 V without ``prev``), as in the t=0 solve; the matrix then has one
    extra row per capacitor. Raises SingularMatrix for ill-posed circuits.
    """
    circ = _Circuit(netlist)
    states = states or {}
    x = np.array([states.get(m.name, m.params.x0) for m in circ.mems])
    a = circ.static_matrix(dt, method)
    b = np.zeros(a.shape[0])
    circ.source_rhs(b, t)
    sol_prev = None if prev is None else np.asarray(prev[0], dtype=float)
    guess = sol_prev if sol_prev is not None else np.zeros(a.shape[0])
    if sol_prev is not None:
        vc = circ.cap_voltages(sol_prev)
    else:
        vc = np.zeros(len(circ.caps))
    if dt is None:
        b[circ.size:] = vc
    else:
        icap = np.zeros(len(circ.caps)) if prev is None else np.asarray(prev[1], dtype=float)
        b[: circ.size] += circ.u_cap @ _cap_history(circ, vc, icap, dt, method)
    circ.dynamic(a, b, guess, x, [0] * len(circ.opamps))
    system = MnaSystem(a, b, dict(circ.node_index), dict(circ.branch_index))
    system._lu = factor(a)
    return system


def _cap_history(circ: _Circuit, vc, icap, dt, method) -> np.ndarray:
    """Companion history current of each capacitor (injected into its first node)."""
    if method == "trapezoidal":
        return 2.0 * circ.cap_values / dt * vc + icap
    return circ.cap_values / dt * vc


def _default_probes(netlist: Netlist, circ: _Circuit, probes) -> list[str]:
    if probes == "all":
        labels = [f"V({n})" for n in circ.node_index]
        labels += [f"I({c.name})" for c in netlist.components]
        labels += [f"X({m.name})" for m in circ.mems]
        return labels
    if probes is not None:
        return list(probes)
    if netlist.probes:
        return netlist.probes
    return [f"V({n})" for n in circ.node_index]


def transient_run(netlist: Netlist, config: SimConfig | None = None, probes=None) -> Waveform:
    """Integrate ``netlist`` from zero initial conditions over ``[0, t_stop]``.

    Each step solves with memristor states frozen, updates the states by the
    chosen rule from the resulting currents, and repeats until the state and
    node-voltage changes fall below ``state_tol`` and ``newton_tol``; states
    are then clamped to [0, 1]. ``probes`` overrides the ``.probe`` labels;
    ``"all"`` records every node voltage, element current and memristor state.
    """
    cfg = config if config is not None else SimConfig.from_netlist(netlist)
    circ = _Circuit(netlist)
    labels = _default_probes(netlist, circ, probes)
    n, dt = cfg.n_steps, cfg.dt
    nmem, ncap, size = len(circ.mems), len(circ.caps), circ.size
    sat = [0.0] * len(circ.opamps)

    x0 = circ.x0.copy()
    try:
        sol0 = _initial_solve(circ, cfg, circ.static_matrix(None, cfg.method), x0, sat)
        first_be = False
    except SingularMatrix:
        # 0 V capacitors contradict a source or op-amp constraint: start from
        # near-shorted capacitors and take the first step with backward Euler
        sol0 = _initial_solve(circ, cfg, circ.static_matrix(dt * 1e-6, "backward-euler"), x0, sat)
        first_be = True

    sol_hist = np.zeros((n + 1, size))
    x_hist = np.zeros((n + 1, nmem))
    imem_hist = np.zeros((n + 1, nmem))
    icap_hist = np.zeros((n + 1, ncap))
    sol_hist[0] = sol0[:size]
    if first_be:
        # companion current of the near-short, so KCL holds at t = 0 as well
        icap_hist[0] = circ.cap_values / (dt * 1e-6) * circ.cap_voltages(sol0)
    else:
        icap_hist[0] = sol0[size:]
    x_hist[0] = x0
    imem_hist[0] = circ.mem_currents(sol0, x0)

    times = np.arange(n + 1) * dt
    src_vals = np.array([[s.source.value(t) for s in circ.vsrcs] for t in times]).reshape(n + 1, len(circ.vsrcs))
    ints = lambda seq: np.array(list(seq), dtype=np.int64)
    floats = lambda seq: np.array(list(seq), dtype=float)
    trap = cfg.method == "trapezoidal"
    info = np.zeros(2)
    status = _integrate(
        circ.static_matrix(dt, "backward-euler" if first_be else cfg.method),
        circ.static_matrix(dt, cfg.method),
        1 if first_be else 0, trap and not first_be, trap, dt, n,
        ints(circ.src_rows), src_vals,
        ints(i for i, _ in circ.cap_nodes), ints(j for _, j in circ.cap_nodes), circ.cap_values.astype(float),
        ints(i for i, _ in circ.mem_nodes), ints(j for _, j in circ.mem_nodes),
        circ.r_on.astype(float), circ.r_off.astype(float), circ.coef.astype(float), circ.p.astype(np.int64),
        ints(dm.WINDOW_CODES[w] for w in circ.window),
        ints(circ.branch_index[e.name] for e in circ.soft),
        ints(circ.ix(e.nodes[2]) for e in circ.soft), ints(circ.ix(e.nodes[3]) for e in circ.soft),
        floats(e.gain for e in circ.soft), floats(e.vmax for e in circ.soft),
        ints(circ.branch_index[o.name] for o in circ.opamps),
        ints(circ.ix(o.nodes[0]) for o in circ.opamps), ints(circ.ix(o.nodes[1]) for o in circ.opamps),
        ints(circ.ix(o.nodes[2]) for o in circ.opamps), floats(sat),
        float(cfg.opamp_rail or 0.0),
        cfg.newton_tol, cfg.state_tol, cfg.max_inner_iters,
        sol_hist, x_hist, imem_hist, icap_hist, info,
    )
    if status > 0:
        raise NonConvergence(status, status * dt, f": |dv|={info[0]:.3g}, |dx|={info[1]:.3g}")
    if status <= -2:
        step = -status - 2
        raise SingularMatrix(f"singular MNA matrix at step {step} (t={step * dt:.6g} s)")

    channels = {label: _channel(label, circ, sol_hist, x_hist, imem_hist, icap_hist) for label in labels}
    return Waveform(times, channels, dt)


@njit(cache=True)
def _nv(sol, k):
    return 0.0 if k < 0 else sol[k]


@njit(cache=True)
def _integrate(a_first, a_main, n_first, trap_first, trap_main, dt, n,
               src_rows, src_vals, cap_i, cap_j, cap_c,
               mem_i, mem_j, r_on, r_off, coef, p, wmode,
               e_row, e_ip, e_im, e_gain, e_vmax,
               o_row, o_out, o_ip, o_im, sat, rail,
               newton_tol, state_tol, max_iters,
               sol_hist, x_hist, imem_hist, icap_hist, info):
    """Time loop. Returns -1 on success, the step index on non-convergence,
    or -(step + 2) when the matrix turns singular."""
    size = a_main.shape[0]
    nmem = mem_i.shape[0]
    ncap = cap_i.shape[0]
    nsoft = e_row.shape[0]
    nop = o_row.shape[0]
    use_rail = rail > 0.0 and nop > 0
    nonlinear = nmem > 0 or nsoft > 0 or use_rail

    piv = np.zeros(size, np.int64)
    lu_first = a_first.copy()
    piv_first = np.zeros(size, np.int64)
    lu_main = a_main.copy()
    piv_main = np.zeros(size, np.int64)
    if not nonlinear:
        if lu_inplace(lu_first, piv_first) >= 0 or lu_inplace(lu_main, piv_main) >= 0:
            return -3

    sol = sol_hist[0].copy()
    rate_prev = np.zeros(nmem)
    for m in range(nmem):
        rate_prev[m] = coef[m] * imem_hist[0, m] * window_kernel(x_hist[0, m], imem_hist[0, m], p[m], wmode[m])

    a = np.empty_like(a_main)
    b0 = np.zeros(size)
    b = np.zeros(size)
    vc_prev = np.zeros(ncap)
    x_guess = np.zeros(nmem)
    x_new = np.zeros(nmem)
    guess = np.zeros(size)
    new = np.zeros(size)
    for step in range(1, n + 1):
        first = step <= n_first
        trap = trap_first if first else trap_main
        b0[:] = 0.0
        for k in range(src_rows.shape[0]):
            b0[src_rows[k]] = src_vals[step, k]
        for k in range(ncap):
            vc_prev[k] = _nv(sol, cap_i[k]) - _nv(sol, cap_j[k])
            if trap:
                hist = 2.0 * cap_c[k] / dt * vc_prev[k] + icap_hist[step - 1, k]
            else:
                hist = cap_c[k] / dt * vc_prev[k]
            if cap_i[k] >= 0:
                b0[cap_i[k]] += hist
            if cap_j[k] >= 0:
                b0[cap_j[k]] -= hist

        if not nonlinear:
            if first:
                new = lu_solve(lu_first, piv_first, b0)
            else:
                new = lu_solve(lu_main, piv_main, b0)
        else:
            for m in range(nmem):
                xg = x_hist[step - 1, m] + dt * rate_prev[m]
                x_guess[m] = min(1.0, max(0.0, xg))
            guess[:] = sol
            converged = False
            dv = 0.0
            dx = 0.0
            for it in range(max_iters):
                if first:
                    a[:, :] = a_first
                else:
                    a[:, :] = a_main
                b[:] = b0
                for m in range(nmem):
                    g = 1.0 / (r_on[m] * x_guess[m] + r_off[m] * (1.0 - x_guess[m]))
                    i, j = mem_i[m], mem_j[m]
                    if i >= 0:
                        a[i, i] += g
                    if j >= 0:
                        a[j, j] += g
                    if i >= 0 and j >= 0:
                        a[i, j] -= g
                        a[j, i] -= g
                for k in range(nsoft):
                    vin = _nv(guess, e_ip[k]) - _nv(guess, e_im[k])
                    th = np.tanh(e_gain[k] * vin / e_vmax[k])
                    slope = e_gain[k] * (1.0 - th * th)
                    r = e_row[k]
                    if e_ip[k] >= 0:
                        a[r, e_ip[k]] -= slope
                    if e_im[k] >= 0:
                        a[r, e_im[k]] += slope
                    b[r] += e_vmax[k] * th - slope * vin
                if use_rail:
                    for k in range(nop):
                        if sat[k] != 0.0:
                            r = o_row[k]
                            a[r, :] = 0.0
                            a[r, o_out[k]] = 1.0
                            b[r] = sat[k]
                if lu_inplace(a, piv) >= 0:
                    return -(step + 2)
                new = lu_solve(a, piv, b)
                changed = False
                if use_rail:
                    for k in range(nop):
                        vout = _nv(new, o_out[k])
                        if sat[k] == 0.0 and abs(vout) > rail * (1.0 + 1e-12):
                            sat[k] = rail if vout > 0 else -rail
                            changed = True
                        elif sat[k] != 0.0:
                            vd = _nv(new, o_ip[k]) - _nv(new, o_im[k])
                            if vd * sat[k] < 0:
                                sat[k] = 0.0
                                changed = True
                dx = 0.0
                for m in range(nmem):
                    res = r_on[m] * x_guess[m] + r_off[m] * (1.0 - x_guess[m])
                    cur = (_nv(new, mem_i[m]) - _nv(new, mem_j[m])) / res
                    rate = coef[m] * cur * window_kernel(x_guess[m], cur, p[m], wmode[m])
                    if trap:
                        xn = x_hist[step - 1, m] + 0.5 * dt * (rate_prev[m] + rate)
                    else:
                        xn = x_hist[step - 1, m] + dt * rate
                    xn = min(1.0, max(0.0, xn))
                    dx = max(dx, abs(xn - x_guess[m]))
                    x_new[m] = xn
                dv = 0.0
                for k in range(size):
                    dv = max(dv, abs(new[k] - guess[k]))
                converged = it > 0 and dv < newton_tol and dx < state_tol and not changed
                guess[:] = new
                x_guess[:] = x_new
                if converged:
                    break
            if not converged:
                info[0] = dv
                info[1] = dx
                return step
            for m in range(nmem):
                res = r_on[m] * x_guess[m] + r_off[m] * (1.0 - x_guess[m])
                cur = (_nv(new, mem_i[m]) - _nv(new, mem_j[m])) / res
                x_hist[step, m] = x_guess[m]
                imem_hist[step, m] = cur
                rate_prev[m] = coef[m] * cur * window_kernel(x_guess[m], cur, p[m], wmode[m])

        sol[:] = new
        sol_hist[step] = new
        for k in range(ncap):
            vc = _nv(new, cap_i[k]) - _nv(new, cap_j[k])
            if trap:
                icap_hist[step, k] = 2.0 * cap_c[k] / dt * (vc - vc_prev[k]) - icap_hist[step - 1, k]
            else:
                icap_hist[step, k] = cap_c[k] / dt * (vc - vc_prev[k])
    return -1


def _initial_solve(circ: _Circuit, cfg: SimConfig, a0, x, sat) -> np.ndarray:
    guess = np.zeros(a0.shape[0])
    for _ in range(cfg.max_inner_iters):
        a = a0.copy()
        b = np.zeros(a.shape[0])
        circ.source_rhs(b, 0.0)
        circ.dynamic(a, b, guess, x, sat)
        sol = solve_factored(factor(a), b)
        changed = _update_rails(circ, cfg, sol, sat)
        done = (not circ.soft or np.max(np.abs(sol - guess)) < cfg.newton_tol) and not changed
        guess = sol
        if done:
            return sol
    raise NonConvergence(0, 0.0)


def _update_rails(circ: _Circuit, cfg: SimConfig, sol, sat) -> bool:
    """Switch op-amps into or out of output clamping; True if any changed."""
    if not cfg.opamp_rail:
        return False
    changed = False
    rail = cfg.opamp_rail
    for k, o in enumerate(circ.opamps):
        out, ip, im = (circ.ix(n) for n in o.nodes)
        vout = circ.v(sol, out)
        if sat[k] == 0 and abs(vout) > rail * (1 + 1e-12):
            sat[k] = math.copysign(rail, vout)
            changed = True
        elif sat[k]:
            vd = circ.v(sol, ip) - circ.v(sol, im)
            if vd * sat[k] < 0:
                sat[k] = 0.0
                changed = True
    return changed


def _channel(label, circ: _Circuit, sol_hist, x_hist, imem_hist, icap_hist) -> np.ndarray:
    kind, inner = label[0], label[2:-1]

    def node(nm):
        k = circ.ix(nm.lower())
        return np.zeros(len(sol_hist)) if k < 0 else sol_hist[:, k].copy()

    if kind == "V":
        parts = inner.split(",")
        v = node(parts[0])
        return v - node(parts[1]) if len(parts) == 2 else v
    comp = circ.netlist.component(inner)
    if kind == "X":
        return x_hist[:, circ.mems.index(comp)].copy()
    if isinstance(comp, Memristor):
        return imem_hist[:, circ.mems.index(comp)].copy()
    if isinstance(comp, Capacitor):
        return icap_hist[:, circ.caps.index(comp)].copy()
    if isinstance(comp, Resistor):
        return (node(comp.nodes[0]) - node(comp.nodes[1])) / comp.value
    return sol_hist[:, circ.branch_index[comp.name]].copy()
