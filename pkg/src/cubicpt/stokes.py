"""Stokes geometry of the cubic family.

Stokes lines are level curves Re int sqrt(V) dz = 0 emanating from the
turning points; anti-Stokes lines have the integral real. The tracer
marches the unit direction field with a second-order predictor-corrector
and re-projects onto the exact level set after every step, accumulating
the action integral along the way with per-step Gauss quadrature.

The diagram identifies the single bounded line ell_f joining the two low
turning points, the line ell_i running up from the imaginary-axis zero,
and the two outward anti-Stokes arms with positive real action. The
integration contour is the chain (reversed minus arm) + ell_f + (plus
arm), truncated where the accumulated action reaches
ln(1/eps_trunc) * h.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .model import (BranchChart, BranchedRoot, ModelParams, ModelError,
                    potential, potential_derivative, turning_points)
from .numkit import ComplexPath

_TP_HIT_RADIUS = 1e-6
_ESCAPE_RADIUS = 10.0
_START_OFFSET = 1e-4
_STEP_CAP = 0.01
_STEP_FLOOR = 1e-6


class StokesError(RuntimeError):
    pass


class StagnationError(StokesError):
    pass


class TopologyError(StokesError):
    """The expected bounded line was not found."""


# five-point Gauss-Legendre on [0, 1]
_G5_X = np.array([0.04691007703066800, 0.23076534494715845, 0.5,
                  0.76923465505284155, 0.95308992296933200])
_G5_W = np.array([0.11846344252809454, 0.23931433524968324, 0.28444444444444444,
                  0.23931433524968324, 0.11846344252809454])


@dataclass
class StokesLine:
    kind: str                 # "stokes" | "anti_stokes"
    origin: str               # "plus" | "minus" | "i"
    polyline: ComplexPath
    terminal: object          # label str, direction index int, or "truncated"
    actions: np.ndarray = None       # cumulative int sqrt(V) dz at vertices
    sqrtv: np.ndarray = None         # tracked sqrt(V) at vertices
    initial_direction: complex = 0j

    @property
    def arc_length(self) -> float:
        return self.polyline.length

    def to_dict(self):
        v = np.asarray(self.polyline.vertices)
        return {
            "kind": self.kind,
            "origin": self.origin,
            "terminal": (self.terminal if isinstance(self.terminal, str)
                         else int(self.terminal)),
            "vertices": [[float(z.real), float(z.imag)] for z in v],
        }


@dataclass
class StokesDiagram:
    params: ModelParams
    lines: list
    ell_f: StokesLine
    ell_i: StokesLine
    ell_tilde_plus: StokesLine
    ell_tilde_minus: StokesLine
    contour_L: ComplexPath
    contour_sqrtv_plus: np.ndarray = None
    contour_sqrtv_minus: np.ndarray = None
    eps_trunc: float = 1e-18
    tps: object = None

    def direction_census(self):
        counts = {k: 0 for k in range(5)}
        for line in self.lines:
            if line.kind == "stokes" and isinstance(line.terminal, (int, np.integer)):
                counts[int(line.terminal)] += 1
        return counts

    def to_dict(self):
        return {
            "alpha": self.params.alpha,
            "h": [self.params.h.real, self.params.h.imag]
                 if isinstance(self.params.h, complex) else self.params.h,
            "turning_points": {
                "plus": [self.tps.x_plus.real, self.tps.x_plus.imag],
                "minus": [self.tps.x_minus.real, self.tps.x_minus.imag],
                "i": [self.tps.x_i.real, self.tps.x_i.imag],
            },
            "lines": [ln.to_dict() for ln in self.lines],
            "contour": [[z.real, z.imag] for z in self.contour_L.vertices],
        }


def stokes_directions(p: ModelParams, tp: complex, kind: str):
    """The three local line directions at a simple turning point."""
    ap = cmath.phase(potential_derivative(tp, p))
    if kind == "stokes":
        return [cmath.exp(1j * ((math.pi + 2 * k * math.pi - ap) / 3.0))
                for k in range(3)]
    return [cmath.exp(1j * ((2 * k * math.pi - ap) / 3.0)) for k in range(3)]


def _tracked_sqrt(z: complex, p: ModelParams, prev: complex) -> complex:
    q = cmath.sqrt(potential(z, p))
    if abs(q - prev) > abs(q + prev):
        q = -q
    return q


def trace_line(origin_label: str, direction: complex, kind: str, p: ModelParams,
               max_len: float = 30.0, *, chart: BranchChart = None,
               escape_radius: float = _ESCAPE_RADIUS) -> StokesLine:
    """March one line from a turning point until it hits another turning
    point, escapes past the asymptotic radius, or exceeds max_len."""
    chart = chart or BranchChart(p)
    tps = chart.tps
    tp = {"plus": tps.x_plus, "minus": tps.x_minus, "i": tps.x_i}[origin_label]
    others = {"plus": tps.x_plus, "minus": tps.x_minus, "i": tps.x_i}
    del others[origin_label]

    direction = direction / abs(direction)
    z = tp + _START_OFFSET * direction
    q = BranchedRoot(chart).sqrt_at(z)
    # the traced field needs sqrt(V) * dz/ds purely imaginary (stokes) or
    # real (anti-stokes); fix the field sign so we move away from the origin
    def field(q_loc: complex, ref: complex) -> complex:
        base = 1j * q_loc.conjugate() if kind == "stokes" else q_loc.conjugate()
        d = base / abs(base)
        return d if (d.real * ref.real + d.imag * ref.imag) >= 0 else -d

    def w_of(zz: complex, w_ref: complex) -> complex:
        """sqrt(zz - tp) continued against a reference value."""
        w = cmath.sqrt(zz - tp)
        return -w if abs(w - w_ref) > abs(w + w_ref) else w

    def action_inc(z_a: complex, z_b: complex, q_ref: complex):
        """int sqrt(V) dz over one step, Gauss-5, substituting w^2 = z - tp
        near the turning point where sqrt(V) has the root-type behavior."""
        q_run = q_ref
        inc = 0j
        if min(abs(z_a - tp), abs(z_b - tp)) < 0.5:
            w_a = w_of(z_a, cmath.sqrt(z_b - tp))
            w_b = w_of(z_b, w_a)
            dw = w_b - w_a
            for xg, wg in zip(_G5_X, _G5_W):
                w_i = w_a + dw * xg
                z_i = tp + w_i * w_i
                q_run = _tracked_sqrt(z_i, p, q_run)
                inc += wg * 2.0 * w_i * q_run
            return dw * inc, q_run
        dz_ab = z_b - z_a
        for xg, wg in zip(_G5_X, _G5_W):
            q_run = _tracked_sqrt(z_a + dz_ab * xg, p, q_run)
            inc += wg * q_run
        return dz_ab * inc, q_run

    d_prev = direction
    s_init, _ = action_inc(tp, z, q)
    verts = [tp, z]
    actions = [0j, s_init]
    sqvs = [0j, q]
    s_total = _START_OFFSET
    terminal = "truncated"
    stall = 0

    while s_total < max_len:
        dist_tp = min(min(abs(z - w) for w in others.values()), abs(z - tp))
        step = max(_STEP_FLOOR, min(_STEP_CAP, 0.1 * dist_tp))
        d1 = field(q, d_prev)
        z_mid = z + step * d1
        q_mid = _tracked_sqrt(z_mid, p, q)
        d2 = field(q_mid, d1)
        z_new = z + step * 0.5 * (d1 + d2)
        q_new = _tracked_sqrt(z_new, p, q)
        inc, _ = action_inc(z, z_new, q)
        s_new = actions[-1] + inc
        # one Newton re-projection transverse to the line
        g = s_new.real if kind == "stokes" else s_new.imag
        if abs(q_new) > 1e-12:
            if kind == "stokes":
                delta = -g * q_new.conjugate() / abs(q_new) ** 2
            else:
                delta = g * (1j * q_new).conjugate() / abs(q_new) ** 2
            if abs(delta) > 0.5 * step:
                delta *= 0.5 * step / abs(delta)
            z_proj = z_new + delta
            s_new = s_new + q_new * delta
            q_new = _tracked_sqrt(z_proj, p, q_new)
            z_new = z_proj
        moved = abs(z_new - z)
        if moved < 0.25 * _STEP_FLOOR:
            stall += 1
            if stall > 50:
                raise StagnationError(f"tracer stalled near {z}")
        else:
            stall = 0
        s_total += moved
        d_prev = (z_new - z) / moved if moved > 0 else d_prev
        z, q = z_new, q_new
        verts.append(z)
        actions.append(s_new)
        sqvs.append(q)

        hit = None
        for lbl, w in others.items():
            if abs(z - w) < _TP_HIT_RADIUS:
                hit = lbl
                break
        if hit is not None:
            terminal = hit
            # snap the endpoint onto the turning point and close the action
            inc_end = (2.0 / 3.0) * q * (others[hit] - z)
            verts[-1] = others[hit]
            actions[-1] = actions[-1] + inc_end
            sqvs[-1] = 0j
            break
        if abs(z) > escape_radius:
            ang = cmath.phase(z) % (2.0 * math.pi)
            # asymptotic directions: pi/10 + 2k pi/5 for stokes lines,
            # rotated by -pi/5 for anti-stokes lines
            offset = math.pi / 10.0 if kind == "stokes" else -math.pi / 10.0
            terminal = int(round((ang - offset) / (2.0 * math.pi / 5.0))) % 5
            break

    return StokesLine(kind=kind, origin=origin_label,
                      polyline=ComplexPath.from_points(verts), terminal=terminal,
                      actions=np.asarray(actions), sqrtv=np.asarray(sqvs),
                      initial_direction=direction)


def _in_sector(z: complex, lo: float, hi: float) -> bool:
    ang = cmath.phase(z)
    for shift in (-2.0 * math.pi, 0.0, 2.0 * math.pi):
        if lo < ang + shift < hi:
            return True
    return False


# exponential-decay sectors of the recessive solution at both real infinities
_SECTOR_PLUS = (-3.0 * math.pi / 10.0, math.pi / 10.0)
_SECTOR_MINUS = (9.0 * math.pi / 10.0, 13.0 * math.pi / 10.0)


def _select_arm(candidates, sector):
    """Pick the anti-Stokes arm with real positive growing action heading
    into the requested decay sector."""
    best = None
    for ln in candidates:
        acts = ln.actions[1:]
        if len(acts) < 4:
            continue
        re = acts.real
        if re[-1] <= 0 or np.max(np.abs(acts.imag)) > 1e-6 * (1.0 + ln.arc_length):
            continue
        if not _in_sector(ln.polyline.end, *sector):
            continue
        best = ln if best is None or ln.actions[-1].real > best.actions[-1].real else best
    return best


def _truncate_arm(line: StokesLine, threshold: float, x_max: float):
    """Clip an arm where the real action passes the threshold (or at |z| =
    x_max when no amplitude threshold applies), interpolating the final
    vertex onto the exact crossing. Returns (vertices, actions)."""
    verts = np.asarray(line.polyline.vertices)
    acts = line.actions
    n = len(verts)
    stop = n
    frac = None
    for i in range(1, n):
        if threshold > 0 and acts[i].real >= threshold:
            stop = i + 1
            lo, hi = acts[i - 1].real, acts[i].real
            frac = 0.0 if hi == lo else (threshold - lo) / (hi - lo)
            break
        if abs(verts[i]) > x_max:
            stop = i + 1
            lo, hi = abs(verts[i - 1]), abs(verts[i])
            frac = 0.0 if hi == lo else (x_max - lo) / (hi - lo)
            break
    stop = max(stop, 3)
    v = verts[:stop].copy()
    a = acts[:stop].copy()
    if frac is not None and stop >= 2:
        v[-1] = v[-2] + (v[-1] - v[-2]) * frac
        a[-1] = a[-2] + (a[-1] - a[-2]) * frac
    return v, a


def build_diagram(p: ModelParams, x_max: float = 10.0, *, eps_trunc: float = 1e-18,
                  chart: BranchChart = None, max_len: float = None) -> StokesDiagram:
    """Trace all Stokes lines plus the two contour arms and assemble the
    integration contour."""
    chart = chart or BranchChart(p)
    tps = chart.tps
    escape = max(_ESCAPE_RADIUS, x_max)
    max_len = max_len or (4.0 * escape)
    tp_of = {"plus": tps.x_plus, "minus": tps.x_minus, "i": tps.x_i}

    lines = []
    for lbl, tp in tp_of.items():
        for d in stokes_directions(p, tp, "stokes"):
            lines.append(trace_line(lbl, d, "stokes", p, max_len=max_len,
                                    chart=chart, escape_radius=escape))

    ell_f = None
    for ln in lines:
        if ln.origin == "minus" and ln.terminal == "plus":
            ell_f = ln
            break
    if ell_f is None:
        for ln in lines:
            if ln.origin == "plus" and ln.terminal == "minus":
                ell_f = StokesLine(kind="stokes", origin="minus",
                                   polyline=ln.polyline.reversed(),
                                   terminal="plus",
                                   actions=ln.actions[::-1] - ln.actions[-1],
                                   sqrtv=ln.sqrtv[::-1],
                                   initial_direction=-ln.initial_direction)
                break
    if ell_f is None:
        raise TopologyError("no bounded line joining the two low turning points")

    ell_i = None
    for ln in lines:
        if ln.origin == "i" and ln.terminal == 1:
            ell_i = ln
            break
    if ell_i is None:
        raise TopologyError("no line from the imaginary-axis zero toward D_1")

    arms_p = [trace_line("plus", d, "anti_stokes", p, max_len=max_len,
                         chart=chart, escape_radius=escape)
              for d in stokes_directions(p, tps.x_plus, "anti_stokes")]
    arms_m = [trace_line("minus", d, "anti_stokes", p, max_len=max_len,
                         chart=chart, escape_radius=escape)
              for d in stokes_directions(p, tps.x_minus, "anti_stokes")]
    arm_plus = _select_arm(arms_p, _SECTOR_PLUS)
    arm_minus = _select_arm(arms_m, _SECTOR_MINUS)
    if arm_plus is None or arm_minus is None:
        raise TopologyError("missing outward anti-Stokes arm")

    h_re = p.h.real if isinstance(p.h, complex) else float(p.h)
    threshold = math.log(1.0 / eps_trunc) * h_re if h_re > 0 else 0.0
    vp, ap = _truncate_arm(arm_plus, threshold, x_max)
    vm, am = _truncate_arm(arm_minus, threshold, x_max)

    # chain: far end of the minus arm -> x_minus -> ell_f -> x_plus -> out
    pts = list(vm[::-1])
    for z in ell_f.polyline.vertices:
        if abs(z - pts[-1]) > 1e-14:
            pts.append(z)
    for z in vp:
        if abs(z - pts[-1]) > 1e-14:
            pts.append(z)
    contour = ComplexPath.from_points(pts)

    diagram = StokesDiagram(
        params=p, lines=lines, ell_f=ell_f, ell_i=ell_i,
        ell_tilde_plus=arm_plus, ell_tilde_minus=arm_minus,
        contour_L=contour, eps_trunc=eps_trunc, tps=tps)
    diagram.arm_plus_trunc = (vp, ap)
    diagram.arm_minus_trunc = (vm, am)
    return diagram
