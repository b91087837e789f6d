"""Instability indices and the asymptotic validation chain.

kappa_n = |u_n|^2 / |<u_n, conj u_n>| is assembled from an eigenfunction
record: the numerator integral is benign, the self-pairing denominator
cancels to ~exp(-1.81 n) of the integrand scale and is computed twice,
on the real line (compensated, dual-rule) and along the bent contour
through the low turning points where the cancellation is absent. The
contour route doubles as the per-record error probe: the deformation
identity makes any disagreement a measured error, not a model guess.

The growth fit always includes th -1/4 log n prefactor term; the
coefficient of the alpha n^{1/5} correction is only identifiable jointly
across two alpha series at matched n (n^{1/5} is nearly collinear with a
constant over desk-scale windows).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .model import BranchChart, BranchedRoot, ModelParams, action_integral, potential
from .numkit import ComplexPath, DDSum, KahanSum, airy_ai
from .numkit.fastode import posterior_quadratures
from .eigensolver import EigenRecord, sample_on_contour, ShootingConfig
from .stokes import StokesDiagram, build_diagram
from .semiclassics import cached_constants

__all__ = [
    "InstabilityRecord", "GrowthFit", "InstabilityError", "DenominatorBelowNoise",
    "kappa", "growth_fit", "denominator_constancy", "wkb_validate",
    "airy_connection_check", "compute_kappa_series",
]

# double-precision index ceiling: the pairing-to-norm ratio is about
# exp(-1.814 n); past n = 12 it drops under the compensated-quadrature
# noise floor. The double-double accumulator raises the SUM ceiling; the
# sample noise itself then dominates, which the error budget reports.
N_MAX_DOUBLE = 12
N_MAX_DD = 20


class InstabilityError(RuntimeError):
    pass


class DenominatorBelowNoise(InstabilityError):
    """Self-pairing is indistinguishable from quadrature noise at this n."""


@dataclass
class InstabilityRecord:
    n: int
    alpha: float
    lam: complex
    norm_sq: float               # |u_n|^2, physical normalization
    self_pairing: complex        # <u_n, conj u_n> = int u_n^2 dx
    kappa: float
    kappa_contour: float
    log_kappa: float
    quadrature_error: float      # relative, on the self-pairing
    junction_mismatch: float = 0.0
    h: float = 0.0
    precision: str = "double"

    def to_dict(self):
        return {
            "n": self.n, "alpha": self.alpha,
            "lambda": [self.lam.real, self.lam.imag],
            "norm_sq": self.norm_sq,
            "self_pairing": [self.self_pairing.real, self.self_pairing.imag],
            "kappa": self.kappa, "kappa_contour": self.kappa_contour,
            "log_kappa": self.log_kappa, "quad_err": self.quadrature_error,
        }


def _dd_posterior_pairing(sol, coeff, sigma_ref: float) -> complex:
    """Posterior pairing with double-double panel accumulation."""
    pos = sol.positions
    vals = sol.values
    ders = sol.derivatives
    sig = sol.logscales
    acc = DDSum()
    gx, gw = np.polynomial.legendre.leggauss(6)
    gx = 0.5 * (gx + 1.0)
    gw = 0.5 * gw
    for i in range(len(pos) - 1):
        dz = pos[i + 1] - pos[i]
        if dz == 0:
            continue
        sl = math.exp(sig[i] - sigma_ref)
        sr = math.exp(sig[i + 1] - sigma_ref)
        w0 = vals[i] * sl
        w1 = vals[i + 1] * sr
        d0 = ders[i] * dz * sl
        d1 = ders[i + 1] * dz * sr
        q0 = coeff(pos[i])
        q1 = coeff(pos[i + 1])
        s0 = dz * dz * q0 * w0
        s1 = dz * dz * q1 * w1
        a0, a1, a2 = w0, d0, 0.5 * s0
        r0 = w1 - a0 - a1 - a2
        r1 = d1 - a1 - 2.0 * a2
        r2 = s1 - 2.0 * a2
        a3 = 10.0 * r0 - 4.0 * r1 + 0.5 * r2
        a4 = -15.0 * r0 + 7.0 * r1 - r2
        a5 = 6.0 * r0 - 3.0 * r1 + 0.5 * r2
        panel = 0j
        for x, w in zip(gx, gw):
            wq = a0 + x * (a1 + x * (a2 + x * (a3 + x * (a4 + x * a5))))
            panel += w * wq * wq
        acc.add(panel * dz)
    return acc.value


def kappa(rec: EigenRecord, *, diagram: StokesDiagram = None,
          precision: str = "double", contour_tol: float = None) -> InstabilityRecord:
    """Instability index of one eigenfunction record.

    The denominator is accepted only when its combined error estimate
    stays below 10 percent; otherwise DenominatorBelowNoise is raised
    (raise the precision switch or lower n).
    """
    n_cap = N_MAX_DOUBLE if precision == "double" else N_MAX_DD
    if rec.n > n_cap:
        raise DenominatorBelowNoise(
            f"n={rec.n} beyond the {precision} precision ceiling {n_cap}")
    if rec.samples_real is None:
        raise InstabilityError("record carries no samples (light solve)")

    p = ModelParams(rec.alpha, rec.h)
    if diagram is None:
        diagram = build_diagram(p, x_max=rec.config.x_max)
    cont = sample_on_contour(rec, diagram.contour_L, tol=contour_tol)

    pair_real = rec.pairing_solver
    floor = 5e-16 * rec.norm_sq_solver
    if precision == "dd":
        from .eigensolver import _record_coeff
        coeff = _record_coeff(rec)
        sol = getattr(rec, "full_samples", rec.samples_real)
        pair_real = _dd_posterior_pairing(sol, coeff, rec.sigma_ref)
        floor = 1e-28 * rec.norm_sq_solver
    pair_cont = cont.pairing_solver
    homotopy_gap = abs(pair_real - pair_cont)
    # the contour route has no deep cancellation: its own two rules bound
    # its error, and the deformation identity turns the real-vs-contour
    # gap into a measured bound for the real-line value
    err_cont = (abs(cont.pairing_solver - cont.pairing_posterior)
                + 1e-15 * abs(pair_cont))
    err_abs = homotopy_gap + err_cont + floor
    if abs(pair_real) < 100.0 * floor:
        raise DenominatorBelowNoise(
            f"denominator {abs(pair_real):.2e} under 100x the rounding floor "
            f"{floor:.2e} at n={rec.n}")
    rel_err = err_abs / abs(pair_real)
    if err_abs > 0.1 * abs(pair_real):
        raise DenominatorBelowNoise(
            f"denominator error {rel_err:.1%} exceeds the 10% guard at n={rec.n}")

    kap = rec.norm_sq_solver / abs(pair_real)
    kap_cont = rec.norm_sq_solver / abs(pair_cont)
    # physical normalization u_n(x) = psi_1(h^{2/5} x): both integrals gain
    # h^{-2/5}; the anchored frame factor exp(2 anchor + 2 sigma_ref)
    log_frame = 2.0 * (rec.anchor_log.real + rec.sigma_ref) - 0.4 * math.log(rec.h)
    norm_sq = math.exp(log_frame + math.log(rec.norm_sq_solver))
    phase = cmath.exp(2j * rec.anchor_log.imag)
    self_pairing = math.exp(log_frame) * phase * pair_real
    return InstabilityRecord(
        n=rec.n, alpha=rec.alpha, lam=complex(rec.lam), norm_sq=norm_sq,
        self_pairing=self_pairing, kappa=kap, kappa_contour=kap_cont,
        log_kappa=math.log(kap), quadrature_error=rel_err,
        junction_mismatch=cont.junction_mismatch, h=rec.h, precision=precision)


def compute_kappa_series(alpha: float, n_min: int, n_max: int,
                         cfg: ShootingConfig = None, *,
                         precision: str = "double"):
    """Solve, continue, and assemble instability records for an index range."""
    from .eigensolver import solve_eigenvalue
    cfg = cfg or ShootingConfig()
    out = []
    for n in range(n_min, n_max + 1):
        rec = solve_eigenvalue(n, alpha, cfg)
        out.append(kappa(rec, precision=precision))
    return out


@dataclass
class GrowthFit:
    alpha: float                # nan for a joint two-alpha fit
    n_range: tuple
    slope: float
    alpha_coeff: float
    offset: float               # log K_alpha (or the first alpha's offset)
    residual_rms: float
    rate_sequence: list = field(default_factory=list)    # (1/n) log kappa_n
    cauchy_differences: list = field(default_factory=list)

    def to_dict(self):
        return {"alpha": self.alpha, "n_range": list(self.n_range),
                "slope": self.slope, "alpha_coeff": self.alpha_coeff,
                "offset": self.offset, "residual_rms": self.residual_rms}


def growth_fit(records, *, fit_alpha: bool = False) -> GrowthFit:
    """Least squares for log kappa_n = slope n - (1/4) log n
    + alpha_coeff alpha n^{1/5} + offset_alpha.

    With a single alpha series the alpha term is absorbed into the offset
    (fit_alpha then raises: the design matrix is rank-deficient at desk
    scale). With two alpha series and fit_alpha=True the slope is shared,
    offsets are per alpha, and alpha_coeff is identified from the matched
    differences.
    """
    records = sorted(records, key=lambda r: (r.alpha, r.n))
    if len(records) < 5:
        raise InstabilityError("need at least 5 records to fit")
    ns = np.array([r.n for r in records], dtype=float)
    if len(np.unique([(r.alpha, r.n) for r in records], axis=0)) != len(records):
        raise InstabilityError("duplicate (alpha, n) records")
    alphas = np.array([r.alpha for r in records])
    y = np.array([r.log_kappa for r in records]) + 0.25 * np.log(ns)
    uniq = np.unique(alphas)
    if not fit_alpha:
        if len(uniq) != 1:
            raise InstabilityError("mixed alpha series require fit_alpha=True")
        X = np.column_stack([ns, np.ones_like(ns)])
        sol, res, rank, _ = np.linalg.lstsq(X, y, rcond=None)
        if rank < 2:
            raise InstabilityError("rank-deficient design matrix")
        slope, offset = sol
        alpha_coeff = 0.0
    else:
        if len(uniq) != 2:
            raise InstabilityError("alpha-term fit needs exactly two alpha series")
        cols = [ns, alphas * ns ** 0.2]
        for a in uniq:
            cols.append((alphas == a).astype(float))
        X = np.column_stack(cols)
        sol, res, rank, _ = np.linalg.lstsq(X, y, rcond=None)
        if rank < X.shape[1]:
            raise InstabilityError("rank-deficient design matrix "
                                   "(n range too short to separate terms)")
        slope, alpha_coeff = sol[0], sol[1]
        offset = sol[2]
    fitted = X @ sol
    rms = float(np.sqrt(np.mean((fitted - y) ** 2)))

    by_alpha = {}
    for r in records:
        by_alpha.setdefault(r.alpha, []).append(r)
    rate_seq = [(r.n, r.log_kappa / r.n) for r in records]
    cauchy = []
    for a, rs in by_alpha.items():
        rs = sorted(rs, key=lambda r: r.n)
        for r0, r1 in zip(rs[:-1], rs[1:]):
            if r1.n == r0.n + 1:
                cauchy.append((r0.n, r1.log_kappa - r0.log_kappa))
    return GrowthFit(
        alpha=float(uniq[0]) if len(uniq) == 1 else math.nan,
        n_range=(int(ns.min()), int(ns.max())), slope=float(slope),
        alpha_coeff=float(alpha_coeff), offset=float(offset),
        residual_rms=rms, rate_sequence=rate_seq, cauchy_differences=cauchy)


@dataclass
class DenominatorSeries:
    alpha: float
    ns: list
    values: list                 # complex d_n = int_L psi_1^2
    rel_changes: list            # |d_{n+1} - d_n| / |d_n|

    @property
    def bounded_ratio(self) -> float:
        mags = [abs(v) for v in self.values]
        return max(mags) / min(mags)


def denominator_constancy(eigenrecords, *, check: bool = True,
                          diagram_cache: dict = None) -> DenominatorSeries:
    """The contour self-pairing of the anchored kernel solution, as a
    sequence in n: the deformation identity plus the connection constants
    make it approach a constant.

    The records must share one alpha and be consecutive in n. With check
    enabled, the relative changes must decrease for n >= 6 and the last
    change must be at most 0.2.
    """
    recs = sorted(eigenrecords, key=lambda r: r.n)
    alphas = {r.alpha for r in recs}
    if len(alphas) != 1:
        raise InstabilityError("denominator series needs a single alpha")
    alpha = alphas.pop()
    ds = []
    ns = []
    for rec in recs:
        p = ModelParams(rec.alpha, rec.h)
        diagram = None
        if diagram_cache is not None:
            diagram = diagram_cache.get((rec.alpha, rec.h))
        if diagram is None:
            diagram = build_diagram(p, x_max=rec.config.x_max)
            if diagram_cache is not None:
                diagram_cache[(rec.alpha, rec.h)] = diagram
        cont = sample_on_contour(rec, diagram.contour_L)
        d = (cmath.exp(2.0 * (rec.anchor_log + rec.sigma_ref))
             * cont.pairing_solver)
        if d == 0:
            raise InstabilityError(f"vanishing contour pairing at n={rec.n}")
        ds.append(d)
        ns.append(rec.n)
    rel = [abs(d1 - d0) / abs(d0) for d0, d1 in zip(ds[:-1], ds[1:])]
    series = DenominatorSeries(alpha=alpha, ns=ns, values=ds, rel_changes=rel)
    if check:
        idx6 = [i for i, n in enumerate(ns[:-1]) if n >= 6]
        tail = [rel[i] for i in idx6]
        if any(b > a * 1.0 for a, b in zip(tail[:-1], tail[1:])):
            raise InstabilityError(
                f"contour pairing changes not decreasing past n=6: {tail}")
        if tail and tail[-1] > 0.2:
            raise InstabilityError(
                f"final relative change {tail[-1]:.3f} above 0.2")
    return series


@dataclass
class WkbReport:
    n: int
    alpha: float
    window: tuple
    deviations: list             # (x, |psi/psi_wkb - 1|)
    sup_deviation: float
    amplitude_variation: float = math.nan


def wkb_validate(rec: EigenRecord, window=(2.5, 6.0)) -> WkbReport:
    """Sup over a real-axis window of |psi_numeric / psi_wkb - 1| with the
    leading WKB form anchored at the right low turning point.

    The real axis keeps distance ~0.4 from the bounded-line tube and ~1
    from the vertical-line tube, so any real window qualifies.
    """
    lo, hi = window
    if not (0 <= lo < hi <= rec.config.x_max):
        raise InstabilityError("window must sit inside [0, x_max]")
    p = ModelParams(rec.alpha, rec.h)
    chart = BranchChart(p)
    br = BranchedRoot(chart)
    sol = rec.samples_real
    mask = (sol.positions.real >= lo) & (sol.positions.real <= hi)
    idx = np.nonzero(mask)[0]
    if len(idx) > 40:
        idx = idx[np.linspace(0, len(idx) - 1, 40).astype(int)]
    devs = []
    h = rec.h
    for i in idx:
        x = sol.positions[i]
        s_act = action_integral(p, chart.tps.x_plus, x, 1e-12, chart=chart,
                                sqrt_from=True)
        v = potential(x, p)
        theta = br.theta_at_point(x)
        log_wkb = -(0.25 * (math.log(abs(v)) + 1j * theta)) - s_act / h
        log_psi = rec.psi1_log_at(int(i))
        ratio = cmath.exp(log_psi - log_wkb)
        devs.append((float(x.real), abs(ratio - 1.0)))
    sup = max(d for _, d in devs) if devs else math.nan
    return WkbReport(n=rec.n, alpha=rec.alpha, window=(lo, hi),
                     deviations=devs, sup_deviation=sup)


def far_field_amplitude_variation(rec: EigenRecord, window=(8.0, 12.0),
                                  n_samples: int = 12) -> float:
    """Relative variation of |psi| |x|^{3/4} exp(Re S / h) over the window
    (the far-field amplitude law: should be flat to o(1))."""
    p = ModelParams(rec.alpha, rec.h)
    chart = BranchChart(p)
    sol = rec.samples_real
    mask = (sol.positions.real >= window[0]) & (sol.positions.real <= window[1])
    idx = np.nonzero(mask)[0]
    if len(idx) < 3:
        raise InstabilityError("no samples in the far-field window")
    idx = idx[np.linspace(0, len(idx) - 1, min(n_samples, len(idx))).astype(int)]
    vals = []
    for i in idx:
        x = sol.positions[i]
        s_act = action_integral(p, chart.tps.x_plus, x, 1e-12, chart=chart,
                                sqrt_from=True)
        log_psi = rec.psi1_log_at(int(i))
        log_amp = log_psi.real + 0.75 * math.log(abs(x)) + s_act.real / rec.h
        vals.append(log_amp)
    spread = max(vals) - min(vals)
    return float(math.expm1(spread))


@dataclass
class AiryConnectionReport:
    n: int
    alpha: float
    ratio_plus: complex          # measured psi / airy-model, plus arm
    ratio_minus: complex
    target_modulus: float        # 2 sqrt(pi) h^{-1/6}
    modulus_error_plus: float
    modulus_error_minus: float
    phase_difference: float      # arg(ratio_minus / ratio_plus)
    zeta_window: tuple = (1.0, 4.0)


def _arm_action_at(arm, z: complex):
    """Action at a point on (or very near) a traced arm: the stored vertex
    action plus a first-order tracked-root correction."""
    verts = np.asarray(arm.polyline.vertices)
    j = int(np.argmin(np.abs(verts - z)))
    return arm.actions[j] + arm.sqrtv[j] * (z - verts[j])


def _arm_ratio(rec: EigenRecord, cont_samples, arm, tp: complex,
               p: ModelParams, br: BranchedRoot, zeta_window) -> complex:
    """Median-modulus ratio psi / [(zeta/V)^{1/4} Ai(zeta/h^{2/3})] over
    arm points with zeta/h^{2/3} inside the window."""
    h = rec.h
    zmin, zmax = zeta_window
    s_lo = (2.0 / 3.0) * (zmin * h ** (2.0 / 3.0)) ** 1.5
    s_hi = (2.0 / 3.0) * (zmax * h ** (2.0 / 3.0)) ** 1.5
    positions = cont_samples.positions
    side = 1.0 if tp.real > 0 else -1.0
    ratios = []
    for i in range(len(positions)):
        z = positions[i]
        if (z - tp).real * side <= 0.0 or abs(z - tp) > 1.5:
            continue
        s_act = _arm_action_at(arm, z)
        if abs(s_act.imag) > 1e-3:
            continue
        if not (s_lo <= s_act.real <= s_hi):
            continue
        zeta = (1.5 * s_act.real) ** (2.0 / 3.0)
        t = zeta / h ** (2.0 / 3.0)
        v = potential(z, p)
        theta = br.theta_at_point(z)
        quarter = abs(v) ** 0.25 * cmath.exp(0.25j * theta)
        model = (zeta ** 0.25 / quarter) * airy_ai(t)
        log_psi = (rec.anchor_log + cont_samples.logscales[i]
                   + cmath.log(cont_samples.values[i]))
        ratios.append(cmath.exp(log_psi - cmath.log(model)))
        if len(ratios) >= 24:
            break
    if len(ratios) < 3:
        raise InstabilityError("too few usable arm points in the zeta window")
    order = sorted(range(len(ratios)), key=lambda i: abs(ratios[i]))
    return ratios[order[len(ratios) // 2]]


def airy_connection_check(rec: EigenRecord, *, diagram: StokesDiagram = None,
                          zeta_window=(1.0, 4.0)) -> AiryConnectionReport:
    """Measure the turning-point connection constants on both outward arms.

    On each arm the eigenfunction divided by the local Airy model
    (zeta/V)^{1/4} Ai(zeta/h^{2/3}) must have modulus 2 sqrt(pi) h^{-1/6}
    (to O(h)); the two arms differ in phase by the parity factor of the
    quantization index.
    """
    p = ModelParams(rec.alpha, rec.h)
    if diagram is None:
        diagram = build_diagram(p, x_max=rec.config.x_max)
    cont = sample_on_contour(rec, diagram.contour_L)
    chart = BranchChart(p)
    br = BranchedRoot(chart)
    r_plus = _arm_ratio(rec, cont.samples, diagram.ell_tilde_plus,
                        chart.tps.x_plus, p, br, zeta_window)
    r_minus = _arm_ratio(rec, cont.samples, diagram.ell_tilde_minus,
                         chart.tps.x_minus, p, br, zeta_window)
    target = 2.0 * math.sqrt(math.pi) * rec.h ** (-1.0 / 6.0)
    return AiryConnectionReport(
        n=rec.n, alpha=rec.alpha, ratio_plus=r_plus, ratio_minus=r_minus,
        target_modulus=target,
        modulus_error_plus=abs(abs(r_plus) / target - 1.0),
        modulus_error_minus=abs(abs(r_minus) / target - 1.0),
        phase_difference=cmath.phase(r_minus / r_plus),
        zeta_window=tuple(zeta_window))
