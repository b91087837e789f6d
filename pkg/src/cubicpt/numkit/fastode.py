"""Compiled DOP853 propagation for cubic-polynomial coefficients.

One kernel serves every production integration: real-line shooting,
variational sensitivities for the eigenvalue Newton iteration, and
analytic continuation along complex contours. The kernel renormalizes
the state whenever it grows past 1e100, accumulating the discarded
factor as a per-sample log scale, and co-integrates int w^2 dz and
int |w|^2 |dz| with the same stage values (an 8th-order quadrature).

Posterior quadratures from the stored samples use quintic Hermite
pieces: endpoint second derivatives are exact via w'' = Q w, so each
interval carries six interpolation conditions.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from . import _dop853_tableau as tb
from .ode import OdeSolution, PolyCoeff, StepSizeUnderflow, OdeError
from .paths import ComplexPath

_A = np.ascontiguousarray(tb.A)
_B = np.ascontiguousarray(tb.B)
_C = np.ascontiguousarray(tb.C)
_E3 = np.ascontiguousarray(tb.E3)
_E5 = np.ascontiguousarray(tb.E5)

STATUS_OK = 0
STATUS_BUFFER = 2
STATUS_UNDERFLOW = 3
STATUS_NONFINITE = 4

_RENORM_LIMIT = 1e100


@njit(cache=True, nogil=True)
def _poly(c0, c1, c2, c3, z):
    return c0 + z * (c1 + z * (c2 + z * c3))


@njit(cache=True, nogil=True)
def _kernel(z0s, dzs, pc, psc, vc, vsc, with_var,
            w0, dwdz0, v0, dvdz0, rtol, max_out):
    pos = np.empty(max_out, np.complex128)
    ws = np.empty(max_out, np.complex128)
    dws = np.empty(max_out, np.complex128)
    vs = np.empty(max_out, np.complex128)
    dvs = np.empty(max_out, np.complex128)
    sig = np.empty(max_out, np.float64)

    kw = np.empty(13, np.complex128)
    ku = np.empty(13, np.complex128)
    kv = np.empty(13, np.complex128)
    kuv = np.empty(13, np.complex128)
    wstage = np.empty(12, np.complex128)

    w = w0
    v = v0
    dwdz = dwdz0
    dvdz = dvdz0
    sigma = 0.0
    J = 0.0 + 0.0j
    Jabs = 0.0
    err_acc = 0.0
    nfev = 0

    pos[0] = z0s[0]
    ws[0] = w0
    dws[0] = dwdz0
    vs[0] = v0
    dvs[0] = dvdz0
    sig[0] = 0.0
    nout = 1

    ncomp = 4 if with_var else 2

    for iseg in range(z0s.shape[0]):
        z0 = z0s[iseg]
        dz = dzs[iseg]
        dz2 = dz * dz
        u = dwdz * dz
        uv = dvdz * dz
        t = 0.0
        q0 = abs(psc * _poly(pc[0], pc[1], pc[2], pc[3], z0)) * abs(dz2)
        h = 0.05 / (np.sqrt(q0) + 1.0)
        if h > 1.0:
            h = 1.0
        rejected = False
        while t < 1.0:
            if h > 1.0 - t:
                h = 1.0 - t
            if h < 1e-13:
                return (STATUS_UNDERFLOW, nout, pos, ws, dws, vs, dvs, sig,
                        J, Jabs, sigma, err_acc, nfev)
            # 12 stages + final evaluation
            for s in range(12):
                wsg = w
                usg = u
                vsg = v
                uvsg = uv
                for j in range(s):
                    a = _A[s, j]
                    if a != 0.0:
                        wsg += h * a * kw[j]
                        usg += h * a * ku[j]
                        if with_var:
                            vsg += h * a * kv[j]
                            uvsg += h * a * kuv[j]
                z = z0 + dz * (t + _C[s] * h)
                q = psc * _poly(pc[0], pc[1], pc[2], pc[3], z)
                kw[s] = usg
                ku[s] = dz2 * q * wsg
                if with_var:
                    qp = vsc * _poly(vc[0], vc[1], vc[2], vc[3], z)
                    kv[s] = uvsg
                    kuv[s] = dz2 * (q * vsg + qp * wsg)
                else:
                    kv[s] = 0.0
                    kuv[s] = 0.0
                wstage[s] = wsg
            w_new = w
            u_new = u
            v_new = v
            uv_new = uv
            for s in range(12):
                b = _B[s]
                if b != 0.0:
                    w_new += h * b * kw[s]
                    u_new += h * b * ku[s]
                    if with_var:
                        v_new += h * b * kv[s]
                        uv_new += h * b * kuv[s]
            z = z0 + dz * (t + h)
            q = psc * _poly(pc[0], pc[1], pc[2], pc[3], z)
            kw[12] = u_new
            ku[12] = dz2 * q * w_new
            if with_var:
                qp = vsc * _poly(vc[0], vc[1], vc[2], vc[3], z)
                kv[12] = uv_new
                kuv[12] = dz2 * (q * v_new + qp * w_new)
            else:
                kv[12] = 0.0
                kuv[12] = 0.0
            nfev += 13

            if not (np.isfinite(w_new.real) and np.isfinite(w_new.imag)
                    and np.isfinite(u_new.real) and np.isfinite(u_new.imag)):
                return (STATUS_NONFINITE, nout, pos, ws, dws, vs, dvs, sig,
                        J, Jabs, sigma, err_acc, nfev)

            statemax = max(abs(w), abs(u))
            if with_var:
                statemax = max(statemax, abs(v), abs(uv))
            e5 = 0.0
            e3 = 0.0
            for comp in range(ncomp):
                if comp == 0:
                    kk = kw
                    y_old = w
                    y_new_c = w_new
                elif comp == 1:
                    kk = ku
                    y_old = u
                    y_new_c = u_new
                elif comp == 2:
                    kk = kv
                    y_old = v
                    y_new_c = v_new
                else:
                    kk = kuv
                    y_old = uv
                    y_new_c = uv_new
                s5 = 0.0 + 0.0j
                s3 = 0.0 + 0.0j
                for s in range(13):
                    s5 += _E5[s] * kk[s]
                    s3 += _E3[s] * kk[s]
                sc = rtol * (max(abs(y_old), abs(y_new_c)) + statemax)
                if sc == 0.0:
                    sc = 1e-300
                e5 += abs(h * s5 / sc) ** 2
                e3 += abs(h * s3 / sc) ** 2
            if e5 == 0.0:
                err_norm = 0.0
            else:
                err_norm = abs(h) * e5 / np.sqrt((e5 + 0.01 * e3) * ncomp)

            if err_norm < 1.0:
                # accepted: co-integrated quadratures from the stage values
                jw = 0.0 + 0.0j
                ja = 0.0
                for s in range(12):
                    b = _B[s]
                    if b != 0.0:
                        jw += b * wstage[s] * wstage[s]
                        ja += b * (wstage[s].real ** 2 + wstage[s].imag ** 2)
                J += h * jw * dz
                Jabs += h * ja * abs(dz)
                t += h
                w = w_new
                u = u_new
                v = v_new
                uv = uv_new
                err_acc += err_norm * rtol
                m = max(abs(w), abs(u))
                if with_var:
                    m = max(m, abs(v), abs(uv))
                if m > _RENORM_LIMIT:
                    w /= m
                    u /= m
                    v /= m
                    uv /= m
                    J /= m * m
                    Jabs /= m * m
                    sigma += np.log(m)
                if nout >= max_out:
                    return (STATUS_BUFFER, nout, pos, ws, dws, vs, dvs, sig,
                            J, Jabs, sigma, err_acc, nfev)
                pos[nout] = z0 + dz * t
                ws[nout] = w
                dws[nout] = u / dz
                vs[nout] = v
                dvs[nout] = uv / dz
                sig[nout] = sigma
                nout += 1
                if err_norm == 0.0:
                    fac = 10.0
                else:
                    fac = 0.9 * err_norm ** (-0.125)
                    if fac > 10.0:
                        fac = 10.0
                if rejected:
                    fac = min(fac, 1.0)
                rejected = False
                h *= fac
            else:
                fac = 0.9 * err_norm ** (-0.125)
                if fac < 0.2:
                    fac = 0.2
                h *= fac
                rejected = True
        dwdz = u / dz
        dvdz = uv / dz
    return (STATUS_OK, nout, pos, ws, dws, vs, dvs, sig,
            J, Jabs, sigma, err_acc, nfev)


@njit(cache=True, nogil=True)
def _posterior_quad(pos, ws, dws, sig, pc, psc, sig_ref):
    """Composite quadratures of w^2 dz and |w|^2 |dz| from stored samples.

    Returns (I2_quintic, I2_cubic, Iabs) in exp(2 sig_ref) units. The
    quintic rule interpolates w with endpoint (value, slope, curvature)
    data, curvature exact through w'' = Q w; the cubic rule interpolates
    g = w^2 from (g, g') and serves as an independent error probe.
    """
    # 6-point Gauss-Legendre nodes/weights on [0, 1]
    gx = np.array([0.033765242898423986, 0.16939530676686776, 0.3806904069584015,
                   0.6193095930415985, 0.8306046932331322, 0.966234757101576])
    gw = np.array([0.08566224618958517, 0.18038078652406936, 0.23395696728634552,
                   0.23395696728634552, 0.18038078652406936, 0.08566224618958517])
    i2_q = 0.0 + 0.0j
    i2_c = 0.0 + 0.0j
    iabs = 0.0
    c2q = 0.0 + 0.0j
    c2c = 0.0 + 0.0j
    cab = 0.0
    for i in range(pos.shape[0] - 1):
        dz = pos[i + 1] - pos[i]
        if dz == 0:
            continue
        scale_l = np.exp(sig[i] - sig_ref)
        scale_r = np.exp(sig[i + 1] - sig_ref)
        w0 = ws[i] * scale_l
        w1 = ws[i + 1] * scale_r
        d0 = dws[i] * dz * scale_l          # dw/dtau at tau=0
        d1 = dws[i + 1] * dz * scale_r
        q0 = psc * _poly(pc[0], pc[1], pc[2], pc[3], pos[i])
        q1 = psc * _poly(pc[0], pc[1], pc[2], pc[3], pos[i + 1])
        s0 = dz * dz * q0 * w0              # d2w/dtau2
        s1 = dz * dz * q1 * w1
        # quintic Hermite coefficients in tau
        a0 = w0
        a1 = d0
        a2 = 0.5 * s0
        r0 = w1 - a0 - a1 - a2
        r1 = d1 - a1 - 2.0 * a2
        r2 = s1 - 2.0 * a2
        a3 = 10.0 * r0 - 4.0 * r1 + 0.5 * r2
        a4 = -15.0 * r0 + 7.0 * r1 - r2
        a5 = 6.0 * r0 - 3.0 * r1 + 0.5 * r2
        acc2 = 0.0 + 0.0j
        acca = 0.0
        for g in range(6):
            x = gx[g]
            wq = a0 + x * (a1 + x * (a2 + x * (a3 + x * (a4 + x * a5))))
            acc2 += gw[g] * wq * wq
            acca += gw[g] * (wq.real ** 2 + wq.imag ** 2)
        # compensated accumulation (Kahan) of panel contributions
        y = acc2 * dz - c2q
        tt = i2_q + y
        c2q = (tt - i2_q) - y
        i2_q = tt
        ya = acca * abs(dz) - cab
        ta = iabs + ya
        cab = (ta - iabs) - ya
        iabs = ta
        # cubic Hermite on g = w^2, g' = 2 w w'
        g0 = w0 * w0
        g1 = w1 * w1
        gp0 = 2.0 * w0 * d0
        gp1 = 2.0 * w1 * d1
        panel = 0.5 * (g0 + g1) + (gp0 - gp1) / 12.0
        yc = panel * dz - c2c
        tc = i2_c + yc
        c2c = (tc - i2_c) - yc
        i2_c = tc
    return i2_q, i2_c, iabs


def integrate_poly_path(coeff: PolyCoeff, path: ComplexPath, init_value, init_derivative,
                        tol: float, *, renormalize: bool = True,
                        var_coeff: PolyCoeff | None = None,
                        init_var: complex = 0j, init_var_derivative: complex = 0j,
                        max_out: int = 600_000) -> OdeSolution:
    """Drive the compiled kernel over a polyline and wrap the result."""
    segs = path.segments
    z0s = np.ascontiguousarray(segs[:, 0])
    dzs = np.ascontiguousarray(segs[:, 1])
    pc = np.array([coeff.c0, coeff.c1, coeff.c2, coeff.c3], dtype=complex)
    if var_coeff is None:
        vc = np.zeros(4, dtype=complex)
        vsc = 0j
        with_var = False
    else:
        vc = np.array([var_coeff.c0, var_coeff.c1, var_coeff.c2, var_coeff.c3],
                      dtype=complex)
        vsc = complex(var_coeff.scale)
        with_var = True

    attempt_out = max_out
    for _ in range(3):
        (status, nout, pos, ws, dws, vs, dvs, sig, J, Jabs, sigma, err_acc,
         nfev) = _kernel(z0s, dzs, pc, complex(coeff.scale), vc, vsc, with_var,
                         complex(init_value), complex(init_derivative),
                         complex(init_var), complex(init_var_derivative),
                         float(tol), attempt_out)
        if status != STATUS_BUFFER:
            break
        attempt_out *= 4
    if status == STATUS_UNDERFLOW:
        raise StepSizeUnderflow("step control collapsed on polyline")
    if status == STATUS_NONFINITE:
        raise OdeError("non-finite state during integration")
    if status == STATUS_BUFFER:
        raise OdeError("sample buffer exhausted after retries")

    sol = OdeSolution(
        path=path,
        positions=pos[:nout].copy(), values=ws[:nout].copy(),
        derivatives=dws[:nout].copy(), logscales=sig[:nout].copy(),
        tolerance=tol, achieved_error_estimate=err_acc,
        pairing_integral=J, abs2_integral=Jabs, logscale_end=sigma, nfev=nfev)
    if with_var:
        sol.var_values = vs[:nout].copy()
        sol.var_derivatives = dvs[:nout].copy()
    return sol


def posterior_quadratures(sol: OdeSolution, coeff: PolyCoeff, sig_ref: float):
    """Posterior sample-based quadratures of the solution, two rules."""
    pc = np.array([coeff.c0, coeff.c1, coeff.c2, coeff.c3], dtype=complex)
    return _posterior_quad(sol.positions, sol.values, sol.derivatives,
                           sol.logscales, pc, complex(coeff.scale), sig_ref)
