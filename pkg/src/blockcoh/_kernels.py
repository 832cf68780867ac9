"""Hot numerical kernels shared by the measures, the free-state search and
the dynamics integrator.

Every function here works on plain numpy arrays so that it compiles under
numba when available. With ``BLOCKCOH_DISABLE_NUMBA=1`` the same source runs
as ordinary numpy code; only :func:`eigh`, :func:`mm` and :func:`from_spectrum` swap to LAPACK/BLAS
backed versions, which are faster than interpreted loops.

Block-structured inputs are always given in a *block frame*: a basis in which
each projector is a contiguous diagonal block. ``sizes`` lists the block
dimensions in order.
"""

import numpy as np

from ._accel import NUMBA_ENABLED, jit


def _jacobi_eigh(a_in):
    """Cyclic complex Jacobi eigensolver for a Hermitian matrix.

    Returns eigenvalues in descending order and the matching unitary of
    eigenvectors (columns).
    """
    n = a_in.shape[0]
    a = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            a[i, j] = 0.5 * (a_in[i, j] + np.conj(a_in[j, i]))
    v = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        v[i, i] = 1.0
    for _sweep in range(100):
        off = 0.0
        diag = 0.0
        for p in range(n):
            diag += a[p, p].real ** 2
            for q in range(p + 1, n):
                off += a[p, q].real ** 2 + a[p, q].imag ** 2
        if off <= 1e-34 * (diag + 2.0 * off) or off < 1e-300:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                g = np.sqrt(apq.real**2 + apq.imag**2)
                if g < 1e-300:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                if g < 1e-18 * (abs(app) + abs(aqq)):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                e = apq / g
                ec = np.conj(e)
                theta = (aqq - app) / (2.0 * g)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # rotation J = [[c, s], [-conj(e) s, conj(e) c]] on (p, q)
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - ec * s * akq
                    a[k, q] = s * akp + ec * c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - e * s * aqk
                    a[q, k] = s * apk + e * c * aqk
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - ec * s * vkq
                    v[k, q] = s * vkp + ec * c * vkq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i].real
    order = np.argsort(-w)
    ws = np.empty(n)
    vs = np.empty((n, n), dtype=np.complex128)
    for j in range(n):
        ws[j] = w[order[j]]
        for i in range(n):
            vs[i, j] = v[i, order[j]]
    return ws, vs


def _loop_mm(a, b):
    n = a.shape[0]
    m = b.shape[1]
    kk = a.shape[1]
    out = np.zeros((n, m), dtype=np.complex128)
    for i in range(n):
        for k in range(kk):
            aik = a[i, k]
            if aik == 0.0:
                continue
            for j in range(m):
                out[i, j] += aik * b[k, j]
    return out


def _loop_from_spectrum(v, f):
    """Return ``V diag(f) V^dagger`` for real weights ``f``."""
    n = v.shape[0]
    out = np.zeros((n, n), dtype=np.complex128)
    for k in range(f.shape[0]):
        fk = f[k]
        if fk == 0.0:
            continue
        for i in range(n):
            vik = v[i, k] * fk
            for j in range(n):
                out[i, j] += vik * np.conj(v[j, k])
    return out


if NUMBA_ENABLED:
    eigh = jit(_jacobi_eigh)
    mm = jit(_loop_mm)
    from_spectrum = jit(_loop_from_spectrum)
else:

    def eigh(m):
        """Eigen-decomposition via LAPACK, eigenvalues sorted descending."""
        w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
        return w[::-1].copy(), v[:, ::-1].copy()

    def mm(a, b):
        return a @ b

    def from_spectrum(v, f):
        return (v * f) @ v.conj().T


@jit
def dagger(a):
    return np.ascontiguousarray(a.conj().T)


@jit
def psd_power(m, p, cut):
    """Spectral power of a PSD matrix; eigenvalues <= ``cut`` map to 0."""
    w, v = eigh(m)
    f = np.zeros(w.shape[0])
    for k in range(w.shape[0]):
        if w[k] > cut:
            f[k] = w[k] ** p
    return from_spectrum(v, f)


@jit
def support_cut(w0):
    """Default support tolerance for a spectrum whose largest value is ``w0``."""
    return 1e-12 * max(1.0, abs(w0))


@jit
def offsets_of(sizes):
    off = np.zeros(sizes.shape[0] + 1, dtype=np.int64)
    for k in range(sizes.shape[0]):
        off[k + 1] = off[k] + sizes[k]
    return off


@jit
def block_power(m, sizes, p, cut):
    """Blockwise spectral power of a block-diagonal PSD matrix."""
    n = m.shape[0]
    off = offsets_of(sizes)
    out = np.zeros((n, n), dtype=np.complex128)
    for k in range(sizes.shape[0]):
        a = off[k]
        b = off[k + 1]
        if b - a == 1:
            x = m[a, a].real
            if x > cut:
                out[a, a] = x**p
            continue
        sub = np.ascontiguousarray(m[a:b, a:b])
        out[a:b, a:b] = psd_power(sub, p, cut)
    return out


@jit
def renyi_block_sum(rho_b, sizes, alpha):
    """Return ``sum_k Tr[(P_k rho^alpha P_k)^(1/alpha)]`` in the block frame."""
    w, v = eigh(rho_b)
    cut = support_cut(w[0])
    f = np.zeros(w.shape[0])
    for k in range(w.shape[0]):
        if w[k] > cut:
            f[k] = w[k] ** alpha
    ra = from_spectrum(v, f)
    off = offsets_of(sizes)
    inv = 1.0 / alpha
    total = 0.0
    for k in range(sizes.shape[0]):
        a = off[k]
        b = off[k + 1]
        if b - a == 1:
            x = ra[a, a].real
            if x > 0.0:
                total += x**inv
            continue
        wb, _ = eigh(np.ascontiguousarray(ra[a:b, a:b]))
        for j in range(wb.shape[0]):
            if wb[j] > 0.0:
                total += wb[j] ** inv
    return total


@jit
def renyi_block_sum_grid(rho_b, sizes, alphas):
    """Vectorized :func:`renyi_block_sum` over many alpha values."""
    w, v = eigh(rho_b)
    cut = support_cut(w[0])
    off = offsets_of(sizes)
    out = np.empty(alphas.shape[0])
    f = np.zeros(w.shape[0])
    for i in range(alphas.shape[0]):
        alpha = alphas[i]
        for k in range(w.shape[0]):
            f[k] = w[k] ** alpha if w[k] > cut else 0.0
        ra = from_spectrum(v, f)
        inv = 1.0 / alpha
        total = 0.0
        for k in range(sizes.shape[0]):
            a = off[k]
            b = off[k + 1]
            if b - a == 1:
                x = ra[a, a].real
                if x > 0.0:
                    total += x**inv
                continue
            wb, _ = eigh(np.ascontiguousarray(ra[a:b, a:b]))
            for j in range(wb.shape[0]):
                if wb[j] > 0.0:
                    total += wb[j] ** inv
        out[i] = total
    return out


# ---------------------------------------------------------------------------
# Free-state parametrization: per-block lower-triangular complex factors.
# Block k of size r uses r*r reals: r diagonal entries, then (re, im) pairs of
# the strictly lower triangle in row-major order.
# ---------------------------------------------------------------------------


@jit
def n_params(sizes):
    total = 0
    for k in range(sizes.shape[0]):
        total += sizes[k] * sizes[k]
    return total


@jit
def cone_from_params(x, sizes):
    """Return the unnormalized block-diagonal ``B = (+)_k L_k L_k^dagger``."""
    off = offsets_of(sizes)
    n = off[-1]
    out = np.zeros((n, n), dtype=np.complex128)
    pos = 0
    for k in range(sizes.shape[0]):
        r = sizes[k]
        a = off[k]
        lo = np.zeros((r, r), dtype=np.complex128)
        for i in range(r):
            lo[i, i] = x[pos]
            pos += 1
        for i in range(r):
            for j in range(i):
                lo[i, j] = x[pos] + 1j * x[pos + 1]
                pos += 2
        for i in range(r):
            for j in range(i + 1):
                s = 0.0 + 0.0j
                for m in range(j + 1):
                    s += lo[i, m] * np.conj(lo[j, m])
                out[a + i, a + j] = s
                out[a + j, a + i] = np.conj(s)
    return out


@jit
def state_from_params(x, sizes):
    """Return ``(sigma, trace)`` with sigma normalized; trace 0 means invalid."""
    b = cone_from_params(x, sizes)
    tr = 0.0
    for i in range(b.shape[0]):
        tr += b[i, i].real
    if not (tr > 1e-300) or not np.isfinite(tr):
        return b, 0.0
    return b / tr, tr


BIG = 1e300


@jit
def loss_alpha_z(x, sizes, mats, pars):
    """Negative of ``Tr[(sigma^a R sigma^a)^z]`` with ``R = rho^(alpha/z)``."""
    sigma, tr = state_from_params(x, sizes)
    if tr == 0.0:
        return BIG
    s = block_power(sigma, sizes, pars[0], 1e-15)
    m = mm(mm(s, mats[0]), s)
    w, _ = eigh(m)
    q = 0.0
    for k in range(w.shape[0]):
        if w[k] > 0.0:
            q += w[k] ** pars[1]
    return -q


@jit
def loss_tsallis_n(x, sizes, mats, pars):
    """Negative of ``Tr(rho #_t sigma)`` given ``rho`` and ``rho^(-1/2)``."""
    sigma, tr = state_from_params(x, sizes)
    if tr == 0.0:
        return BIG
    k = mm(mm(mats[1], sigma), mats[1])
    kt = psd_power(k, pars[0], 0.0)
    rho = mats[0]
    n = rho.shape[0]
    val = 0.0
    for i in range(n):
        for j in range(n):
            val += (rho[j, i] * kt[i, j]).real
    return -val


@jit
def loss_dmax(x, sizes, mats, pars):
    """Largest eigenvalue of ``sigma^(-1/2) rho sigma^(-1/2)`` (regularized)."""
    sigma, tr = state_from_params(x, sizes)
    if tr == 0.0:
        return BIG
    for i in range(sigma.shape[0]):
        sigma[i, i] += 1e-12
    s = block_power(sigma, sizes, -0.5, 0.0)
    m = mm(mm(s, mats[0]), s)
    w, _ = eigh(m)
    return w[0]


@jit
def loss_trace_dist(x, sizes, mats, pars):
    """Trace norm ``||rho - B||`` for an unnormalized block-diagonal ``B``."""
    b = cone_from_params(x, sizes)
    w, _ = eigh(mats[0] - b)
    return np.sum(np.abs(w))


@jit
def loss_rob_penalty(x, sizes, mats, pars):
    """``Tr B`` plus a quadratic penalty on the negative part of ``B - rho``."""
    b = cone_from_params(x, sizes)
    tr = 0.0
    for i in range(b.shape[0]):
        tr += b[i, i].real
    w, _ = eigh(b - mats[0])
    pen = 0.0
    for k in range(w.shape[0]):
        if w[k] < 0.0:
            pen += w[k] * w[k]
    return tr + pars[0] * pen


@jit
def nelder_mead(fun, x0, step, max_iter, ftol, sizes, mats, pars):
    """Adaptive Nelder-Mead minimization of ``fun(x, sizes, mats, pars)``.

    Stops when the spread of simplex values drops below ``ftol`` or after
    ``max_iter`` iterations. Returns ``(x_best, f_best, iterations, converged)``.
    """
    n = x0.shape[0]
    rho_ = 1.0
    chi = 1.0 + 2.0 / n
    psi = 0.75 - 1.0 / (2.0 * n)
    sig = 1.0 - 1.0 / n
    sim = np.empty((n + 1, n))
    fs = np.empty(n + 1)
    sim[0] = x0
    fs[0] = fun(x0, sizes, mats, pars)
    for i in range(n):
        y = x0.copy()
        if y[i] != 0.0:
            y[i] = y[i] + step * (1.0 if y[i] > 0 else -1.0) * max(abs(y[i]), 0.1)
        else:
            y[i] = step * 0.1
        sim[i + 1] = y
        fs[i + 1] = fun(y, sizes, mats, pars)
    it = 0
    converged = False
    while it < max_iter:
        order = np.argsort(fs)
        sim = sim[order]
        fs = fs[order]
        spread = 0.0
        for i in range(1, n + 1):
            d = abs(fs[i] - fs[0])
            spread = max(spread, d)
        if spread <= ftol:
            converged = True
            break
        it += 1
        xbar = np.zeros(n)
        for i in range(n):
            xbar += sim[i]
        xbar /= n
        xr = (1.0 + rho_) * xbar - rho_ * sim[n]
        fr = fun(xr, sizes, mats, pars)
        shrink = False
        if fr < fs[0]:
            xe = (1.0 + rho_ * chi) * xbar - rho_ * chi * sim[n]
            fe = fun(xe, sizes, mats, pars)
            if fe < fr:
                sim[n] = xe
                fs[n] = fe
            else:
                sim[n] = xr
                fs[n] = fr
        elif fr < fs[n - 1]:
            sim[n] = xr
            fs[n] = fr
        elif fr < fs[n]:
            xc = (1.0 + psi * rho_) * xbar - psi * rho_ * sim[n]
            fc = fun(xc, sizes, mats, pars)
            if fc <= fr:
                sim[n] = xc
                fs[n] = fc
            else:
                shrink = True
        else:
            xcc = (1.0 - psi) * xbar + psi * sim[n]
            fcc = fun(xcc, sizes, mats, pars)
            if fcc < fs[n]:
                sim[n] = xcc
                fs[n] = fcc
            else:
                shrink = True
        if shrink:
            for i in range(1, n + 1):
                sim[i] = sim[0] + sig * (sim[i] - sim[0])
                fs[i] = fun(sim[i], sizes, mats, pars)
    best = np.argmin(fs)
    return sim[best].copy(), fs[best], it, converged


# ---------------------------------------------------------------------------
# Radical-pair master equation in the S-T basis (|S>, |T+1>, |T0>, |T-1>).
# ---------------------------------------------------------------------------

SCENARIO_A = 0
SCENARIO_B = 1
SCENARIO_C = 2
SCENARIO_R_ONLY = 3

_ST_SIZES = np.array([1, 3], dtype=np.int64)


@jit
def st_coherence(rho, alpha):
    """``C_{alpha,1}`` of a normalized 4x4 S-T basis state."""
    return 1.0 - renyi_block_sum(rho, _ST_SIZES, alpha)


@jit
def p_eff_kernel(rho, alpha):
    tr = 0.0
    for i in range(4):
        tr += rho[i, i].real
    c = st_coherence(rho / tr, alpha)
    p = c / (1.0 - 2.0 ** (1.0 - 1.0 / alpha))
    if p < 0.0:
        p = 0.0
    elif p > 1.0:
        p = 1.0
    return p


@jit
def master_rhs_kernel(rho, h, ks, kt, alpha, scenario, floor):
    """Right-hand side of the master equation plus the two yield rates.

    Returns ``(drho, rate_S, rate_T, frozen)``.
    """
    out = np.zeros((4, 4), dtype=np.complex128)
    tr = 0.0
    for i in range(4):
        tr += rho[i, i].real
    pop_s = rho[0, 0].real
    pop_t = tr - pop_s
    recomb = scenario == SCENARIO_C or scenario == SCENARIO_R_ONLY
    if recomb and tr < floor:
        return out, 0.0, 0.0, True
    if scenario != SCENARIO_R_ONLY:
        hr = mm(h, rho)
        rh = mm(rho, h)
        for i in range(4):
            for j in range(4):
                out[i, j] = -1j * (hr[i, j] - rh[i, j])
    if scenario == SCENARIO_B or scenario == SCENARIO_C:
        kd = 0.5 * (ks + kt)
        for j in range(1, 4):
            out[0, j] -= kd * rho[0, j]
            out[j, 0] -= kd * rho[j, 0]
    rate_s = 0.0
    rate_t = 0.0
    if recomb:
        p = p_eff_kernel(rho, alpha)
        rate_s = ks * pop_s
        rate_t = kt * pop_t
        g = (rate_s + rate_t) / tr
        out[0, 0] -= (1.0 - p) * ks * rho[0, 0] + g * p * rho[0, 0]
        for i in range(1, 4):
            for j in range(1, 4):
                out[i, j] -= (1.0 - p) * kt * rho[i, j] + g * p * rho[i, j]
        for j in range(1, 4):
            out[0, j] -= g * rho[0, j]
            out[j, 0] -= g * rho[j, 0]
    return out, rate_s, rate_t, False


@jit
def integrate_kernel(rho0, h, ks, kt, alpha, scenario, dt, n_steps, stride, floor, growth_tol):
    """Fixed-step RK4 of the master equation with yield bookkeeping.

    The yields are integrated as extra state components, so the RK4 update
    keeps ``Tr(rho) + Y_S + Y_T`` invariant up to rounding.

    Returns ``(table, n_rows, status, frozen_any)`` where the table columns are
    t, trace, popS, popT, coherence, p_eff, rS, rT, YS, YT and status is 0 on
    success or 2 when the trace grew by more than ``growth_tol`` or fell below
    ``-growth_tol`` (an overshooting step can drive it negative).
    """
    n_rows_max = n_steps // stride + 2
    table = np.zeros((n_rows_max, 10))
    rho = rho0.copy()
    tr0 = 0.0
    for i in range(4):
        tr0 += rho[i, i].real
    ys = 0.0
    yt = 0.0
    row = 0
    status = 0
    frozen_any = False
    for step in range(n_steps + 1):
        if step % stride == 0 or step == n_steps:
            tr = 0.0
            for i in range(4):
                tr += rho[i, i].real
            table[row, 0] = step * dt
            table[row, 1] = tr
            table[row, 2] = rho[0, 0].real
            table[row, 3] = tr - rho[0, 0].real
            if tr > floor:
                table[row, 4] = st_coherence(rho / tr, alpha)
                table[row, 5] = p_eff_kernel(rho, alpha)
            table[row, 6] = ks * rho[0, 0].real
            table[row, 7] = kt * (tr - rho[0, 0].real)
            table[row, 8] = ys
            table[row, 9] = yt
            row += 1
        if step == n_steps:
            break
        k1, s1, t1, f1 = master_rhs_kernel(rho, h, ks, kt, alpha, scenario, floor)
        k2, s2, t2, f2 = master_rhs_kernel(rho + 0.5 * dt * k1, h, ks, kt, alpha, scenario, floor)
        k3, s3, t3, f3 = master_rhs_kernel(rho + 0.5 * dt * k2, h, ks, kt, alpha, scenario, floor)
        k4, s4, t4, f4 = master_rhs_kernel(rho + dt * k3, h, ks, kt, alpha, scenario, floor)
        if f1 or f2 or f3 or f4:
            frozen_any = True
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + dagger(rho))
        ys += (dt / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4)
        yt += (dt / 6.0) * (t1 + 2.0 * t2 + 2.0 * t3 + t4)
        tr = 0.0
        for i in range(4):
            tr += rho[i, i].real
        if not np.isfinite(tr) or tr > tr0 + growth_tol or tr < -growth_tol:
            status = 2
            break
    return table, row, status, frozen_any
