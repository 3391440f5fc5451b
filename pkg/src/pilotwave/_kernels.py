"""Hot numeric kernels: exhaustive min-plus scans, RK4 advection, CIC deposits.

Two interchangeable backends live here.  The default compiles the loops
with numba's @njit; setting the environment variable PILOTWAVE_NUMBA=0
(or numba failing to import) selects hand-vectorized numpy fallbacks.
Both backends evaluate identical floating-point expressions per element,
so their outputs are bitwise equal; tests/test_kernels.py asserts this
and benchmarks/bench_kernels.py times the two paths against each other.

All kernels are sequential by design: results never depend on a thread
count, which keeps the byte-for-byte reproducibility contract cheap.
"""
from __future__ import annotations

import os

import numpy as np

FLAG_ACTIVE = 0
FLAG_EXITED = 1
FLAG_UNDEFINED = 2

_env = os.environ.get("PILOTWAVE_NUMBA", "auto").lower()
if _env in ("0", "false", "off", "numpy"):
    NUMBA_ENABLED = False
else:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - mirror always has numba
        NUMBA_ENABLED = False


def active_backend() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# two-point action kernels (potential kind codes: 0 free, 1 linear, 2 harmonic)
# ---------------------------------------------------------------------------

def _el_pair_1d(x, x0, t, m, kind, k1, omega):
    if kind == 2:
        s = np.sin(omega * t)
        return (m * omega / (2.0 * s)) * ((x * x + x0 * x0) * np.cos(omega * t)
                                          - 2.0 * x * x0)
    base = m * (x - x0) * (x - x0) / (2.0 * t)
    if kind == 1:
        base = base + k1 * (x + x0) * t / 2.0 - k1 * k1 * t * t * t / (24.0 * m)
    return base


def _el_pair_2d(x, y, x0, y0, t, m, kind, kx, ky, omega):
    if kind == 2:
        s = np.sin(omega * t)
        return (m * omega / (2.0 * s)) * (
            (x * x + y * y + x0 * x0 + y0 * y0) * np.cos(omega * t)
            - 2.0 * (x * x0 + y * y0))
    base = m * ((x - x0) * (x - x0) + (y - y0) * (y - y0)) / (2.0 * t)
    if kind == 1:
        base = (base + (kx * (x + x0) + ky * (y + y0)) * t / 2.0
                - (kx * kx + ky * ky) * t * t * t / (24.0 * m))
    return base


def _hopf_lax_1d_loop(s0, x, t, m, kind, k1, omega):
    n = x.shape[0]
    out = np.empty(n)
    for i in range(n):
        best = np.inf
        xi = x[i]
        for j in range(n):
            if s0[j] == np.inf:
                continue
            v = s0[j] + _el_pair_1d(xi, x[j], t, m, kind, k1, omega)
            if v < best:
                best = v
        out[i] = best
    return out


def _hopf_lax_1d_numpy(s0, x, t, m, kind, k1, omega, block=256):
    n = x.shape[0]
    finite = s0 != np.inf
    xs = x[finite]
    ss = s0[finite]
    out = np.empty(n)
    for lo in range(0, n, block):
        xi = x[lo:lo + block, None]
        vals = ss[None, :] + _el_pair_1d(xi, xs[None, :], t, m, kind, k1, omega)
        out[lo:lo + block] = np.min(vals, axis=1)
    return out


def _hopf_lax_2d_loop(s0, x, y, t, m, kind, kx, ky, omega):
    n = x.shape[0]
    out = np.empty(n)
    for i in range(n):
        best = np.inf
        xi = x[i]
        yi = y[i]
        for j in range(n):
            if s0[j] == np.inf:
                continue
            v = s0[j] + _el_pair_2d(xi, yi, x[j], y[j], t, m, kind, kx, ky, omega)
            if v < best:
                best = v
        out[i] = best
    return out


def _hopf_lax_2d_numpy(s0, x, y, t, m, kind, kx, ky, omega, block=128):
    n = x.shape[0]
    finite = s0 != np.inf
    xs, ys, ss = x[finite], y[finite], s0[finite]
    out = np.empty(n)
    for lo in range(0, n, block):
        vals = ss[None, :] + _el_pair_2d(x[lo:lo + block, None], y[lo:lo + block, None],
                                         xs[None, :], ys[None, :], t, m,
                                         kind, kx, ky, omega)
        out[lo:lo + block] = np.min(vals, axis=1)
    return out


def _hopf_lax_march_loop(s0, x, v, m, total_t, steps):
    # Lax-Oleinik time marching for tabulated potentials; the one-step
    # kernel uses the trapezoid of V along the straight segment (2nd order)
    n = x.shape[0]
    dt = total_t / steps
    cur = s0.copy()
    nxt = np.empty(n)
    for _ in range(steps):
        for i in range(n):
            best = np.inf
            xi = x[i]
            vi = v[i]
            for j in range(n):
                if cur[j] == np.inf:
                    continue
                d = xi - x[j]
                val = cur[j] + m * d * d / (2.0 * dt) + 0.5 * (vi + v[j]) * dt
                if val < best:
                    best = val
            nxt[i] = best
        tmp = cur
        cur = nxt
        nxt = tmp
    return cur.copy()


def _hopf_lax_march_numpy(s0, x, v, m, total_t, steps, block=256):
    n = x.shape[0]
    dt = total_t / steps
    cur = s0.copy()
    for _ in range(steps):
        finite = cur != np.inf
        xs, vs, ss = x[finite], v[finite], cur[finite]
        nxt = np.empty(n)
        for lo in range(0, n, block):
            d = x[lo:lo + block, None] - xs[None, :]
            vals = (ss[None, :] + m * d * d / (2.0 * dt)
                    + 0.5 * (v[lo:lo + block, None] + vs[None, :]) * dt)
            nxt[lo:lo + block] = np.min(vals, axis=1)
        cur = nxt
    return cur


def _hopf_lax_1d_refine_loop(s0, x, t, m, kind, k1, omega):
    # parabolic continuation of the discrete argmin: fits the objective at
    # (j*-1, j*, j*+1) and takes the vertex value, removing the O(h^2)
    # node-offset sawtooth so residual checks see smooth second order
    n = x.shape[0]
    out = np.empty(n)
    for i in range(n):
        best = np.inf
        jstar = -1
        xi = x[i]
        for j in range(n):
            if s0[j] == np.inf:
                continue
            v = s0[j] + _el_pair_1d(xi, x[j], t, m, kind, k1, omega)
            if v < best:
                best = v
                jstar = j
        if 0 < jstar < n - 1 and s0[jstar - 1] != np.inf and s0[jstar + 1] != np.inf:
            fm = s0[jstar - 1] + _el_pair_1d(xi, x[jstar - 1], t, m, kind, k1, omega)
            fp = s0[jstar + 1] + _el_pair_1d(xi, x[jstar + 1], t, m, kind, k1, omega)
            curv = fp - 2.0 * best + fm
            if curv > 0.0:
                slope = 0.5 * (fp - fm)
                best = best - 0.5 * slope * slope / curv
        out[i] = best
    return out


def _hopf_lax_1d_refine_numpy(s0, x, t, m, kind, k1, omega, block=256):
    n = x.shape[0]
    finite = s0 != np.inf
    xs = x[finite]
    ss = s0[finite]
    nf = xs.shape[0]
    out = np.empty(n)
    for lo in range(0, n, block):
        xi = x[lo:lo + block, None]
        vals = ss[None, :] + _el_pair_1d(xi, xs[None, :], t, m, kind, k1, omega)
        jstar = np.argmin(vals, axis=1)
        rows = np.arange(vals.shape[0])
        best = vals[rows, jstar]
        interior = (jstar > 0) & (jstar < nf - 1)
        jm = np.clip(jstar - 1, 0, nf - 1)
        jp = np.clip(jstar + 1, 0, nf - 1)
        fm = vals[rows, jm]
        fp = vals[rows, jp]
        curv = fp - 2.0 * best + fm
        good = interior & (curv > 0.0)
        slope = 0.5 * (fp - fm)
        refined = best - 0.5 * slope * slope / np.where(good, curv, 1.0)
        out[lo:lo + block] = np.where(good, refined, best)
    return out


def _monotone_hopf_lax_1d_loop(s0, x, t, m, kind, k1, omega):
    # valid for convex finite S0 with the quadratic (free/linear) kernel:
    # the argmin is then nondecreasing in the output node
    n = x.shape[0]
    out = np.empty(n)
    j = 0
    for i in range(n):
        xi = x[i]
        best = s0[j] + _el_pair_1d(xi, x[j], t, m, kind, k1, omega)
        while j + 1 < n:
            cand = s0[j + 1] + _el_pair_1d(xi, x[j + 1], t, m, kind, k1, omega)
            if cand <= best:
                best = cand
                j += 1
            else:
                break
        out[i] = best
    return out


# ---------------------------------------------------------------------------
# RK4 guidance advection between two stored snapshots
# ---------------------------------------------------------------------------

def _interp1(a, i, f):
    return a[i] * (1.0 - f) + a[i + 1] * f


def _bilinear(a, ix, iy, fx, fy):
    return (a[ix, iy] * (1.0 - fx) * (1.0 - fy)
            + a[ix + 1, iy] * fx * (1.0 - fy)
            + a[ix, iy + 1] * (1.0 - fx) * fy
            + a[ix + 1, iy + 1] * fx * fy)


def _rk4_scalar_1d_loop(pos, flags, v0, vm, v1, r0, rm, r1,
                        lo, h, n, dt, floor):
    npart = pos.shape[0]
    ks = np.empty(4)
    for p in range(npart):
        if flags[p] != FLAG_ACTIVE:
            continue
        x = pos[p]
        xq = x
        ok = True
        for s in range(4):
            if s == 1 or s == 2:
                va, ra = vm, rm
            elif s == 0:
                va, ra = v0, r0
            else:
                va, ra = v1, r1
            u = (xq - lo) / h
            i = int(np.floor(u))
            if i < 0 or i >= n - 1:
                flags[p] = FLAG_EXITED
                ok = False
                break
            f = u - i
            rho = _interp1(ra, i, f)
            if rho < floor:
                flags[p] = FLAG_UNDEFINED
                ok = False
                break
            ks[s] = _interp1(va, i, f)
            if s == 0:
                xq = x + 0.5 * dt * ks[0]
            elif s == 1:
                xq = x + 0.5 * dt * ks[1]
            elif s == 2:
                xq = x + dt * ks[2]
        if ok:
            pos[p] = x + dt / 6.0 * (ks[0] + 2.0 * ks[1] + 2.0 * ks[2] + ks[3])
    return pos, flags


def _rk4_scalar_1d_numpy(pos, flags, v0, vm, v1, r0, rm, r1,
                         lo, h, n, dt, floor):
    x = pos.copy()
    ks = np.zeros((4, pos.shape[0]))
    xq = x.copy()
    ok = flags == FLAG_ACTIVE
    for s in range(4):
        va = (v0, vm, vm, v1)[s]
        ra = (r0, rm, rm, r1)[s]
        u = (xq - lo) / h
        i = np.floor(u).astype(np.int64)
        inside = (i >= 0) & (i < n - 1) & ok
        flags[ok & ~inside & (flags == FLAG_ACTIVE)] = FLAG_EXITED
        i_s = np.clip(i, 0, n - 2)
        f = u - i_s
        rho = ra[i_s] * (1.0 - f) + ra[i_s + 1] * f
        defined = rho >= floor
        flags[inside & ~defined & (flags == FLAG_ACTIVE)] = FLAG_UNDEFINED
        ok = inside & defined & ok
        ks[s] = np.where(ok, va[i_s] * (1.0 - f) + va[i_s + 1] * f, 0.0)
        if s == 0:
            xq = x + 0.5 * dt * ks[0]
        elif s == 1:
            xq = x + 0.5 * dt * ks[1]
        elif s == 2:
            xq = x + dt * ks[2]
    pos[ok] = (x + dt / 6.0 * (ks[0] + 2.0 * ks[1] + 2.0 * ks[2] + ks[3]))[ok]
    return pos, flags


def _bilinear_np(a, ix, iy, fx, fy):
    return (a[ix, iy] * (1.0 - fx) * (1.0 - fy)
            + a[ix + 1, iy] * fx * (1.0 - fy)
            + a[ix, iy + 1] * (1.0 - fx) * fy
            + a[ix + 1, iy + 1] * fx * fy)


def _rk4_scalar_2d_loop(pos, flags, vx0, vxm, vx1, vy0, vym, vy1,
                        r0, rm, r1, lox, hx, nx, loy, hy, ny, dt, floor):
    npart = pos.shape[0]
    kx = np.empty(4)
    ky = np.empty(4)
    for p in range(npart):
        if flags[p] != FLAG_ACTIVE:
            continue
        x = pos[p, 0]
        y = pos[p, 1]
        xq = x
        yq = y
        ok = True
        for s in range(4):
            if s == 1 or s == 2:
                vxa, vya, ra = vxm, vym, rm
            elif s == 0:
                vxa, vya, ra = vx0, vy0, r0
            else:
                vxa, vya, ra = vx1, vy1, r1
            ux = (xq - lox) / hx
            uy = (yq - loy) / hy
            ix = int(np.floor(ux))
            iy = int(np.floor(uy))
            if ix < 0 or ix >= nx - 1 or iy < 0 or iy >= ny - 1:
                flags[p] = FLAG_EXITED
                ok = False
                break
            fx = ux - ix
            fy = uy - iy
            rho = _bilinear(ra, ix, iy, fx, fy)
            if rho < floor:
                flags[p] = FLAG_UNDEFINED
                ok = False
                break
            kx[s] = _bilinear(vxa, ix, iy, fx, fy)
            ky[s] = _bilinear(vya, ix, iy, fx, fy)
            if s == 0:
                xq = x + 0.5 * dt * kx[0]
                yq = y + 0.5 * dt * ky[0]
            elif s == 1:
                xq = x + 0.5 * dt * kx[1]
                yq = y + 0.5 * dt * ky[1]
            elif s == 2:
                xq = x + dt * kx[2]
                yq = y + dt * ky[2]
        if ok:
            pos[p, 0] = x + dt / 6.0 * (kx[0] + 2.0 * kx[1] + 2.0 * kx[2] + kx[3])
            pos[p, 1] = y + dt / 6.0 * (ky[0] + 2.0 * ky[1] + 2.0 * ky[2] + ky[3])
    return pos, flags


def _rk4_scalar_2d_numpy(pos, flags, vx0, vxm, vx1, vy0, vym, vy1,
                         r0, rm, r1, lox, hx, nx, loy, hy, ny, dt, floor):
    x = pos[:, 0].copy()
    y = pos[:, 1].copy()
    kx = np.zeros((4, pos.shape[0]))
    ky = np.zeros((4, pos.shape[0]))
    xq = x.copy()
    yq = y.copy()
    ok = flags == FLAG_ACTIVE
    for s in range(4):
        vxa = (vx0, vxm, vxm, vx1)[s]
        vya = (vy0, vym, vym, vy1)[s]
        ra = (r0, rm, rm, r1)[s]
        ux = (xq - lox) / hx
        uy = (yq - loy) / hy
        ix = np.floor(ux).astype(np.int64)
        iy = np.floor(uy).astype(np.int64)
        inside = (ix >= 0) & (ix < nx - 1) & (iy >= 0) & (iy < ny - 1) & ok
        flags[ok & ~inside & (flags == FLAG_ACTIVE)] = FLAG_EXITED
        ixs = np.clip(ix, 0, nx - 2)
        iys = np.clip(iy, 0, ny - 2)
        fx = ux - ixs
        fy = uy - iys
        rho = _bilinear_np(ra, ixs, iys, fx, fy)
        defined = rho >= floor
        flags[inside & ~defined & (flags == FLAG_ACTIVE)] = FLAG_UNDEFINED
        ok = inside & defined & ok
        kx[s] = np.where(ok, _bilinear_np(vxa, ixs, iys, fx, fy), 0.0)
        ky[s] = np.where(ok, _bilinear_np(vya, ixs, iys, fx, fy), 0.0)
        if s == 0:
            xq = x + 0.5 * dt * kx[0]
            yq = y + 0.5 * dt * ky[0]
        elif s == 1:
            xq = x + 0.5 * dt * kx[1]
            yq = y + 0.5 * dt * ky[1]
        elif s == 2:
            xq = x + dt * kx[2]
            yq = y + dt * ky[2]
    pos[ok, 0] = (x + dt / 6.0 * (kx[0] + 2.0 * kx[1] + 2.0 * kx[2] + kx[3]))[ok]
    pos[ok, 1] = (y + dt / 6.0 * (ky[0] + 2.0 * ky[1] + 2.0 * ky[2] + ky[3]))[ok]
    return pos, flags


def _rk4_weighted_2d_loop(pos, flags, w,
                          jxp0, jxpm, jxp1, jxm0, jxmm, jxm1,
                          jzp0, jzpm, jzp1, jzm0, jzmm, jzm1,
                          rp0, rpm, rp1, rm0, rmm, rm1,
                          lox, hx, nx, loy, hy, ny, dt, floor):
    """Spinor guidance: v = (w j+ + (1-w) j-) / (w rho+ + (1-w) rho-)."""
    npart = pos.shape[0]
    kx = np.empty(4)
    ky = np.empty(4)
    for p in range(npart):
        if flags[p] != FLAG_ACTIVE:
            continue
        wp = w[p]
        wm = 1.0 - wp
        x = pos[p, 0]
        y = pos[p, 1]
        xq = x
        yq = y
        ok = True
        for s in range(4):
            if s == 1 or s == 2:
                jxpa, jxma, jzpa, jzma, rpa, rma = jxpm, jxmm, jzpm, jzmm, rpm, rmm
            elif s == 0:
                jxpa, jxma, jzpa, jzma, rpa, rma = jxp0, jxm0, jzp0, jzm0, rp0, rm0
            else:
                jxpa, jxma, jzpa, jzma, rpa, rma = jxp1, jxm1, jzp1, jzm1, rp1, rm1
            ux = (xq - lox) / hx
            uy = (yq - loy) / hy
            ix = int(np.floor(ux))
            iy = int(np.floor(uy))
            if ix < 0 or ix >= nx - 1 or iy < 0 or iy >= ny - 1:
                flags[p] = FLAG_EXITED
                ok = False
                break
            fx = ux - ix
            fy = uy - iy
            rho = (wp * _bilinear(rpa, ix, iy, fx, fy)
                   + wm * _bilinear(rma, ix, iy, fx, fy))
            if rho < floor:
                flags[p] = FLAG_UNDEFINED
                ok = False
                break
            kx[s] = (wp * _bilinear(jxpa, ix, iy, fx, fy)
                     + wm * _bilinear(jxma, ix, iy, fx, fy)) / rho
            ky[s] = (wp * _bilinear(jzpa, ix, iy, fx, fy)
                     + wm * _bilinear(jzma, ix, iy, fx, fy)) / rho
            if s == 0:
                xq = x + 0.5 * dt * kx[0]
                yq = y + 0.5 * dt * ky[0]
            elif s == 1:
                xq = x + 0.5 * dt * kx[1]
                yq = y + 0.5 * dt * ky[1]
            elif s == 2:
                xq = x + dt * kx[2]
                yq = y + dt * ky[2]
        if ok:
            pos[p, 0] = x + dt / 6.0 * (kx[0] + 2.0 * kx[1] + 2.0 * kx[2] + kx[3])
            pos[p, 1] = y + dt / 6.0 * (ky[0] + 2.0 * ky[1] + 2.0 * ky[2] + ky[3])
    return pos, flags


def _rk4_weighted_2d_numpy(pos, flags, w,
                           jxp0, jxpm, jxp1, jxm0, jxmm, jxm1,
                           jzp0, jzpm, jzp1, jzm0, jzmm, jzm1,
                           rp0, rpm, rp1, rm0, rmm, rm1,
                           lox, hx, nx, loy, hy, ny, dt, floor):
    x = pos[:, 0].copy()
    y = pos[:, 1].copy()
    wp = w
    wm = 1.0 - w
    kx = np.zeros((4, pos.shape[0]))
    ky = np.zeros((4, pos.shape[0]))
    xq = x.copy()
    yq = y.copy()
    ok = flags == FLAG_ACTIVE
    stage_fields = (
        (jxp0, jxm0, jzp0, jzm0, rp0, rm0),
        (jxpm, jxmm, jzpm, jzmm, rpm, rmm),
        (jxpm, jxmm, jzpm, jzmm, rpm, rmm),
        (jxp1, jxm1, jzp1, jzm1, rp1, rm1),
    )
    for s in range(4):
        jxpa, jxma, jzpa, jzma, rpa, rma = stage_fields[s]
        ux = (xq - lox) / hx
        uy = (yq - loy) / hy
        ix = np.floor(ux).astype(np.int64)
        iy = np.floor(uy).astype(np.int64)
        inside = (ix >= 0) & (ix < nx - 1) & (iy >= 0) & (iy < ny - 1) & ok
        flags[ok & ~inside & (flags == FLAG_ACTIVE)] = FLAG_EXITED
        ixs = np.clip(ix, 0, nx - 2)
        iys = np.clip(iy, 0, ny - 2)
        fx = ux - ixs
        fy = uy - iys
        rho = (wp * _bilinear_np(rpa, ixs, iys, fx, fy)
               + wm * _bilinear_np(rma, ixs, iys, fx, fy))
        defined = rho >= floor
        flags[inside & ~defined & (flags == FLAG_ACTIVE)] = FLAG_UNDEFINED
        ok = inside & defined & ok
        rho_safe = np.where(ok, rho, 1.0)
        kx[s] = np.where(ok, (wp * _bilinear_np(jxpa, ixs, iys, fx, fy)
                              + wm * _bilinear_np(jxma, ixs, iys, fx, fy)) / rho_safe,
                         0.0)
        ky[s] = np.where(ok, (wp * _bilinear_np(jzpa, ixs, iys, fx, fy)
                              + wm * _bilinear_np(jzma, ixs, iys, fx, fy)) / rho_safe,
                         0.0)
        if s == 0:
            xq = x + 0.5 * dt * kx[0]
            yq = y + 0.5 * dt * ky[0]
        elif s == 1:
            xq = x + 0.5 * dt * kx[1]
            yq = y + 0.5 * dt * ky[1]
        elif s == 2:
            xq = x + dt * kx[2]
            yq = y + dt * ky[2]
    pos[ok, 0] = (x + dt / 6.0 * (kx[0] + 2.0 * kx[1] + 2.0 * kx[2] + kx[3]))[ok]
    pos[ok, 1] = (y + dt / 6.0 * (ky[0] + 2.0 * ky[1] + 2.0 * ky[2] + ky[3]))[ok]
    return pos, flags


# ---------------------------------------------------------------------------
# cloud-in-cell (linear) mass deposition
# ---------------------------------------------------------------------------

def _deposit_cic_1d_loop(pos, w, lo, h, n):
    out = np.zeros(n)
    for p in range(pos.shape[0]):
        u = (pos[p] - lo) / h
        i = int(np.floor(u))
        if i < 0 or i >= n - 1:
            continue
        f = u - i
        out[i] += w[p] * (1.0 - f)
        out[i + 1] += w[p] * f
    return out


def _deposit_cic_1d_numpy(pos, w, lo, h, n):
    u = (pos - lo) / h
    i = np.floor(u).astype(np.int64)
    keep = (i >= 0) & (i < n - 1)
    i = i[keep]
    f = u[keep] - i
    ww = w[keep]
    out = np.zeros(n)
    # one unbuffered add in particle-interleaved order keeps the float
    # accumulation order identical to the loop backend (bitwise equal)
    idx = np.empty(2 * len(i), dtype=np.int64)
    val = np.empty(2 * len(i))
    idx[0::2], idx[1::2] = i, i + 1
    val[0::2], val[1::2] = ww * (1.0 - f), ww * f
    np.add.at(out, idx, val)
    return out


def _deposit_cic_2d_loop(pos, w, lox, hx, nx, loy, hy, ny):
    out = np.zeros((nx, ny))
    for p in range(pos.shape[0]):
        ux = (pos[p, 0] - lox) / hx
        uy = (pos[p, 1] - loy) / hy
        ix = int(np.floor(ux))
        iy = int(np.floor(uy))
        if ix < 0 or ix >= nx - 1 or iy < 0 or iy >= ny - 1:
            continue
        fx = ux - ix
        fy = uy - iy
        out[ix, iy] += w[p] * (1.0 - fx) * (1.0 - fy)
        out[ix + 1, iy] += w[p] * fx * (1.0 - fy)
        out[ix, iy + 1] += w[p] * (1.0 - fx) * fy
        out[ix + 1, iy + 1] += w[p] * fx * fy
    return out


def _deposit_cic_2d_numpy(pos, w, lox, hx, nx, loy, hy, ny):
    ux = (pos[:, 0] - lox) / hx
    uy = (pos[:, 1] - loy) / hy
    ix = np.floor(ux).astype(np.int64)
    iy = np.floor(uy).astype(np.int64)
    keep = (ix >= 0) & (ix < nx - 1) & (iy >= 0) & (iy < ny - 1)
    ix, iy = ix[keep], iy[keep]
    fx = ux[keep] - ix
    fy = uy[keep] - iy
    ww = w[keep]
    flat = np.zeros(nx * ny)
    base = ix * ny + iy
    k = len(base)
    idx = np.empty(4 * k, dtype=np.int64)
    val = np.empty(4 * k)
    # particle-interleaved order matches the loop backend bitwise
    idx[0::4], val[0::4] = base, ww * (1.0 - fx) * (1.0 - fy)
    idx[1::4], val[1::4] = base + ny, ww * fx * (1.0 - fy)
    idx[2::4], val[2::4] = base + 1, ww * (1.0 - fx) * fy
    idx[3::4], val[3::4] = base + ny + 1, ww * fx * fy
    np.add.at(flat, idx, val)
    return flat.reshape((nx, ny))


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:
    _jit = njit(cache=True)
    _el_pair_1d = _jit(_el_pair_1d)
    _el_pair_2d = _jit(_el_pair_2d)
    _interp1 = _jit(_interp1)
    _bilinear = _jit(_bilinear)
    hopf_lax_1d = _jit(_hopf_lax_1d_loop)
    hopf_lax_1d_refine = _jit(_hopf_lax_1d_refine_loop)
    hopf_lax_2d = _jit(_hopf_lax_2d_loop)
    hopf_lax_march_1d = _jit(_hopf_lax_march_loop)
    monotone_hopf_lax_1d = _jit(_monotone_hopf_lax_1d_loop)
    rk4_scalar_1d = _jit(_rk4_scalar_1d_loop)
    rk4_scalar_2d = _jit(_rk4_scalar_2d_loop)
    rk4_weighted_2d = _jit(_rk4_weighted_2d_loop)
    deposit_cic_1d = _jit(_deposit_cic_1d_loop)
    deposit_cic_2d = _jit(_deposit_cic_2d_loop)
else:
    hopf_lax_1d = _hopf_lax_1d_numpy
    hopf_lax_1d_refine = _hopf_lax_1d_refine_numpy
    hopf_lax_2d = _hopf_lax_2d_numpy
    hopf_lax_march_1d = _hopf_lax_march_numpy
    monotone_hopf_lax_1d = _monotone_hopf_lax_1d_loop
    rk4_scalar_1d = _rk4_scalar_1d_numpy
    rk4_scalar_2d = _rk4_scalar_2d_numpy
    rk4_weighted_2d = _rk4_weighted_2d_numpy
    deposit_cic_1d = _deposit_cic_1d_numpy
    deposit_cic_2d = _deposit_cic_2d_numpy

# the vectorized implementations stay importable for cross-backend checks
NUMPY_IMPLS = {
    "hopf_lax_1d": _hopf_lax_1d_numpy,
    "hopf_lax_1d_refine": _hopf_lax_1d_refine_numpy,
    "hopf_lax_2d": _hopf_lax_2d_numpy,
    "hopf_lax_march_1d": _hopf_lax_march_numpy,
    "rk4_scalar_1d": _rk4_scalar_1d_numpy,
    "rk4_scalar_2d": _rk4_scalar_2d_numpy,
    "rk4_weighted_2d": _rk4_weighted_2d_numpy,
    "deposit_cic_1d": _deposit_cic_1d_numpy,
    "deposit_cic_2d": _deposit_cic_2d_numpy,
}
