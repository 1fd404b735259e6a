# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled time-stepping kernels; see ``_kernels_py`` for the reference."""

from libc.math cimport sqrt, atan, fabs, isfinite


cdef inline double _clip(double x, double lo, double hi) noexcept nogil:
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


cdef inline double _angle(double p, double eta) noexcept nogil:
    if eta > 0.0:
        return p / sqrt(p * p + eta * eta)
    if p > 0.0:
        return 1.0
    if p < 0.0:
        return -1.0
    return 0.0


cdef inline double _ham(double pm, double pp, double ap, double am,
                        double c, double eta) noexcept nogil:
    cdef double cc = fabs(c)
    cdef double sgn = 1.0 if c >= 0.0 else -1.0
    cdef double lo, hi, th, right, left
    if cc == 0.0:
        return ap * pp
    lo = -ap / cc
    if lo < -1.0:
        lo = -1.0
    th = _clip(sgn * _angle(pp, eta), lo, 1.0)
    right = (ap + cc * th) * pp
    if eta > 0.0:
        right += sgn * cc * eta * sqrt(1.0 - th * th)
    if am >= cc:
        return right
    hi = -am / cc
    th = _clip(sgn * _angle(pm, eta), -1.0, hi)
    left = (am + cc * th) * pm
    if eta > 0.0:
        left += sgn * cc * eta * sqrt(1.0 - th * th)
    if c >= 0.0:
        return right if right > left else left
    return right if right < left else left


def hamiltonian_scalar(double pm, double pp, double ap, double am, double c,
                       double eta):
    return _ham(pm, pp, ap, am, c, eta)


def advance(double[::1] u, const double[::1] ap, const double[::1] am,
            const double[::1] c, const double[::1] f, double h, double eta,
            double k, double beta0, double p_bdry, bint central_ghost,
            double dt, long nsteps, double[::1] work):
    cdef Py_ssize_t m = u.shape[0] - 1
    cdef Py_ssize_t i
    cdef long s
    cdef double pm, pp, r, sup = 0.0, e, new0, atm, atp
    cdef double inv_h = 1.0 / h
    cdef bint diffuse = eta > 0.0
    with nogil:
        for s in range(nsteps):
            sup = 0.0
            e = c[0] * eta - f[0] - k * u[0]
            if diffuse:
                atp = atan((u[1] - u[0]) * inv_h / eta)
                e += 2.0 * eta * atp * inv_h
            pp = (u[1] - u[0]) * inv_h
            if diffuse:
                atp = atan(pp / eta)
            for i in range(1, m + 1):
                pm = pp
                atm = atp
                if i < m:
                    pp = (u[i + 1] - u[i]) * inv_h
                elif central_ghost:
                    pp = 2.0 * p_bdry - pm
                else:
                    pp = p_bdry
                r = _ham(pm, pp, ap[i], am[i], c[i], eta) - f[i] - k * u[i]
                if diffuse:
                    atp = atan(pp / eta)
                    r += eta * (atp - atm) * inv_h
                work[i] = u[i] + dt * r
                if fabs(r) > sup or not isfinite(r):
                    sup = fabs(r)
            # origin couples to the freshly updated first node
            new0 = (u[0] + dt * e + dt * beta0 * work[1]) / (1.0 + dt * beta0)
            work[0] = new0
            if fabs(new0 - u[0]) / dt > sup:
                sup = fabs(new0 - u[0]) / dt
            for i in range(m + 1):
                u[i] = work[i]
            if not isfinite(sup):
                break
    return sup


def dp_advance(double[::1] V, const long[:, ::1] idx, const double[:, ::1] wt,
               const double[:, ::1] reward, long nsteps, double[::1] work):
    cdef Py_ssize_t m = V.shape[0] - 1
    cdef Py_ssize_t K = idx.shape[1]
    cdef Py_ssize_t i, j, kk, j1
    cdef long s
    cdef double best, val, w
    with nogil:
        for s in range(nsteps):
            for i in range(m + 1):
                best = -1e308
                for kk in range(K):
                    j = idx[i, kk]
                    j1 = j + 1 if j < m else m
                    w = wt[i, kk]
                    val = reward[i, kk] + (1.0 - w) * V[j] + w * V[j1]
                    if val > best:
                        best = val
                work[i] = best
            for i in range(m + 1):
                V[i] = work[i]
    return V
