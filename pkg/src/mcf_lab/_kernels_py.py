"""Pure numpy reference implementation of the time-stepping kernels.

The compiled module ``_kernels`` mirrors these functions line for line; this
file is the fallback when the extension is unavailable and the reference the
benchmarks compare against.
"""

from __future__ import annotations

import numpy as np


def _opt_angle(p, eta):
    if eta > 0.0:
        return p / np.sqrt(p * p + eta * eta)
    return np.sign(p)


def hamiltonian(pm, pp, ap, am, c, eta):
    """Upwind value of ``a*u_r + c*sqrt(eta^2 + u_r^2)``.

    ``pm``/``pp`` are backward/forward differences, ``ap``/``am`` the radial
    drift evaluated on the right/left half cell. Writing the square root as a
    maximum over unit directions ``theta`` splits velocities ``a + c*theta``
    into a rightward family (read from ``pp``) and a leftward family (read
    from ``pm``); each family is maximized in closed form. For ``c < 0`` the
    same split is applied to the concave branch with a minimum.
    """
    pm = np.asarray(pm, float)
    pp = np.asarray(pp, float)
    ap = np.broadcast_to(np.asarray(ap, float), pp.shape)
    am = np.broadcast_to(np.asarray(am, float), pp.shape)
    c = np.broadcast_to(np.asarray(c, float), pp.shape)
    cc = np.abs(c)
    pos = c >= 0.0
    sgn = np.where(pos, 1.0, -1.0)
    safe = np.where(cc > 0.0, cc, 1.0)

    # ratios overflow only for denormal c, where the clip makes them harmless
    with np.errstate(over="ignore"):
        lo = np.where(cc > 0.0, np.maximum(-1.0, -ap / safe), 1.0)
        has_left = am < cc
        hi = np.where(has_left, -am / safe, -1.0)
    th = np.clip(sgn * _opt_angle(pp, eta), lo, 1.0)
    right = (ap + cc * th) * pp + sgn * cc * eta * np.sqrt(1.0 - th * th)

    th = np.clip(sgn * _opt_angle(pm, eta), -1.0, hi)
    left = (am + cc * th) * pm + sgn * cc * eta * np.sqrt(1.0 - th * th)

    best = np.where(pos, np.maximum(right, left), np.minimum(right, left))
    return np.where(has_left, best, right)


def rates(u, ap, am, c, f, h, eta, k, p_bdry, central_ghost):
    """Right-hand side at all nodes except the origin."""
    m = u.shape[0] - 1
    d = np.diff(u) / h
    pm = d
    pp = np.empty(m)
    pp[:-1] = d[1:]
    pp[-1] = 2.0 * p_bdry - d[-1] if central_ghost else p_bdry
    out = hamiltonian(pm, pp, ap[1:], am[1:], c[1:], eta) - f[1:] - k * u[1:]
    if eta > 0.0:
        out += eta * (np.arctan(pp / eta) - np.arctan(pm / eta)) / h
    return out


def origin_explicit(u, c0, f0, h, eta, k):
    """Explicit part of the origin row."""
    e = c0 * eta - f0 - k * u[0]
    if eta > 0.0:
        e += 2.0 * eta * np.arctan((u[1] - u[0]) / (h * eta)) / h
    return e


def origin_update(u0, e, u1_new, beta0, dt):
    """Origin row; the symmetric ``(n-1) u_rr`` part is taken implicitly
    against the already updated first node, so flat states move exactly."""
    return (u0 + dt * e + dt * beta0 * u1_new) / (1.0 + dt * beta0)


def advance(u, ap, am, c, f, h, eta, k, beta0, p_bdry, central_ghost, dt,
            nsteps, work=None):
    """Take ``nsteps`` forward-Euler steps in place.

    Returns ``max|u_new - u_old| / dt`` of the last step taken.
    """
    sup = 0.0
    for _ in range(int(nsteps)):
        r = rates(u, ap, am, c, f, h, eta, k, p_bdry, central_ghost)
        e = origin_explicit(u, c[0], f[0], h, eta, k)
        u[1:] += dt * r
        new0 = origin_update(u[0], e, u[1], beta0, dt)
        r0 = (new0 - u[0]) / dt
        u[0] = new0
        sup = max(float(np.max(np.abs(r))), abs(float(r0)))
    return sup


def dp_advance(V, idx, wt, reward, nsteps, work=None):
    """Value iteration ``V <- max_k reward + (1-w) V[j] + w V[j+1]``.

    ``idx``, ``wt`` and ``reward`` have shape ``(m+1, K)``; ``idx + 1`` must
    stay in range (callers use weight 0 at the last node).
    """
    m = V.shape[0] - 1
    j1 = np.minimum(idx + 1, m)
    for _ in range(int(nsteps)):
        cand = reward + (1.0 - wt) * V[idx] + wt * V[j1]
        V[:] = cand.max(axis=1)
    return V
