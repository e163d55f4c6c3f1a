"""Numba kernels for the hot paths: the per-BS offload line search and the
raw Gibbs chain used by the stationary-distribution diagnostic.

Once the caching matrix and hence the arrival rates are fixed, the inner
continuous problem decomposes per BS into a 1-D minimization of

    g(b) = V * [b*w/f + b^2*lam*v / (2f(f - b*w)) + (1-b)*lam*h] + q*(gamma + kappa*b*w)

over b in [0, b_hi] where lam is the BS arrival rate, w = lam*E[s] and
v = lam*E[s^2]. b_hi intersects the box bound, the queue stability margin
and the per-slot energy cap; the per-slot delay cap is enforced as a
feasibility mask during the search.
"""

from __future__ import annotations

import numpy as np
from numba import njit

GOLDEN = 0.6180339887498949  # 1/phi
GRID_POINTS = 65


@njit(cache=True)
def delay_energy(b, lam, w, v, f, kappa, gamma, h):
    """Per-BS delay cost and energy at offload fraction b."""
    if lam <= 0.0:
        return 0.0, gamma
    queue = 0.0
    if v > 0.0:
        queue = (b * b * lam * v) / (2.0 * f * (f - b * w))
    delay = b * w / f + queue + (1.0 - b) * lam * h
    energy = gamma + kappa * b * w
    return delay, energy


@njit(cache=True)
def _objective(b, lam, w, v, f, kappa, gamma, h, vv, q, d_cap):
    d, e = delay_energy(b, lam, w, v, f, kappa, gamma, h)
    if d > d_cap:
        return np.inf
    return vv * d + q * e


@njit(cache=True)
def solve_bs(lam, w, v, f, kappa, gamma, h, vv, q, e_head, d_max,
             eps_stab, tol):
    """Minimize the per-BS objective over the feasible offload interval.

    Returns (b, g, delay, energy, ok). ok is False when no feasible b
    exists (energy headroom negative, or the delay cap cannot be met).
    """
    if e_head < 0.0:
        return 0.0, np.inf, 0.0, gamma, False
    d_cap = d_max * (1.0 + 1e-12) + 1e-15
    if lam <= 0.0:
        return 0.0, q * gamma, 0.0, gamma, True

    hi = 1.0
    if w > 0.0:
        cap = (1.0 - eps_stab) * f / w
        if cap < hi:
            hi = cap
        ecap = kappa * w
        if ecap > 0.0:
            cap = e_head / ecap
            if cap < hi:
                hi = cap
    if hi < 0.0:
        hi = 0.0

    # coarse scan to bracket the best feasible basin
    best_i = -1
    best_g = np.inf
    xs = np.empty(GRID_POINTS)
    for i in range(GRID_POINTS):
        x = hi * i / (GRID_POINTS - 1)
        xs[i] = x
        g = _objective(x, lam, w, v, f, kappa, gamma, h, vv, q, d_cap)
        if g < best_g:
            best_g = g
            best_i = i
    if best_i < 0:
        # refine once before declaring the BS infeasible
        best_x = 0.0
        for i in range(1025):
            x = hi * i / 1024.0
            g = _objective(x, lam, w, v, f, kappa, gamma, h, vv, q, d_cap)
            if g < best_g:
                best_g = g
                best_i = -2
                best_x = x
                break
        if best_i == -1:
            return 0.0, np.inf, 0.0, gamma, False
        lo_b = max(best_x - hi / 1024.0, 0.0)
        hi_b = min(best_x + hi / 1024.0, hi)
        anchor = best_x
    else:
        lo_b = xs[best_i - 1] if best_i > 0 else xs[0]
        hi_b = xs[best_i + 1] if best_i < GRID_POINTS - 1 else xs[GRID_POINTS - 1]
        anchor = xs[best_i]

    # golden-section search inside the bracket
    a, b = lo_b, hi_b
    c = b - (b - a) * GOLDEN
    d = a + (b - a) * GOLDEN
    fc = _objective(c, lam, w, v, f, kappa, gamma, h, vv, q, d_cap)
    fd = _objective(d, lam, w, v, f, kappa, gamma, h, vv, q, d_cap)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - (b - a) * GOLDEN
            fc = _objective(c, lam, w, v, f, kappa, gamma, h, vv, q, d_cap)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * GOLDEN
            fd = _objective(d, lam, w, v, f, kappa, gamma, h, vv, q, d_cap)
    cand = 0.5 * (a + b)
    g_cand = _objective(cand, lam, w, v, f, kappa, gamma, h, vv, q, d_cap)

    # project back toward the feasible anchor if the midpoint crossed the cap
    it = 0
    while not np.isfinite(g_cand) and it < 80:
        cand = 0.5 * (cand + anchor)
        g_cand = _objective(cand, lam, w, v, f, kappa, gamma, h, vv, q, d_cap)
        it += 1

    # prefer exact endpoints / grid anchor when they are at least as good
    for x in (0.0, hi, anchor):
        g = _objective(x, lam, w, v, f, kappa, gamma, h, vv, q, d_cap)
        if g <= g_cand:
            cand = x
            g_cand = g
    dly, en = delay_energy(cand, lam, w, v, f, kappa, gamma, h)
    return cand, g_cand, dly, en, True


@njit(cache=True)
def solve_many(idx, lam, w, v, f, kappa, gamma, h, vv, q, e_head, d_max,
               eps_stab, tol, b_out, d_out, e_out):
    """Solve the per-BS subproblem for every BS index in idx, in place.

    Returns the first infeasible BS index, or -1 when all succeed.
    """
    for j in range(idx.shape[0]):
        n = idx[j]
        bn, gn, dn, en, ok = solve_bs(lam[n], w[n], v[n], f[n], kappa[n],
                                      gamma[n], h, vv, q, e_head[n],
                                      d_max[n], eps_stab, tol)
        if not ok:
            return n
        b_out[n] = bn
        d_out[n] = dn
        e_out[n] = en
    return -1


@njit(cache=True)
def chain_occupancy(f_flat, strides, phi_sizes, n_steps, burn_in, tau, seed):
    """Run the raw per-BS-proposal Gibbs chain over an enumerated state space.

    f_flat holds the objective of every joint caching state (np.inf marks
    per-slot-infeasible states); state 0 (all caches empty) must be feasible.
    Returns the visit counts of the post-burn-in steps.
    """
    np.random.seed(seed)
    counts = np.zeros(f_flat.shape[0], dtype=np.int64)
    n_bs = phi_sizes.shape[0]
    idx = np.zeros(n_bs, dtype=np.int64)
    flat = 0
    f_cur = f_flat[0]
    for step in range(burn_in + n_steps):
        n = np.random.randint(0, n_bs)
        r = np.random.randint(0, phi_sizes[n])
        new_flat = flat + (r - idx[n]) * strides[n]
        f_new = f_flat[new_flat]
        if np.isfinite(f_new):
            x = (f_new - f_cur) / tau
            if x > 700.0:
                x = 700.0
            elif x < -700.0:
                x = -700.0
            if np.random.random() < 1.0 / (1.0 + np.exp(x)):
                idx[n] = r
                flat = new_flat
                f_cur = f_new
        if step >= burn_in:
            counts[flat] += 1
    return counts
