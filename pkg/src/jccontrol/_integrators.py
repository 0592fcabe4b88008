"""Hot fixed-step integration loops, compiled with numba.

The controlled runs take 1e5 steps of a coupled (density matrix, memory
integral) system; pure-python stepping is two orders of magnitude too slow
for the ensemble studies, so the classical 4th-order loops live here.

The dissipator [L, rho O^dag] - [L^dag, O rho] is assembled in O(d^2) using
the fact that O = f1 |g0><e0| + f2 |g0><g1| has a single nonzero row.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _leo_rhs(rho, f1, f2, c, h_s, r_diag, l_op, ig0, ig1, ie0,
             omega, omega_c, kappa, lam, gamma, gamma_eff, drho):
    d = rho.shape[0]
    # -i [H_s + c R, rho]; R is diagonal
    for i in range(d):
        for jj in range(d):
            acc = 0.0 + 0.0j
            for k in range(d):
                acc += h_s[i, k] * rho[k, jj] - rho[i, k] * h_s[k, jj]
            acc += c * (r_diag[i] - r_diag[jj]) * rho[i, jj]
            drho[i, jj] = -1j * acc

    # A = O rho, nonzero only in row ig0
    arow = np.empty(d, dtype=np.complex128)
    for jj in range(d):
        arow[jj] = f1 * rho[ie0, jj] + f2 * rho[ig1, jj]
    # t1 = L (rho O^dag) column ig0;  t4 = (O rho) L^dag row ig0
    t1col = np.empty(d, dtype=np.complex128)
    t4row = np.empty(d, dtype=np.complex128)
    for i in range(d):
        acc1 = 0.0 + 0.0j
        acc4 = 0.0 + 0.0j
        for k in range(d):
            acc1 += l_op[i, k] * np.conj(arow[k])
            acc4 += arow[k] * np.conj(l_op[i, k])
        t1col[i] = acc1
        t4row[i] = acc4
    for i in range(d):
        for jj in range(d):
            v = -np.conj(arow[i]) * l_op[ig0, jj] - np.conj(l_op[ig0, i]) * arow[jj]
            if jj == ig0:
                v += t1col[i]
            if i == ig0:
                v += t4row[jj]
            drho[i, jj] += v

    df1 = (1j * omega - gamma_eff) * f1 + (1j * kappa + lam * f1) * f2
    df2 = (lam * gamma / 2 + 1j * kappa * f1
           + (1j * (omega_c - 2 * c) - gamma_eff) * f2 + lam * f2 * f2)
    return df1, df2


@njit(cache=True)
def leo_rk4(rho0, h_s, r_diag, l_op, ig0, ig1, ie0,
            omega, omega_c, kappa, lam, gamma, gamma_eff,
            c_stages, dt, n_steps, stride):
    """Co-integrate (rho, f1, f2); returns stride-sampled trajectories, the
    worst trace deviation seen, and the step index of a blow-up (-1 if none)."""
    d = rho0.shape[0]
    m = n_steps // stride
    states = np.zeros((m + 1, d, d), dtype=np.complex128)
    f1s = np.zeros(m + 1, dtype=np.complex128)
    f2s = np.zeros(m + 1, dtype=np.complex128)
    rho = rho0.copy()
    states[0] = rho
    f1 = 0.0 + 0.0j
    f2 = 0.0 + 0.0j
    k1 = np.empty((d, d), dtype=np.complex128)
    k2 = np.empty((d, d), dtype=np.complex128)
    k3 = np.empty((d, d), dtype=np.complex128)
    k4 = np.empty((d, d), dtype=np.complex128)
    tmp = np.empty((d, d), dtype=np.complex128)
    max_tr_dev = 0.0
    fail_step = -1
    for step in range(n_steps):
        c0 = c_stages[step, 0]
        cm = c_stages[step, 1]
        c1 = c_stages[step, 2]
        a1, b1 = _leo_rhs(rho, f1, f2, c0, h_s, r_diag, l_op, ig0, ig1, ie0,
                          omega, omega_c, kappa, lam, gamma, gamma_eff, k1)
        for i in range(d):
            for jj in range(d):
                tmp[i, jj] = rho[i, jj] + 0.5 * dt * k1[i, jj]
        a2, b2 = _leo_rhs(tmp, f1 + 0.5 * dt * a1, f2 + 0.5 * dt * b1, cm,
                          h_s, r_diag, l_op, ig0, ig1, ie0,
                          omega, omega_c, kappa, lam, gamma, gamma_eff, k2)
        for i in range(d):
            for jj in range(d):
                tmp[i, jj] = rho[i, jj] + 0.5 * dt * k2[i, jj]
        a3, b3 = _leo_rhs(tmp, f1 + 0.5 * dt * a2, f2 + 0.5 * dt * b2, cm,
                          h_s, r_diag, l_op, ig0, ig1, ie0,
                          omega, omega_c, kappa, lam, gamma, gamma_eff, k3)
        for i in range(d):
            for jj in range(d):
                tmp[i, jj] = rho[i, jj] + dt * k3[i, jj]
        a4, b4 = _leo_rhs(tmp, f1 + dt * a3, f2 + dt * b3, c1,
                          h_s, r_diag, l_op, ig0, ig1, ie0,
                          omega, omega_c, kappa, lam, gamma, gamma_eff, k4)
        for i in range(d):
            for jj in range(d):
                rho[i, jj] += dt / 6 * (k1[i, jj] + 2 * k2[i, jj] + 2 * k3[i, jj] + k4[i, jj])
        f1 += dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        f2 += dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4)

        tr = 0.0 + 0.0j
        for i in range(d):
            tr += rho[i, i]
        dev = abs(tr - 1.0)
        if not np.isfinite(dev) or dev > 1e-3:
            fail_step = step + 1
            break
        if dev > max_tr_dev:
            max_tr_dev = dev
        if (step + 1) % stride == 0:
            idx = (step + 1) // stride
            states[idx] = rho
            f1s[idx] = f1
            f2s[idx] = f2
    return states, f1s, f2s, max_tr_dev, fail_step


@njit(cache=True)
def f_closed_rk4(omega, omega_c, kappa, lam, gamma, gamma_eff,
                 c_stages, dt, n_steps, stride):
    """Integrate the closed (f1, f2) system alone."""
    m = n_steps // stride
    f1s = np.zeros(m + 1, dtype=np.complex128)
    f2s = np.zeros(m + 1, dtype=np.complex128)
    f1 = 0.0 + 0.0j
    f2 = 0.0 + 0.0j
    for step in range(n_steps):
        c0 = c_stages[step, 0]
        cm = c_stages[step, 1]
        c1 = c_stages[step, 2]
        a1 = (1j * omega - gamma_eff) * f1 + (1j * kappa + lam * f1) * f2
        b1 = lam * gamma / 2 + 1j * kappa * f1 + (1j * (omega_c - 2 * c0) - gamma_eff) * f2 + lam * f2 * f2
        x1, y1 = f1 + 0.5 * dt * a1, f2 + 0.5 * dt * b1
        a2 = (1j * omega - gamma_eff) * x1 + (1j * kappa + lam * x1) * y1
        b2 = lam * gamma / 2 + 1j * kappa * x1 + (1j * (omega_c - 2 * cm) - gamma_eff) * y1 + lam * y1 * y1
        x2, y2 = f1 + 0.5 * dt * a2, f2 + 0.5 * dt * b2
        a3 = (1j * omega - gamma_eff) * x2 + (1j * kappa + lam * x2) * y2
        b3 = lam * gamma / 2 + 1j * kappa * x2 + (1j * (omega_c - 2 * cm) - gamma_eff) * y2 + lam * y2 * y2
        x3, y3 = f1 + dt * a3, f2 + dt * b3
        a4 = (1j * omega - gamma_eff) * x3 + (1j * kappa + lam * x3) * y3
        b4 = lam * gamma / 2 + 1j * kappa * x3 + (1j * (omega_c - 2 * c1) - gamma_eff) * y3 + lam * y3 * y3
        f1 += dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        f2 += dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
        if (step + 1) % stride == 0:
            idx = (step + 1) // stride
            f1s[idx] = f1
            f2s[idx] = f2
    return f1s, f2s


@njit(cache=True)
def _lindblad_rhs(rho, h, ls, ldl, out):
    d = rho.shape[0]
    for i in range(d):
        for jj in range(d):
            acc = 0.0 + 0.0j
            for k in range(d):
                acc += h[i, k] * rho[k, jj] - rho[i, k] * h[k, jj]
            out[i, jj] = -1j * acc
    nl = ls.shape[0]
    for n in range(nl):
        for i in range(d):
            for jj in range(d):
                acc = 0.0 + 0.0j
                for k in range(d):
                    lr = 0.0 + 0.0j
                    for q in range(d):
                        lr += ls[n, i, q] * rho[q, k]
                    acc += lr * np.conj(ls[n, jj, k])
                half = 0.0 + 0.0j
                for k in range(d):
                    half += ldl[n, i, k] * rho[k, jj] + rho[i, k] * ldl[n, k, jj]
                out[i, jj] += acc - 0.5 * half


@njit(cache=True)
def lindblad_rk4(rho0, h, ls, dt, n_steps):
    """Markov master-equation propagation storing every step."""
    d = rho0.shape[0]
    nl = ls.shape[0]
    ldl = np.empty((nl, d, d), dtype=np.complex128)
    for n in range(nl):
        for i in range(d):
            for jj in range(d):
                acc = 0.0 + 0.0j
                for k in range(d):
                    acc += np.conj(ls[n, k, i]) * ls[n, k, jj]
                ldl[n, i, jj] = acc
    states = np.zeros((n_steps + 1, d, d), dtype=np.complex128)
    rho = rho0.copy()
    states[0] = rho
    k1 = np.empty((d, d), dtype=np.complex128)
    k2 = np.empty((d, d), dtype=np.complex128)
    k3 = np.empty((d, d), dtype=np.complex128)
    k4 = np.empty((d, d), dtype=np.complex128)
    tmp = np.empty((d, d), dtype=np.complex128)
    for step in range(n_steps):
        _lindblad_rhs(rho, h, ls, ldl, k1)
        for i in range(d):
            for jj in range(d):
                tmp[i, jj] = rho[i, jj] + 0.5 * dt * k1[i, jj]
        _lindblad_rhs(tmp, h, ls, ldl, k2)
        for i in range(d):
            for jj in range(d):
                tmp[i, jj] = rho[i, jj] + 0.5 * dt * k2[i, jj]
        _lindblad_rhs(tmp, h, ls, ldl, k3)
        for i in range(d):
            for jj in range(d):
                tmp[i, jj] = rho[i, jj] + dt * k3[i, jj]
        _lindblad_rhs(tmp, h, ls, ldl, k4)
        for i in range(d):
            for jj in range(d):
                rho[i, jj] += dt / 6 * (k1[i, jj] + 2 * k2[i, jj] + 2 * k3[i, jj] + k4[i, jj])
        states[step + 1] = rho
    return states
