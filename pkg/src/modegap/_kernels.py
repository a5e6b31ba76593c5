"""Numba time-stepping kernel for the 2D TE (Ex, Ey, Hz) Yee solver.

One call advances the state by n_steps with everything preallocated by the
caller: the steady loop performs no heap allocation.  CPML memory arrays are
full-grid but only the PML strips are touched, so the interior update stays
a bare three-array stencil.

Field layout (row-major, y outer):
    hz[j, i]  cell centers           shape (ny, nx)
    ex[j, i]  staggered half-down    shape (ny+1, nx)   PEC rows j=0, ny
    ey[j, i]  staggered half-left    shape (ny, nx+1)   PEC cols i=0, nx
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, fastmath=False)
def run_steps(hz, ex, ey, cex, cey, chx, chy,
              npml_x, npml_y,
              bex_y, aex_y, bey_x, aey_x, bhz_x, ahz_x, bhz_y, ahz_y,
              psi_ex_y, psi_ey_x, psi_hz_x, psi_hz_y,
              src_j, src_i, src_comp, src_wave,
              probe_j, probe_i, probe_comp, probe_out,
              dft_on, omega, dt, t_start,
              dft_hz_re, dft_hz_im, dft_ex_re, dft_ex_im, dft_ey_re, dft_ey_im,
              energy_on, hz_prev, epsxx, epsyy, e_scale, h_scale, energy_out,
              n_steps, check_every, field_limit):
    """Advance n_steps; return -1 on success or the failing global step."""
    ny, nx = hz.shape
    n_src = src_j.shape[0]
    n_probe = probe_j.shape[0]

    for n in range(n_steps):
        t_step = t_start + n

        if energy_on:
            for j in range(ny):
                for i in range(nx):
                    hz_prev[j, i] = hz[j, i]

        # ---- H update -------------------------------------------------
        for j in range(ny):
            for i in range(nx):
                hz[j, i] += chy * (ex[j + 1, i] - ex[j, i]) \
                    - chx * (ey[j, i + 1] - ey[j, i])
        # CPML corrections, x strips then y strips
        if npml_x > 0:
            for j in range(ny):
                for i in range(npml_x):
                    d = ey[j, i + 1] - ey[j, i]
                    p = bhz_x[i] * psi_hz_x[j, i] + ahz_x[i] * d
                    psi_hz_x[j, i] = p
                    hz[j, i] -= chx * p
                for i in range(nx - npml_x, nx):
                    d = ey[j, i + 1] - ey[j, i]
                    p = bhz_x[i] * psi_hz_x[j, i] + ahz_x[i] * d
                    psi_hz_x[j, i] = p
                    hz[j, i] -= chx * p
        if npml_y > 0:
            for j in range(npml_y):
                for i in range(nx):
                    d = ex[j + 1, i] - ex[j, i]
                    p = bhz_y[j] * psi_hz_y[j, i] + ahz_y[j] * d
                    psi_hz_y[j, i] = p
                    hz[j, i] += chy * p
            for j in range(ny - npml_y, ny):
                for i in range(nx):
                    d = ex[j + 1, i] - ex[j, i]
                    p = bhz_y[j] * psi_hz_y[j, i] + ahz_y[j] * d
                    psi_hz_y[j, i] = p
                    hz[j, i] += chy * p

        # sources on H live at (n + 1/2) dt
        for s in range(n_src):
            if src_comp[s] == 0:
                hz[src_j[s], src_i[s]] += src_wave[s, n]

        if dft_on:
            th = (t_step + 0.5) * dt
            c = math.cos(omega * th)
            sn = -math.sin(omega * th)
            for j in range(ny):
                for i in range(nx):
                    dft_hz_re[j, i] += hz[j, i] * c
                    dft_hz_im[j, i] += hz[j, i] * sn

        if energy_on:
            acc_e = 0.0
            for j in range(ny + 1):
                for i in range(nx):
                    acc_e += epsxx[j, i] * ex[j, i] * ex[j, i]
            for j in range(ny):
                for i in range(nx + 1):
                    acc_e += epsyy[j, i] * ey[j, i] * ey[j, i]
            acc_h = 0.0
            for j in range(ny):
                for i in range(nx):
                    acc_h += hz_prev[j, i] * hz[j, i]
            energy_out[n] = e_scale * acc_e + h_scale * acc_h

        # ---- E update -------------------------------------------------
        for j in range(1, ny):
            for i in range(nx):
                ex[j, i] += cex[j, i] * (hz[j, i] - hz[j - 1, i])
        if npml_y > 0:
            for j in range(1, npml_y + 1):
                for i in range(nx):
                    d = hz[j, i] - hz[j - 1, i]
                    p = bex_y[j] * psi_ex_y[j, i] + aex_y[j] * d
                    psi_ex_y[j, i] = p
                    ex[j, i] += cex[j, i] * p
            for j in range(ny - npml_y, ny):
                for i in range(nx):
                    d = hz[j, i] - hz[j - 1, i]
                    p = bex_y[j] * psi_ex_y[j, i] + aex_y[j] * d
                    psi_ex_y[j, i] = p
                    ex[j, i] += cex[j, i] * p

        for j in range(ny):
            for i in range(1, nx):
                ey[j, i] -= cey[j, i] * (hz[j, i] - hz[j, i - 1])
        if npml_x > 0:
            for j in range(ny):
                for i in range(1, npml_x + 1):
                    d = hz[j, i] - hz[j, i - 1]
                    p = bey_x[i] * psi_ey_x[j, i] + aey_x[i] * d
                    psi_ey_x[j, i] = p
                    ey[j, i] -= cey[j, i] * p
                for i in range(nx - npml_x, nx):
                    d = hz[j, i] - hz[j, i - 1]
                    p = bey_x[i] * psi_ey_x[j, i] + aey_x[i] * d
                    psi_ey_x[j, i] = p
                    ey[j, i] -= cey[j, i] * p

        # sources on E live at (n + 1) dt
        for s in range(n_src):
            if src_comp[s] == 1:
                ex[src_j[s], src_i[s]] += src_wave[s, n]
            elif src_comp[s] == 2:
                ey[src_j[s], src_i[s]] += src_wave[s, n]

        if dft_on:
            te = (t_step + 1.0) * dt
            c = math.cos(omega * te)
            sn = -math.sin(omega * te)
            for j in range(ny + 1):
                for i in range(nx):
                    dft_ex_re[j, i] += ex[j, i] * c
                    dft_ex_im[j, i] += ex[j, i] * sn
            for j in range(ny):
                for i in range(nx + 1):
                    dft_ey_re[j, i] += ey[j, i] * c
                    dft_ey_im[j, i] += ey[j, i] * sn

        for p_ in range(n_probe):
            comp = probe_comp[p_]
            if comp == 0:
                probe_out[p_, n] = hz[probe_j[p_], probe_i[p_]]
            elif comp == 1:
                probe_out[p_, n] = ex[probe_j[p_], probe_i[p_]]
            else:
                probe_out[p_, n] = ey[probe_j[p_], probe_i[p_]]

        if (n % check_every) == check_every - 1 or n == n_steps - 1:
            for j in range(ny):
                for i in range(nx):
                    v = hz[j, i]
                    if not (-field_limit <= v <= field_limit):
                        return t_step
    return -1
