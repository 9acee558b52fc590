"""Fused per-cell LLG kernel.

One pass over the grid computes exchange, anisotropy, the Zhang-Li
derivative along the local current and the explicit-form torque. The
demagnetising field comes in precomputed. ``llg.llg_rhs`` is the plain
numpy reference this kernel is tested against.
"""

from __future__ import annotations

from numba import njit


@njit(cache=True, fastmath=False)
def fused_rhs(m, occ, hd, u, ex, an, hx, hy, hz, g0, alpha, beta, precession, use_u, out):
    nz, ny, nx = occ.shape
    ix2 = 1.0 / (hx * hx)
    iy2 = 1.0 / (hy * hy)
    iz2 = 1.0 / (hz * hz)
    den = 1.0 + alpha * alpha
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                if not occ[k, j, i]:
                    out[0, k, j, i] = 0.0
                    out[1, k, j, i] = 0.0
                    out[2, k, j, i] = 0.0
                    continue
                mx = m[0, k, j, i]
                my = m[1, k, j, i]
                mz = m[2, k, j, i]
                lx = 0.0
                ly = 0.0
                lz = 0.0
                # x neighbours
                gxx = 0.0
                gxy = 0.0
                gxz = 0.0
                nb = 0
                if i > 0 and occ[k, j, i - 1]:
                    dx_ = mx - m[0, k, j, i - 1]
                    dy_ = my - m[1, k, j, i - 1]
                    dz_ = mz - m[2, k, j, i - 1]
                    lx -= dx_ * ix2
                    ly -= dy_ * ix2
                    lz -= dz_ * ix2
                    gxx += dx_
                    gxy += dy_
                    gxz += dz_
                    nb += 1
                if i < nx - 1 and occ[k, j, i + 1]:
                    dx_ = m[0, k, j, i + 1] - mx
                    dy_ = m[1, k, j, i + 1] - my
                    dz_ = m[2, k, j, i + 1] - mz
                    lx += dx_ * ix2
                    ly += dy_ * ix2
                    lz += dz_ * ix2
                    gxx += dx_
                    gxy += dy_
                    gxz += dz_
                    nb += 1
                if nb > 0:
                    s = 1.0 / (nb * hx)
                    gxx *= s
                    gxy *= s
                    gxz *= s
                gyx = 0.0
                gyy = 0.0
                gyz = 0.0
                nb = 0
                if j > 0 and occ[k, j - 1, i]:
                    dx_ = mx - m[0, k, j - 1, i]
                    dy_ = my - m[1, k, j - 1, i]
                    dz_ = mz - m[2, k, j - 1, i]
                    lx -= dx_ * iy2
                    ly -= dy_ * iy2
                    lz -= dz_ * iy2
                    gyx += dx_
                    gyy += dy_
                    gyz += dz_
                    nb += 1
                if j < ny - 1 and occ[k, j + 1, i]:
                    dx_ = m[0, k, j + 1, i] - mx
                    dy_ = m[1, k, j + 1, i] - my
                    dz_ = m[2, k, j + 1, i] - mz
                    lx += dx_ * iy2
                    ly += dy_ * iy2
                    lz += dz_ * iy2
                    gyx += dx_
                    gyy += dy_
                    gyz += dz_
                    nb += 1
                if nb > 0:
                    s = 1.0 / (nb * hy)
                    gyx *= s
                    gyy *= s
                    gyz *= s
                gzx = 0.0
                gzy = 0.0
                gzz = 0.0
                nb = 0
                if k > 0 and occ[k - 1, j, i]:
                    dx_ = mx - m[0, k - 1, j, i]
                    dy_ = my - m[1, k - 1, j, i]
                    dz_ = mz - m[2, k - 1, j, i]
                    lx -= dx_ * iz2
                    ly -= dy_ * iz2
                    lz -= dz_ * iz2
                    gzx += dx_
                    gzy += dy_
                    gzz += dz_
                    nb += 1
                if k < nz - 1 and occ[k + 1, j, i]:
                    dx_ = m[0, k + 1, j, i] - mx
                    dy_ = m[1, k + 1, j, i] - my
                    dz_ = m[2, k + 1, j, i] - mz
                    lx += dx_ * iz2
                    ly += dy_ * iz2
                    lz += dz_ * iz2
                    gzx += dx_
                    gzy += dy_
                    gzz += dz_
                    nb += 1
                if nb > 0:
                    s = 1.0 / (nb * hz)
                    gzx *= s
                    gzy *= s
                    gzz *= s

                Hx = ex * lx + hd[0, k, j, i]
                Hy = ex * ly + hd[1, k, j, i]
                Hz = ex * lz + hd[2, k, j, i] + an * mz
                # m x H
                cx = my * Hz - mz * Hy
                cy = mz * Hx - mx * Hz
                cz = mx * Hy - my * Hx
                if not precession:
                    out[0, k, j, i] = -g0 * (my * cz - mz * cy)
                    out[1, k, j, i] = -g0 * (mz * cx - mx * cz)
                    out[2, k, j, i] = -g0 * (mx * cy - my * cx)
                    continue
                tx = -g0 * cx
                ty = -g0 * cy
                tz = -g0 * cz
                if use_u:
                    ux = u[0, k, j, i]
                    uy = u[1, k, j, i]
                    uz = u[2, k, j, i]
                    ax_ = ux * gxx + uy * gyx + uz * gzx
                    ay_ = ux * gxy + uy * gyy + uz * gzy
                    az_ = ux * gxz + uy * gyz + uz * gzz
                    tx += -ax_ + beta * (my * az_ - mz * ay_)
                    ty += -ay_ + beta * (mz * ax_ - mx * az_)
                    tz += -az_ + beta * (mx * ay_ - my * ax_)
                d = mx * tx + my * ty + mz * tz
                tx -= d * mx
                ty -= d * my
                tz -= d * mz
                out[0, k, j, i] = (tx + alpha * (my * tz - mz * ty)) / den
                out[1, k, j, i] = (ty + alpha * (mz * tx - mx * tz)) / den
                out[2, k, j, i] = (tz + alpha * (mx * ty - my * tx)) / den
    return out
