"""Landau-Lifshitz-Gilbert dynamics with Zhang-Li spin-transfer torque.

The implicit Gilbert form

    dm/dt = -gamma0 m x H + alpha m x dm/dt - (u.grad) m + beta m x (u.grad) m

is integrated in its explicit form ``(tau + alpha m x tau) / (1 + alpha^2)``
with ``tau`` the three non-Gilbert torques, using an adaptive Dormand-Prince
5(4) pair. ``u`` is parallel to the local current density, so ``(u.grad) m``
is ``|u|`` times the derivative along the current direction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .current import CurrentMap
from .demag import Demag
from .field import FieldTerms, effective, local_demag_field, norm_error, normalize, total_energy
from .geometry import Mesh
from .material import CONSTANTS, MaterialParams, PhysicalConstants

log = logging.getLogger(__name__)

CONVENTIONS = ("half", "full")


class StepSizeUnderflow(RuntimeError):
    pass


class NotConverged(RuntimeError):
    def __init__(self, torque: float, steps: int, state: Optional["SimState"] = None):
        super().__init__(f"relaxation stopped after {steps} steps at max torque {torque:.3e}")
        self.torque = torque
        self.steps = steps
        self.state = state


@dataclass(frozen=True)
class SolverConfig:
    dt_init: float = 1e-14
    tolerance: float = 1e-5
    max_dt: float = 1e-12
    min_dt: float = 1e-18
    renormalize_every: int = 1
    stt_convention: str = "full"
    demag: str = "full"
    relax_torque: float = 1e-4
    relax_max_steps: int = 100_000
    relax_precession: bool = False
    backend: str = "numba"

    def __post_init__(self):
        if not self.dt_init > 0 or not self.tolerance > 0:
            raise ValueError("dt_init and tolerance must be positive")
        if self.stt_convention not in CONVENTIONS:
            raise ValueError(f"stt_convention must be one of {CONVENTIONS}")
        if self.backend not in ("numba", "numpy"):
            raise ValueError("backend must be 'numba' or 'numpy'")
        if self.demag not in ("full", "local", "off"):
            raise ValueError("demag must be 'full', 'local' or 'off'")

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


@dataclass
class SimState:
    time: float
    m: np.ndarray
    steps: int = 0

    def copy(self) -> "SimState":
        return SimState(self.time, self.m.copy(), self.steps)


def stt_prefactor(p: MaterialParams, convention: str = "full",
                  c: PhysicalConstants = CONSTANTS) -> float:
    """|u| / |J| in m^3/C: muB P / (e Ms), halved for the "half" convention."""
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    pref = c.muB * p.P / (c.e * p.Ms)
    return pref / 2 if convention == "half" else pref


def stt_velocity_u(j, p: MaterialParams, convention: str = "full",
                   c: PhysicalConstants = CONSTANTS):
    """Spin-drift velocity (m/s) parallel to the current density ``j``."""
    return stt_prefactor(p, convention, c) * np.asarray(j, dtype=float)


class _Gradient:
    """Central differences, one-sided where a neighbour is missing."""

    def __init__(self, mesh: Mesh):
        occ = mesh.occupancy
        self.h = {0: mesh.dz, 1: mesh.dy, 2: mesh.dx}
        self.fwd = {}
        self.weight = {}
        for ax in range(3):
            n = occ.shape[ax]
            if n < 2:
                continue
            pair = np.take(occ, range(0, n - 1), axis=ax) & np.take(occ, range(1, n), axis=ax)
            f = np.zeros(occ.shape, dtype=bool)
            b = np.zeros(occ.shape, dtype=bool)
            lo = [slice(None)] * 3
            hi = [slice(None)] * 3
            lo[ax] = slice(0, n - 1)
            hi[ax] = slice(1, n)
            f[tuple(lo)] = pair
            b[tuple(hi)] = pair
            cnt = f.astype(float) + b.astype(float)
            self.fwd[ax] = pair
            self.weight[ax] = np.divide(1.0, cnt, out=np.zeros_like(cnt), where=cnt > 0) / self.h[ax]

    def along(self, m: np.ndarray, ax: int) -> np.ndarray:
        if ax not in self.fwd:
            return np.zeros_like(m)
        a = ax + 1
        n = m.shape[a]
        d = np.diff(m, axis=a) * self.fwd[ax]
        out = np.zeros_like(m)
        lo = [slice(None)] * 4
        hi = [slice(None)] * 4
        lo[a] = slice(0, n - 1)
        hi[a] = slice(1, n)
        out[tuple(lo)] += d
        out[tuple(hi)] += d
        return out * self.weight[ax]


def _cross(a, b):
    return np.stack((a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]))


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def llg_rhs(m: np.ndarray, h_eff: np.ndarray, u_map: Optional[np.ndarray], p: MaterialParams,
            mesh: Mesh, c: PhysicalConstants = CONSTANTS, *, grad: Optional[_Gradient] = None,
            precession: bool = True) -> np.ndarray:
    """Explicit-form dm/dt (1/s) for magnetization ``m`` in field ``h_eff``.

    ``u_map`` is the spin-drift velocity field (3, nz, ny, nx) or None.
    """
    g0 = c.gamma0
    tau = -g0 * _cross(m, h_eff)
    if u_map is not None and np.any(u_map):
        grad = grad or _Gradient(mesh)
        ugm = np.zeros_like(m)
        for comp, ax in ((0, 2), (1, 1), (2, 0)):
            if np.any(u_map[comp]):
                ugm += u_map[comp] * grad.along(m, ax)
        tau += -ugm + p.beta * _cross(m, ugm)
    if not precession:
        # pure damping on the energy landscape; STT ignored
        return -g0 * _cross(m, _cross(m, h_eff))
    tau -= _dot(m, tau) * m
    a = p.alpha
    return (tau + a * _cross(m, tau)) / (1 + a * a)


# Dormand-Prince 5(4)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


class LLGSolver:
    """Time integrator bound to one mesh, material and current map."""

    def __init__(self, mesh: Mesh, params: MaterialParams, config: SolverConfig = SolverConfig(),
                 current: Optional[CurrentMap] = None, constants: PhysicalConstants = CONSTANTS):
        self.mesh = mesh
        self.params = params
        self.config = config
        self.c = constants
        self.demag = Demag(mesh) if config.demag == "full" else None
        self.grad = _Gradient(mesh)
        self.dt = config.dt_init
        self.stt_enabled = True
        self._fsal = None
        self._no_u = np.zeros((3, 1, 1, 1))
        self.set_current(current)

    def set_current(self, current: Optional[CurrentMap]):
        if current is None or current.is_zero:
            self.u = None
        else:
            self.u = stt_velocity_u(current.j, self.params, self.config.stt_convention, self.c)
        self._fsal = None

    def fields(self, m: np.ndarray) -> FieldTerms:
        return effective(m, self.params, self.mesh, demag=self.config.demag,
                         operator=self.demag, c=self.c)

    def energy(self, m: np.ndarray) -> float:
        return total_energy(m, self.params, self.mesh, demag=self.config.demag,
                            operator=self.demag, c=self.c)

    def _demag_only(self, m: np.ndarray) -> np.ndarray:
        mode = self.config.demag
        if mode == "full":
            return self.demag.field(m, self.params.Ms)
        if mode == "local":
            return local_demag_field(m, self.params, self.mesh)
        return np.zeros_like(m)

    def rhs(self, m: np.ndarray, precession: bool = True) -> np.ndarray:
        u = self.u if (self.stt_enabled and precession) else None
        if self.config.backend == "numpy":
            h = self.fields(m).h_eff
            return llg_rhs(m, h, u, self.params, self.mesh, self.c, grad=self.grad,
                           precession=precession)
        from .kernels import fused_rhs

        p, c, mesh = self.params, self.c, self.mesh
        hd = self._demag_only(m)
        out = np.empty_like(m)
        return fused_rhs(np.ascontiguousarray(m), mesh.occupancy, hd,
                         u if u is not None else self._no_u, 2 * p.A / (c.mu0 * p.Ms),
                         2 * p.Ku / (c.mu0 * p.Ms), mesh.dx, mesh.dy, mesh.dz, c.gamma0,
                         p.alpha, p.beta, precession, u is not None, out)

    def stiff_dt(self) -> float:
        """2 / largest decay rate of the exchange, anisotropy and demag operator."""
        p, c, mesh = self.params, self.c, self.mesh
        k = sum(4 / d ** 2 for d, n in ((mesh.dx, mesh.nx), (mesh.dy, mesh.ny), (mesh.dz, mesh.nz))
                if n > 1)
        h = 2 * p.A / (c.mu0 * p.Ms) * k + 2 * abs(p.Ku) / (c.mu0 * p.Ms) + p.Ms
        return 2.0 / (c.gamma0 * h)

    def max_torque(self, m: np.ndarray) -> float:
        """max over cells of |m x H_eff| / Ms."""
        t = _cross(m, self.fields(m).h_eff)
        return float(np.sqrt(np.max(_dot(t, t)))) / self.params.Ms

    def step(self, state: SimState, dt_limit: Optional[float] = None,
             precession: bool = True) -> SimState:
        """Advance by one accepted adaptive step."""
        cfg = self.config
        m0 = state.m
        k1 = self._fsal if self._fsal is not None else self.rhs(m0, precession)
        while True:
            dt = min(self.dt, cfg.max_dt)
            if dt_limit is not None:
                dt = min(dt, dt_limit)
            if dt < cfg.min_dt:
                raise StepSizeUnderflow(f"time step {dt:.3e} s below {cfg.min_dt:.1e} s")
            ks = [k1]
            for i in range(1, 7):
                y = m0.copy()
                for aij, kj in zip(_A[i], ks):
                    if aij:
                        y += (dt * aij) * kj
                ks.append(self.rhs(y, precession) if i < 6 else None)
                if i == 6:
                    m5 = y
                    ks[6] = self.rhs(m5, precession)
            err_vec = sum((dt * e) * k for e, k in zip(_E, ks) if e)
            err = float(np.sqrt(np.max(_dot(err_vec, err_vec))))
            if err <= cfg.tolerance:
                break
            self.dt = dt / 2
        steps = state.steps + 1
        m_new = m5
        renorm = cfg.renormalize_every > 0 and steps % cfg.renormalize_every == 0
        if renorm:
            m_new = normalize(m5, self.mesh)
        self._fsal = ks[6]
        factor = 2.0 if err == 0 else min(2.0, max(0.5, 0.9 * (cfg.tolerance / err) ** 0.2))
        self.dt = min(dt * factor, cfg.max_dt)
        return SimState(state.time + dt, m_new, steps)

    def run(self, state: SimState, duration: float, *, sample_every: Optional[float] = None,
            on_sample: Optional[Callable[[SimState], None]] = None,
            precession: bool = True) -> SimState:
        """Integrate for ``duration`` seconds, calling ``on_sample`` on a fixed grid."""
        t_end = state.time + duration
        next_sample = state.time
        if on_sample is not None:
            on_sample(state)
            next_sample = state.time + (sample_every or duration)
        self._fsal = None
        eps = 1e-24
        while state.time < t_end - eps:
            limit = t_end - state.time
            if on_sample is not None:
                limit = min(limit, next_sample - state.time)
            state = self.step(state, dt_limit=max(limit, self.config.min_dt), precession=precession)
            if on_sample is not None and state.time >= next_sample - eps:
                on_sample(state)
                next_sample += sample_every or duration
        return state

    def relax(self, state: SimState, torque: Optional[float] = None,
              max_steps: Optional[int] = None) -> SimState:
        """Damped relaxation until max |m x H|/Ms drops below ``torque``.

        Steps stay below ``stiff_dt``. At the error-controlled step the
        stiffest exchange mode sits on the stability edge and keeps a
        residual torque that never decays.
        """
        cfg = self.config
        torque = cfg.relax_torque if torque is None else torque
        max_steps = cfg.relax_max_steps if max_steps is None else max_steps
        precession = cfg.relax_precession
        saved = self.stt_enabled
        self.stt_enabled = False
        self._fsal = None
        cap = self.stiff_dt()
        try:
            t0 = state.steps
            check = 10
            while True:
                if (state.steps - t0) % check == 0:
                    tq = self.max_torque(state.m)
                    if tq < torque:
                        return state
                    if state.steps - t0 >= max_steps:
                        raise NotConverged(tq, state.steps - t0, state)
                state = self.step(state, dt_limit=cap, precession=precession)
        finally:
            self.stt_enabled = saved
            self._fsal = None


def step(state: SimState, config: SolverConfig, params: MaterialParams, mesh: Mesh,
         current: Optional[CurrentMap] = None) -> SimState:
    """One adaptive step with a throw-away solver (convenient, not fast)."""
    return LLGSolver(mesh, params, config, current).step(state)


def relax(state: SimState, config: SolverConfig, params: MaterialParams, mesh: Mesh) -> SimState:
    return LLGSolver(mesh, params, config).relax(state)


def check_normalized(m: np.ndarray, mesh: Mesh) -> float:
    return norm_error(m, mesh)
