"""Closed-form reference solutions built from characteristic profiles.

With constant materials the system decouples into two transported
scalars u = sqrt(eps) E + sqrt(mu) H (right-moving) and
w = sqrt(eps) E - sqrt(mu) H (left-moving). A reference solution is a
pair of initial profiles extended to the real line according to the
boundary condition:

* perfectly conducting walls: E odd and H even about x_l, both
  2(x_r - x_l)-periodic, so every reflection is captured for all time;
* free space: zero extension (meaningful when the data is supported
  inside the interval up to negligible tails);
* impedance (Robin) walls: the incoming characteristic profiles are
  prescribed by the boundary data, so u is extended left of x_l by
  g_l((x_l - z)/c) and w right of x_r by g_r((z - x_r)/c).
"""

import math
from dataclasses import dataclass

import numpy as np

from .basis import legendre_table
from .errors import NonconstantMaterial
from .quadrature import map_to_segment, tensor_rule

PEC = "pec"
FREE = "free"
ROBIN = "robin"


@dataclass(frozen=True)
class GaussianPulse:
    """amplitude * exp(-(x - center)^2 / width); width is the squared scale."""

    center: float = 0.0
    width: float = 1.0
    amplitude: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.exp(-((x - self.center) ** 2) / self.width)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        return self(x) * (-2.0 * (x - self.center) / self.width)


@dataclass(frozen=True)
class Constant:
    value: float = 0.0

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.value)

    def deriv(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


ZERO = Constant(0.0)


class ZeroField:
    """Space-time field that is identically (0, 0).

    Measuring the discrete error against it turns any error norm into
    the norm of the discrete field itself.
    """

    def evaluate(self, x, t):
        shape = np.broadcast(np.asarray(x, dtype=float),
                             np.asarray(t, dtype=float)).shape
        return np.zeros(shape), np.zeros(shape)

    def trace(self, x, t, side=None):
        return self.evaluate(x, t)

    def derivatives(self, x, t):
        shape = np.broadcast(np.asarray(x, dtype=float),
                             np.asarray(t, dtype=float)).shape
        z = np.zeros(shape)
        return z, z.copy(), z.copy(), z.copy()


def _deriv_of(f, explicit):
    if explicit is not None:
        return explicit
    return getattr(f, "deriv", None)


def _pec_extension(f, parity, x_l, length):
    """Periodic (2 * length) extension with given parity about x_l."""
    two_l = 2.0 * length

    def value(z):
        y = np.mod(np.asarray(z, dtype=float) - x_l, two_l)
        direct = y <= length
        m = np.where(direct, x_l + y, x_l + two_l - y)
        return np.where(direct, 1.0, parity) * f(m)

    return value


def _pec_extension_deriv(df, parity, x_l, length):
    two_l = 2.0 * length

    def value(z):
        y = np.mod(np.asarray(z, dtype=float) - x_l, two_l)
        direct = y <= length
        m = np.where(direct, x_l + y, x_l + two_l - y)
        return np.where(direct, 1.0, -parity) * df(m)

    return value


def _zero_extension(f, x_l, x_r):
    def value(z):
        z = np.asarray(z, dtype=float)
        inside = (z >= x_l) & (z <= x_r)
        return np.where(inside, f(np.clip(z, x_l, x_r)), 0.0)

    return value


class CharacteristicProfile:
    """Transported-profile reference solution on a constant-material domain."""

    def __init__(self, domain, eps, mu, u0, w0, du0=None, dw0=None, kind=FREE):
        self.domain = domain
        self.eps = float(eps)
        self.mu = float(mu)
        self.wave_speed = 1.0 / math.sqrt(self.eps * self.mu)
        self.u0 = u0
        self.w0 = w0
        self.du0 = du0
        self.dw0 = dw0
        self.kind = kind

    # -- constructors -------------------------------------------------

    @classmethod
    def _split(cls, e0, h0, eps, mu):
        se, sm = math.sqrt(eps), math.sqrt(mu)

        def u0(x):
            return se * e0(x) + sm * h0(x)

        def w0(x):
            return se * e0(x) - sm * h0(x)

        de0, dh0 = _deriv_of(e0, None), _deriv_of(h0, None)
        du0 = dw0 = None
        if de0 is not None and dh0 is not None:
            du0 = lambda x: se * de0(x) + sm * dh0(x)
            dw0 = lambda x: se * de0(x) - sm * dh0(x)
        return u0, w0, du0, dw0

    @classmethod
    def pec(cls, domain, e0, h0, eps=1.0, mu=1.0):
        """Reference for perfectly conducting walls (E = 0 on both)."""
        se, sm = math.sqrt(eps), math.sqrt(mu)
        e_ext = _pec_extension(e0, -1.0, domain.x_l, domain.length)
        h_ext = _pec_extension(h0, +1.0, domain.x_l, domain.length)

        def u0(z):
            return se * e_ext(z) + sm * h_ext(z)

        def w0(z):
            return se * e_ext(z) - sm * h_ext(z)

        du0 = dw0 = None
        de0, dh0 = _deriv_of(e0, None), _deriv_of(h0, None)
        if de0 is not None and dh0 is not None:
            de_ext = _pec_extension_deriv(de0, -1.0, domain.x_l, domain.length)
            dh_ext = _pec_extension_deriv(dh0, +1.0, domain.x_l, domain.length)
            du0 = lambda z: se * de_ext(z) + sm * dh_ext(z)
            dw0 = lambda z: se * de_ext(z) - sm * dh_ext(z)
        return cls(domain, eps, mu, u0, w0, du0, dw0, kind=PEC)

    @classmethod
    def free_space(cls, domain, e0, h0, eps=1.0, mu=1.0):
        """Zero-extended data propagated without boundaries."""
        u0_in, w0_in, du0_in, dw0_in = cls._split(e0, h0, eps, mu)
        u0 = _zero_extension(u0_in, domain.x_l, domain.x_r)
        w0 = _zero_extension(w0_in, domain.x_l, domain.x_r)
        du0 = dw0 = None
        if du0_in is not None:
            du0 = _zero_extension(du0_in, domain.x_l, domain.x_r)
            dw0 = _zero_extension(dw0_in, domain.x_l, domain.x_r)
        return cls(domain, eps, mu, u0, w0, du0, dw0, kind=FREE)

    @classmethod
    def robin(cls, domain, e0, h0, g_l=None, g_r=None, eps=1.0, mu=1.0):
        """Impedance walls; incoming characteristics prescribed by g_l, g_r."""
        g_l = g_l if g_l is not None else ZERO
        g_r = g_r if g_r is not None else ZERO
        c = 1.0 / math.sqrt(eps * mu)
        x_l, x_r = domain.x_l, domain.x_r
        u0_in, w0_in, du0_in, dw0_in = cls._split(e0, h0, eps, mu)

        def u0(z):
            z = np.asarray(z, dtype=float)
            inside = z > x_l
            data = np.where(z <= x_r, u0_in(np.clip(z, x_l, x_r)), 0.0)
            return np.where(inside, data, g_l((x_l - z) / c))

        def w0(z):
            z = np.asarray(z, dtype=float)
            inside = z < x_r
            data = np.where(z >= x_l, w0_in(np.clip(z, x_l, x_r)), 0.0)
            return np.where(inside, data, g_r((z - x_r) / c))

        du0 = dw0 = None
        dg_l, dg_r = _deriv_of(g_l, None), _deriv_of(g_r, None)
        if du0_in is not None and dg_l is not None and dg_r is not None:
            def du0(z):
                z = np.asarray(z, dtype=float)
                inside = z > x_l
                data = np.where(z <= x_r, du0_in(np.clip(z, x_l, x_r)), 0.0)
                return np.where(inside, data, -dg_l((x_l - z) / c) / c)

            def dw0(z):
                z = np.asarray(z, dtype=float)
                inside = z < x_r
                data = np.where(z >= x_l, dw0_in(np.clip(z, x_l, x_r)), 0.0)
                return np.where(inside, data, dg_r((z - x_r) / c) / c)

        return cls(domain, eps, mu, u0, w0, du0, dw0, kind=ROBIN)

    @classmethod
    def for_problem(cls, domain, materials, e0, h0, bc_kind, g_l=None, g_r=None):
        """Dispatch on the boundary condition; materials must be constant."""
        if not materials.is_constant:
            raise NonconstantMaterial(
                "closed-form reference needs spatially constant eps and mu"
            )
        eps, mu = materials.eps[0], materials.mu[0]
        if bc_kind == ROBIN:
            return cls.robin(domain, e0, h0, g_l, g_r, eps, mu)
        if bc_kind == FREE:
            return cls.free_space(domain, e0, h0, eps, mu)
        return cls.pec(domain, e0, h0, eps, mu)

    # -- evaluation ----------------------------------------------------

    def evaluate(self, x, t):
        """Exact fields (E, H) at points x, t (broadcastable arrays)."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        c = self.wave_speed
        u = self.u0(x - c * t)
        w = self.w0(x + c * t)
        se, sm = math.sqrt(self.eps), math.sqrt(self.mu)
        return (u + w) / (2.0 * se), (u - w) / (2.0 * sm)

    def trace(self, x, t, side=None):
        """Side-aware trace; the reference is continuous so side is ignored."""
        return self.evaluate(x, t)

    def derivatives(self, x, t):
        """(dx E, dt E, dx H, dt H); needs derivative profiles or uses FD."""
        c = self.wave_speed
        du = self._du()
        dw = self._dw()
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        a = du(x - c * t)
        b = dw(x + c * t)
        se, sm = math.sqrt(self.eps), math.sqrt(self.mu)
        ex = (a + b) / (2.0 * se)
        et = c * (-a + b) / (2.0 * se)
        hx = (a - b) / (2.0 * sm)
        ht = c * (-a - b) / (2.0 * sm)
        return ex, et, hx, ht

    def _fd(self, f):
        h = 1e-6 * max(self.domain.length, 1.0)

        def df(z):
            return (f(z + h) - f(z - h)) / (2.0 * h)

        return df

    def _du(self):
        return self.du0 if self.du0 is not None else self._fd(self.u0)

    def _dw(self):
        return self.dw0 if self.dw0 is not None else self._fd(self.w0)


def exact_field(profile, x, t):
    """Evaluate the reference fields; plain-function form of evaluate."""
    return profile.evaluate(x, t)


def _projection_residual(f, df, a, b, p, n):
    """Residual of the L2(a, b) projection of f onto P_p.

    Returns callables (e, de) for the pointwise error and its
    derivative in the argument of f.
    """
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    zq, wq = map_to_segment(n, a, b)
    xi_q = (zq - mid) / half
    V, _ = legendre_table(p, xi_q)
    vals = f(zq)
    j = np.arange(p + 1)
    coeffs = (2 * j + 1) / (2.0 * half) * ((V * wq) @ vals)

    def e(z):
        z = np.asarray(z, dtype=float)
        xi = (z - mid) / half
        Vz, _ = legendre_table(p, xi)
        return f(z) - coeffs @ Vz

    def de(z):
        z = np.asarray(z, dtype=float)
        xi = (z - mid) / half
        Vz, Dz = legendre_table(p, xi)
        return df(z) - (coeffs @ Dz) / half

    return e, de


def best_approximation_error(profile, element, p, norm="l2", n_quad=None):
    """Element error of the characteristic L2-projection onto degree p.

    Projects each transported profile onto polynomials of degree p over
    the element's domain of dependence and measures the reconstructed
    field error over the element. norm is "l2" for the plain L2 norm of
    (e_E, e_H) or "h1" for the h_D-weighted norm
    sqrt(sum_v w_v (h_D^{-1} ||v||^2 + h_D (||dx v||^2 + c^{-2}||dt v||^2)))
    applied to (sqrt(eps) e_E, sqrt(mu) e_H).
    """
    c = profile.wave_speed
    x0, x1, t0, t1 = element.x0, element.x1, element.t0, element.t1
    h_d = (x1 - x0) + c * (t1 - t0)
    n_proj = max(p + 10, 24)
    e_u, de_u = _projection_residual(profile.u0, profile._du(), x0 - c * t1, x1 - c * t0, p, n_proj)
    e_w, de_w = _projection_residual(profile.w0, profile._dw(), x0 + c * t0, x1 + c * t1, p, n_proj)

    n = n_quad if n_quad is not None else max(p + 6, 16)
    X, T, W = tensor_rule(n, n, (x0, x1, t0, t1))
    se, sm = math.sqrt(profile.eps), math.sqrt(profile.mu)
    eu = e_u(X - c * T)
    ew = e_w(X + c * T)
    e_e = (eu + ew) / (2.0 * se)
    e_h = (eu - ew) / (2.0 * sm)
    if norm == "l2":
        return float(np.sqrt(W @ (e_e**2 + e_h**2)))
    if norm != "h1":
        raise ValueError(f"unknown norm {norm!r}, expected 'l2' or 'h1'")
    deu = de_u(X - c * T)
    dew = de_w(X + c * T)
    ex = (deu + dew) / (2.0 * se)
    et = c * (-deu + dew) / (2.0 * se)
    hx = (deu - dew) / (2.0 * sm)
    ht = c * (-deu - dew) / (2.0 * sm)
    total = 0.0
    for weight, v, vx, vt in (
        (profile.eps, e_e, ex, et),
        (profile.mu, e_h, hx, ht),
    ):
        total += weight * (
            (W @ v**2) / h_d + h_d * ((W @ vx**2) + (W @ vt**2) / c**2)
        )
    return float(np.sqrt(total))
