"""Independent 50-digit reference evaluations of the kernel families.

Each kernel is written directly from its closed form with mpmath.  Limit
branches (gamma, mu, mu1, mu2 equal to 0) are evaluated with the parameter
replaced by 1e-12; the limit error is O(1e-24).  Derivatives
come from mpmath's numerical differentiation at the same precision.
"""
import mpmath as mp

from sesquiop import Family

mp.mp.dps = 50
TINY = mp.mpf("1e-12")


def _nz(v):
    v = mp.mpc(v)
    return v if v != 0 else mp.mpc(TINY)


def kernel(spec):
    """Return z -> k(z) as an mpmath function for ``spec``."""
    s = spec
    tau = mp.mpc(s.tau)
    scale = mp.mpf(s.scale)
    if s.family is Family.ITEM1:
        g, mu = _nz(s.gamma), _nz(s.mu)

        def base(z):
            return g * mp.sinh(mu * z) / (mu * mp.sinh(g * z))
    elif s.family is Family.ITEM2:
        a, mu = mp.mpf(s.alpha), mp.mpf(s.mu.real)

        def base(z):
            return a * mp.exp(-1j * mu * z) + mp.sin(mu * z) / z
    elif s.family is Family.ITEM3:
        m1, m2 = _nz(s.mu1), _nz(s.mu2)

        def base(z):
            q = mp.pi / 4
            num = (mp.sinh(2 * m2) * mp.sinh(m1 * z) * mp.exp(-1j * q * z)
                   + mp.sinh(2 * m1) * mp.sinh(m2 * z) * mp.exp(1j * q * z))
            return num / (m1 * m2 * mp.sin(mp.pi * z / 2))
    else:
        def base(z):
            q = mp.pi / 4
            return mp.exp(-1j * q * z) / mp.cos(q * z) + z * mp.exp(1j * q * z) / mp.sin(2 * q * z)

    def k(z):
        z = mp.mpf(z) if not isinstance(z, mp.mpc) else z
        return scale * mp.exp(tau * z) * base(z)

    return k


def coefficients(spec):
    """Return (b, c) as mpmath functions, gauge applied."""
    s = spec
    if s.family is Family.ITEM1:
        g, mu = _nz(s.gamma), mp.mpc(s.mu)

        def b(y):
            return (mp.cosh(2 * g * y) - mp.cosh(2 * g)) / (2 * g * g)

        def c(y):
            return (g * g - mu * mu) * b(y) + mp.mpc(s.c0)
    elif s.family is Family.ITEM2:
        a, mu = mp.mpf(s.alpha), mp.mpf(s.mu.real)

        def b(y):
            return y * y - 1

        def c(y):
            return 1j * mu * 2 * y + mu * mu * b(y) + mu / a
    elif s.family is Family.ITEM3:
        m1, m2 = mp.mpc(s.mu1), mp.mpc(s.mu2)

        def b(y):
            return -mp.cos(mp.pi * y / 2)

        def c(y):
            bp = mp.pi / 2 * mp.sin(mp.pi * y / 2)
            out = 1j * (m2 ** 2 - m1 ** 2) / mp.pi * bp - (mp.pi ** 2 / 16 + (m1 ** 2 + m2 ** 2) / 2) * b(y)
            if s.special_coeff != 0:
                mu = m1.imag
                sgn = 1 if s.special_sign == "+" else -1
                out += mp.mpc(s.special_coeff) * mp.exp(-2j * (mp.pi / 4 + sgn * mu) * y)
            return out
    else:
        def b(y):
            return -mp.cos(mp.pi * y / 2)

        def c(y):
            return mp.pi ** 2 / 32 * mp.exp(1j * mp.pi * y / 2)

    tau = mp.mpc(s.tau)
    if tau == 0:
        return b, c

    def bt(y):
        return mp.exp(-2 * tau * y) * b(y)

    def ct(y):
        return mp.exp(-2 * tau * y) * (c(y) - tau * mp.diff(b, y) + tau * tau * b(y))

    return bt, ct


def to_complex(v):
    return complex(v)


def deriv(f, z, m):
    """m-th derivative of the oracle at z, stepping just inside [-2, 2] at the ends."""
    with mp.workdps(150):
        zz = mp.mpf(z)
        if abs(zz) == 2:
            zz -= mp.sign(zz) * mp.mpf("1e-100")
        elif zz == 0:
            zz = mp.mpf("1e-100")
        return complex(mp.diff(f, zz, m, h=mp.mpf("1e-40")))
