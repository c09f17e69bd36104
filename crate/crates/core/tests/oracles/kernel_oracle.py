"""Independent oracle for the default kernel (standard mollifier, r0 = 1/8).

Uses a spectral route (dense Simpson quadrature of the Hankel transform, then
inverse transform) which shares no code path with the crate's polar spatial
quadrature. Prints the golden values frozen in tests/kernel.rs.
"""
import mpmath as mp
import numpy as np
from scipy.integrate import simpson
from scipy.special import j0

R0 = 0.125
mp.mp.dps = 30


def profile(s):
    return mp.e ** (-1 / (1 - s * s)) if s < 1 else mp.mpf(0)


norm = 2 * mp.pi * R0 ** 2 * mp.quad(lambda s: profile(s) ** 2 * s, [0, 0.5, 0.9, 1])
A = 1 / mp.sqrt(norm)
k_int = 2 * mp.pi * R0 ** 2 * A * mp.quad(lambda s: profile(s) * s, [0, 0.5, 0.9, 1])
print("amplitude", mp.nstr(A, 17))
print("khat0", mp.nstr(k_int, 17))

rho = np.linspace(0, R0, 40001)
s = rho / R0
with np.errstate(divide="ignore", over="ignore"):
    kv = float(A) * np.where(s < 1, np.exp(-1 / (1 - np.minimum(s, 0.999999999) ** 2)), 0.0)
kv[-1] = 0.0


def khat(nu):
    nu = np.atleast_1d(nu)
    out = np.empty(nu.shape)
    for i in range(0, len(nu), 64):
        blk = nu[i:i + 64]
        out[i:i + 64] = 2 * np.pi * simpson(kv[None, :] * j0(2 * np.pi * blk[:, None] * rho[None, :]) * rho[None, :], x=rho, axis=1)
    return out


for nu in [1.0, 8.0, 40.0]:
    print("khat", nu, repr(float(khat(np.array([nu]))[0])))
print("khat_1000_abs", repr(abs(float(khat(np.array([1000.0]))[0]))))

nus = np.linspace(0, 64 / R0, 64 * 256 + 1)
kh = khat(nus)
print("plancherel", repr(float(2 * np.pi * simpson(nus * kh ** 2, x=nus))))


def c(r):
    return 2 * np.pi * simpson(kh ** 2 * j0(2 * np.pi * nus * r) * nus, x=nus)


for r in [0.0, 0.05, 0.1, 0.2]:
    print("c", r, repr(float(c(r))))

# F(r) = int_r^{2 r0} c(s)/s ds + log r, F'(r) = (1 - c(r))/r.
def F(r):
    x, w = np.polynomial.legendre.leggauss(40)
    edges = np.geomspace(r, 2 * R0, 33)
    tot = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        ss = 0.5 * (b - a) * x + 0.5 * (b + a)
        tot += 0.5 * (b - a) * sum(wi * c(si) / si for si, wi in zip(ss, w))
    return tot + np.log(r)


for r in [2.0 ** -8, 2.0 ** -10, 2.0 ** -6]:
    print("F", r, repr(float(F(r))))
r = 2.0 ** -6
print("Fprime", r, repr(float((1 - c(r)) / r)))
