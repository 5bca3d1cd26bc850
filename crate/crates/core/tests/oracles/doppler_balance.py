"""Arbitrary-precision reference values for the Doppler cooling balance.

Evaluates the cooling and heating powers directly in their uncancelled form
(division by the Rabi frequency squared, no algebraic simplification) and
solves the balance by bisection, independent of the Rust closed form.

Run: python3 doppler_balance.py
"""
from mpmath import mp, mpf, pi, cos, sqrt, findroot

mp.dps = 50

HBAR = mpf("1.054571817e-34")
KB = mpf("1.380649e-23")
AMU = mpf("1.66053906660e-27")

mass = 174 * AMU
gamma = 2 * pi * mpf("19.6e6")
wavelength = mpf("370e-9")
trap_omega = 2 * pi * mpf("205e3")
alpha = mpf(71) * pi / 180
xi = mpf(1) / 3
k = 2 * pi / wavelength
k_eff = k * cos(alpha)


def rho_ee(rabi, detuning):
    return rabi**2 / (4 * detuning**2 + gamma**2 + 2 * rabi**2)


def cooling(temp, rabi, detuning):
    return 8 * HBAR * k_eff**2 * detuning * gamma / rabi**2 * (KB * temp / mass) * rho_ee(rabi, detuning) ** 2


def heating(rabi, detuning, zeta):
    r = rho_ee(rabi, detuning)
    return r * gamma / (2 * mass) * (HBAR**2 * k_eff**2 + xi * HBAR**2 * k**2) + zeta * HBAR * trap_omega


def equilibrium(rabi, detuning, zeta):
    f = lambda t: cooling(t, rabi, detuning) + heating(rabi, detuning, zeta)
    lo, hi = mpf(0), mpf(1)
    for _ in range(400):
        mid = (lo + hi) / 2
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


rabi = mpf("0.23") * gamma
detuning = -2 * pi * mpf("13e6")
print("cooling_power(T=1mK, reference point) =", mp.nstr(cooling(mpf("1e-3"), rabi, detuning), 17))
print("heating_power(Omega=0, zeta=380/s) =", mp.nstr(heating(mpf(0), detuning, mpf(380)), 17))
print("equilibrium T (zeta=380/s) =", mp.nstr(equilibrium(rabi, detuning, mpf(380)), 17))
print("equilibrium T (zeta=0) =", mp.nstr(equilibrium(rabi, detuning, mpf(0)), 17))
print("ground-state width =", mp.nstr(sqrt(HBAR / (2 * mass * trap_omega)), 17))
print("doppler limit =", mp.nstr(HBAR * gamma / (2 * KB), 17))
