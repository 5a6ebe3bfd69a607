#!/usr/bin/env python3
"""Closed-form oracle values for the smoothed-density (Fejer tent) integrals.

Prints exact/analytic values that are frozen into tests/test_dist.cpp.
"""
import mpmath as mp

mp.mp.dps = 30

# Tent kernel at 0: (1/2pi) * int_{-T0}^{T0} (1 - |t|/T0) dt = T0/(2pi)
for T0 in (1, 8):
    print(f"point_mass_value T0={T0}: {mp.nstr(T0 / (2 * mp.pi), 17)}")

# Fair-coin first-symbol observable, n = 1, u = 0, T0 = 1:
#   (1/2pi) int_{-1}^{1} (1-|t|) * (1 + e^{it})/2 dt
#   = (1/4pi) [ int (1-|t|) dt + int (1-|t|) cos t dt ]
#   = (1/4pi) [ 1 + 2(1 - cos 1) ]
val = (1 + 2 * (1 - mp.cos(1))) / (4 * mp.pi)
print("coin_n1_u0_T0_1:", mp.nstr(val, 17))

# Same by direct numerical quadrature as an independent check.
f = lambda t: (1 - abs(t)) * (1 + mp.cos(t)) / 2
val2 = mp.quad(f, [-1, 0, 1]) / (2 * mp.pi)
print("coin_n1_u0_T0_1 (quad):", mp.nstr(val2, 17))

# Coin characteristic function (1 + e^{it})^n / 2^n pins.
phi = lambda t, n: ((1 + mp.e**(1j * t)) / 2) ** n
print("coin_phi n=2 t=pi/2:", mp.nstr(phi(mp.pi / 2, 2), 17))
print("coin_phi n=3 t=1:", mp.nstr(phi(1, 3), 17))

# Coin n = 4, u = 2 smoothed with T0 = 8 (for a regression pin):
#   (1/2pi) int_{-8}^{8} (1-|t|/8) phi4(t) e^{-2it} dt
g = lambda t: (1 - abs(t) / 8) * phi(t, 4) * mp.e**(-2j * t)
val3 = mp.quad(g, [-8, 0, 8]) / (2 * mp.pi)
print("coin_n4_u2_T0_8:", mp.nstr(val3, 17))
