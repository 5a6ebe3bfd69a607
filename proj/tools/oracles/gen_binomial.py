#!/usr/bin/env python3
"""Frozen oracle values for the limit-theorem error statistics on binomials.

Conventions mirrored from the library:
  clt:       t-grid t_k = (k-500)*0.01, k = 0..1000; threshold u = E + t*sigma;
             staircase CDF with atoms included when u <= x + 1e-9.
  lattice:   sup over all atoms of |sqrt(2pi) sigma P(u) - exp(-(u-E)^2/(2 sigma^2))|.
  edgeworth: mid-lattice t_u = (u + 1/2 - E)/sigma restricted to |t_u| <= 5;
             statistic sigma * sup |CDF(u) - Phi(t_u) - kappa3/(6 sigma^3) (t^3-3t) phi(t)|,
             kappa3 = n p q (1 - 2p).
"""
import mpmath as mp

mp.mp.dps = 30


def binom_masses(n, p):
    q = 1 - p
    return [mp.binomial(n, u) * p**u * q**(n - u) for u in range(n + 1)]


def norm_cdf(t):
    return mp.erfc(-t / mp.sqrt(2)) / 2


def norm_pdf(t):
    return mp.exp(-t * t / 2) / mp.sqrt(2 * mp.pi)


def clt_error(n, p):
    masses = binom_masses(n, p)
    E = mp.mpf(n) * p
    sigma = mp.sqrt(n * p * (1 - p))
    cum = []
    acc = mp.mpf(0)
    for m in masses:
        acc += m
        cum.append(acc)

    def cdf(x):
        # largest atom u with u <= x + 1e-9
        u = int(mp.floor(x + mp.mpf("1e-9")))
        if u < 0:
            return mp.mpf(0)
        return cum[min(u, n)]

    worst = mp.mpf(0)
    for k in range(1001):
        t = mp.mpf(k - 500) / 100
        worst = max(worst, abs(cdf(E + t * sigma) - norm_cdf(t)))
    return worst


def lattice_llt_error(n, p):
    masses = binom_masses(n, p)
    E = mp.mpf(n) * p
    sigma = mp.sqrt(n * p * (1 - p))
    worst = mp.mpf(0)
    for u, m in enumerate(masses):
        gauss = mp.exp(-((u - E) ** 2) / (2 * sigma**2))
        worst = max(worst, abs(mp.sqrt(2 * mp.pi) * sigma * m - gauss))
    return worst


def edgeworth_error(n, p):
    masses = binom_masses(n, p)
    E = mp.mpf(n) * p
    sigma = mp.sqrt(n * p * (1 - p))
    k3 = mp.mpf(n) * p * (1 - p) * (1 - 2 * p)
    acc = mp.mpf(0)
    worst = mp.mpf(0)
    for u, m in enumerate(masses):
        acc += m
        t = (u + mp.mpf(1) / 2 - E) / sigma
        if abs(t) > 5:
            continue
        corr = k3 / (6 * sigma**3) * (t**3 - 3 * t) * norm_pdf(t)
        worst = max(worst, abs(acc - norm_cdf(t) - corr))
    return sigma * worst


def show(label, v):
    print(f"{label} = {mp.nstr(v, 17)}")


show("clt_100_half", clt_error(100, mp.mpf(1) / 2))
show("clt_400_half", clt_error(400, mp.mpf(1) / 2))
show("lattice_50_half", lattice_llt_error(50, mp.mpf(1) / 2))
show("lattice_200_half", lattice_llt_error(200, mp.mpf(1) / 2))
show("edgeworth_64_p03", edgeworth_error(64, mp.mpf(3) / 10))
show("edgeworth_144_p03", edgeworth_error(144, mp.mpf(3) / 10))
show("edgeworth_256_p03", edgeworth_error(256, mp.mpf(3) / 10))
show("edgeworth_64_half", edgeworth_error(64, mp.mpf(1) / 2))
