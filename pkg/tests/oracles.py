"""Brute-force references computed from photon-number-resolved yields."""
import math

import mpmath as mp


def yields(eta, y0, nmax=25):
    return [1 - (1 - y0) * (1 - eta) ** n for n in range(nmax + 1)]


def poisson_gain(mu, eta, y0, nmax=25):
    return math.fsum(math.exp(-mu) * mu**n / math.factorial(n) * y
                     for n, y in enumerate(yields(eta, y0, nmax)))


def true_q1(mu, eta, y0):
    return mu * math.exp(-mu) * (1 - (1 - y0) * (1 - eta))


def true_e1(eta, y0, e_d, e_0=0.5):
    return (e_0 * y0 + e_d * eta) / (1 - (1 - y0) * (1 - eta))


def noiseless_q1_bound(mu, nu1, dps=50):
    """Vacuum+weak bound for eta = 1, Y0 = 0, evaluated as a photon-number series."""
    with mp.workdps(dps):
        mu, nu1 = mp.mpf(mu), mp.mpf(nu1)
        tail = mp.nsum(lambda n: (nu1**n - nu1**2 * mu ** (n - 2)) / mp.factorial(n), [3, mp.inf])
        return float(mu * mp.e ** (-mu) * (1 + mu * tail / (nu1 * (mu - nu1))))
