"""Closed-form and brute-force reference values, independent of the package.

Nothing here imports qforecast; every function builds its answer from
textbook formulas or from scipy's general-purpose matrix exponential.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm
from scipy.special import eval_genlaguerre


def displacement_element(m: int, n: int, alpha: complex) -> complex:
    """<m|D(alpha)|n> via the associated Laguerre form."""
    a2 = abs(alpha) ** 2
    if m >= n:
        pref = math.sqrt(math.factorial(n) / math.factorial(m)) * alpha ** (m - n)
        return pref * math.exp(-a2 / 2) * eval_genlaguerre(n, m - n, a2)
    pref = math.sqrt(math.factorial(m) / math.factorial(n)) * (-np.conj(alpha)) ** (n - m)
    return pref * math.exp(-a2 / 2) * eval_genlaguerre(m, n - m, a2)


def squeezing_element(m: int, n: int, r: float) -> float:
    """<m|S(r)|n> for S(r) = exp((r/2)(a^2 - a^dag^2)), by the finite
    double-sum formula over shared photon number k."""
    if (m + n) % 2:
        return 0.0
    t = math.tanh(r)
    sech = 1.0 / math.cosh(r)
    total = 0.0
    for k in range(min(m, n) + 1):
        if (m - k) % 2 or (n - k) % 2:
            continue
        p, q = (m - k) // 2, (n - k) // 2
        total += (
            (-t / 2) ** p
            * sech**k
            * (t / 2) ** q
            / (math.factorial(k) * math.factorial(p) * math.factorial(q))
        )
    return math.sqrt(math.factorial(m) * math.factorial(n)) / math.sqrt(math.cosh(r)) * total


def hermite_functions(nmax: int, q: np.ndarray) -> np.ndarray:
    """Normalised oscillator eigenfunctions psi_0..psi_nmax on the grid q."""
    out = np.zeros((nmax + 1, q.size))
    out[0] = math.pi**-0.25 * np.exp(-(q**2) / 2)
    if nmax >= 1:
        out[1] = math.sqrt(2) * q * out[0]
    for n in range(2, nmax + 1):
        out[n] = math.sqrt(2 / n) * q * out[n - 1] - math.sqrt((n - 1) / n) * out[n - 2]
    return out


def cubic_phase_element(m: int, n: int, gamma: float, half_width: float = 16.0, points: int = 40001) -> complex:
    """<m|exp(i gamma x^3 / 3)|n> with x = a + a^dag = sqrt(2) q, by
    quadrature in the position representation."""
    q = np.linspace(-half_width, half_width, points)
    psi = hermite_functions(max(m, n), q)
    x = math.sqrt(2) * q
    integrand = psi[m] * np.exp(1j * gamma * x**3 / 3) * psi[n]
    return complex(np.trapezoid(integrand, q) if hasattr(np, "trapezoid") else np.trapz(integrand, q))


def two_mode_ladders(dim: int):
    a = np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)
    eye = np.eye(dim)
    return np.kron(a, eye), np.kron(eye, a)


def beamsplitter_bruteforce(theta: float, phi: float, dim: int) -> np.ndarray:
    """exp(theta (e^{i phi} a^dag b - e^{-i phi} a b^dag)) on a dim^2 space.
    The generator conserves total photon number, so blocks with n1 + n2 < dim
    are exact."""
    a, b = two_mode_ladders(dim)
    gen = theta * (np.exp(1j * phi) * a.conj().T @ b - np.exp(-1j * phi) * a @ b.conj().T)
    return expm(gen)


def single_mode_expm(generator_fn, dim: int) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)
    return expm(generator_fn(a, a.conj().T))


def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff)
    fact = np.array([math.factorial(int(k)) for k in n], dtype=float)
    return np.exp(-abs(alpha) ** 2 / 2) * alpha**n / np.sqrt(fact)


def adam_reference(grads, lr=0.005, b1=0.9, b2=0.999, eps=1e-8, theta0=0.0):
    """Scalar Adam recurrence written out longhand."""
    theta, m, v = theta0, 0.0, 0.0
    out = []
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mh = m / (1 - b1**t)
        vh = v / (1 - b2**t)
        theta = theta - lr * mh / (math.sqrt(vh) + eps)
        out.append(theta)
    return out


def folded_normal_mean(sigma: float) -> float:
    return sigma * math.sqrt(2 / math.pi)
