"""High-precision reference values computed by direct substitution with mpmath.

These are independent of the library code paths: no shared helpers, 40 digits.
"""

import mpmath as mp


def rosette_constants(T, k, n, m=1.0, c=1.0, alpha=1.0):
    with mp.workdps(40):
        T, m, c, a = mp.mpf(T), mp.mpf(m), mp.mpf(c), mp.mpf(alpha)
        k, n = mp.mpf(k), mp.mpf(n)
        T_h = T / n
        # T_h = 2 pi alpha m^2 c^3 / (m^2 c^4 - h^2)^{3/2}
        gap = (2 * mp.pi * a * m**2 * c**3 / T_h) ** (mp.mpf(2) / 3)
        h = mp.sqrt(m**2 * c**4 - gap)
        # Delta theta = 2 pi k / n = 2 pi / sqrt(1 - alpha^2/(L^2 c^2))
        L = a / (c * mp.sqrt(1 - (n / k) ** 2))
        B = a * h / (L**2 * c**2 - a**2)
        e = mp.sqrt(a**2 * m**2 * c**4 - (m**2 * c**4 - h**2) * L**2 * c**2) / (L**2 * c**2 - a**2)
        E = e / B
        action = m * c**2 * T - T / c * (m ** (mp.mpf(2) / 3) * c**2 - (2 * mp.pi * a * n / T) ** (mp.mpf(2) / 3)) ** (
            mp.mpf(3) / 2
        ) + 2 * mp.pi * a / c * mp.sqrt(k**2 - n**2)
        return {
            "h": h, "L": L, "conic_B": B, "ecc_e": e, "ecc_E": E, "T_h": T_h,
            "delta_theta": 2 * mp.pi * k / n, "r_min": 1 / (B * (1 + E)), "r_max": 1 / (B * (1 - E)),
            "action": action,
        }


def threshold(k, n, m=1.0, c=1.0, alpha=1.0):
    with mp.workdps(40):
        return n * mp.mpf(k) ** 3 / (mp.mpf(k) ** 2 - n**2) ** mp.mpf(1.5) * 2 * mp.pi * alpha / (m * mp.mpf(c) ** 3)
