#!/usr/bin/env python3
"""Regenerates crates/core/data/tissue_properties.csv.

Conductivity and relative permittivity come from the four-term Cole-Cole
tissue parametrization that also underlies the IT'IS tissue property
database, evaluated on a log-spaced grid from 1 kHz to 10 MHz.
"""
import math
import sys

EPS0 = 8.8541878128e-12

# name: (eps_inf, (d1, tau1_ps, a1), (d2, tau2_ns, a2), sigma_ionic,
#        (d3, tau3_us, a3), (d4, tau4_ms, a4))
TISSUES = {
    "skin": (4.0, (32.0, 7.234, 0.00), (1100.0, 32.481, 0.20), 0.0002,
             (0.0, 159.155, 0.20), (0.0, 15.915, 0.20)),
    "fat": (2.5, (3.0, 7.958, 0.20), (15.0, 15.915, 0.10), 0.010,
            (3.3e4, 159.155, 0.05), (1.0e7, 7.958, 0.01)),
    "muscle": (4.0, (50.0, 7.234, 0.10), (7000.0, 353.678, 0.10), 0.200,
               (1.2e6, 318.310, 0.10), (2.5e7, 2.274, 0.00)),
    "cortical_bone": (2.5, (10.0, 13.263, 0.20), (180.0, 79.577, 0.20), 0.020,
                      (5.0e3, 159.155, 0.20), (1.0e5, 15.915, 0.00)),
    "cancellous_bone": (2.5, (18.0, 13.263, 0.22), (300.0, 79.577, 0.25), 0.070,
                        (2.0e4, 159.155, 0.20), (2.0e7, 15.915, 0.00)),
}


def properties(params, f):
    eps_inf, t1, t2, sig, t3, t4 = params
    w = 2 * math.pi * f
    eps = complex(eps_inf, 0.0)
    for (d, tau, a), unit in ((t1, 1e-12), (t2, 1e-9), (t3, 1e-6), (t4, 1e-3)):
        if d:
            eps += d / (1 + (1j * w * tau * unit) ** (1 - a))
    eps += sig / (1j * w * EPS0)
    return -eps.imag * w * EPS0, eps.real


def main(out):
    freqs = [10 ** (3 + i / 10) for i in range(41)]
    out.write("frequency_hz,tissue_name,sigma_s_per_m,eps_r\n")
    for name, params in TISSUES.items():
        for f in freqs:
            s, e = properties(params, f)
            out.write(f"{f:.6g},{name},{s:.6g},{e:.6g}\n")


if __name__ == "__main__":
    main(sys.stdout)
