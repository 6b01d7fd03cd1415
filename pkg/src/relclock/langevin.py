"""Comoving-mode quantum Langevin dynamics: moments, CCR, FDR checks.

A single damped bosonic mode obeys

    da/dtau = -(Gamma/2 + i E) a + F,   [F(t), F^+(t')] = Gamma delta(t - t'),

whose first and second moments close on themselves; they are evolved here in
closed form rather than sampled.  The input noise occupation ``nbar`` is the
only free noise parameter once the commutator normalization is fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .correlators import EnvironmentSpec
from .kernels import ClockKernel
from .rates import RateQuery, kappa_tcl
from .specfun import bose_occupation, integrate_adaptive

__all__ = [
    "ModeParams",
    "ModeMoments",
    "mode_evolve_moments",
    "ccr_defect",
    "stationary_fdr_check",
    "smeared_noise_spectrum",
    "write_moment_trajectory_csv",
]


@dataclass(frozen=True)
class ModeParams:
    """Mode energy, damping rate, and input-noise occupation.

    ``gamma`` may be sourced from the ideal-clock rate density at
    omega = +-E; ``nbar`` from the detailed-balance ratio of those rates.
    """

    energy_E: float
    gamma: float
    nbar: float = 0.0

    def __post_init__(self):
        if self.gamma < 0.0:
            raise ValueError("gamma must be >= 0")
        if self.nbar < 0.0:
            raise ValueError("nbar must be >= 0")


@dataclass(frozen=True)
class ModeMoments:
    """First/second moments of one mode plus CCR bookkeeping.

    ``ccr`` tracks the [a, a+] expectation, which the flow must keep at 1.
    """

    mean_a: complex = 0.0
    occupation_n: float = 0.0
    anomalous_m: complex = 0.0
    ccr: float = 1.0

    def __post_init__(self):
        if self.occupation_n < 0.0:
            raise ValueError("occupation_n must be >= 0")
        if abs(self.anomalous_m) > self.occupation_n + 0.5 + 1e-12:
            raise ValueError("anomalous moment violates |m| <= n + 1/2")


def mode_evolve_moments(p: ModeParams, m0: ModeMoments, tau: float) -> ModeMoments:
    """Closed-form moment flow over relational time ``tau``.

    mean decays at Gamma/2 with phase E; occupation relaxes to nbar at rate
    Gamma; the anomalous moment rotates at 2E while decaying at Gamma; the
    CCR bookkeeping stays at its damped-plus-noise sum, exactly 1.
    """
    if tau < 0.0:
        raise ValueError("tau must be >= 0")
    G, E, nbar = p.gamma, p.energy_E, p.nbar
    decay = math.exp(-0.5 * G * tau)
    phase = np.exp(-1j * E * tau)
    mean = m0.mean_a * decay * phase
    occ = nbar + (m0.occupation_n - nbar) * decay * decay
    anom = m0.anomalous_m * decay * decay * phase * phase
    ccr = m0.ccr * decay * decay + (1.0 - decay * decay)
    return ModeMoments(mean_a=mean, occupation_n=occ, anomalous_m=anom, ccr=ccr)


def ccr_defect(p: ModeParams, tau: float) -> float:
    """|e^{-Gamma tau} + Gamma int_0^tau e^{-Gamma(tau-u)} du - 1| by quadrature.

    The first term is the damped initial commutator, the second the noise
    contribution; their sum certifies CCR preservation along the flow.
    """
    if tau < 0.0:
        raise ValueError("tau must be >= 0")
    G = p.gamma
    if tau == 0.0 or G == 0.0:
        return 0.0
    noise = integrate_adaptive(
        lambda u: G * math.exp(-G * (tau - u)), 0.0, tau, 1e-13
    ).value
    return abs(math.exp(-G * tau) + noise - 1.0)


def stationary_fdr_check(p: ModeParams, beta: float):
    """Fluctuation-dissipation check: <{a, a+}>/2 against coth(beta E/2)/2.

    Requires ``p.nbar`` consistent with the thermal occupation at ``beta``;
    evolves the moments deep into the stationary regime (Gamma tau = 40) and
    compares the symmetrized occupation with the coth prediction.
    """
    if beta == math.inf:
        if p.nbar != 0.0:
            raise ValueError("vacuum (beta = inf) requires nbar = 0")
        expected = 0.0
    else:
        expected = bose_occupation(p.energy_E, beta)
        if abs(p.nbar - expected) > 1e-9 * max(expected, 1.0):
            raise ValueError(
                f"nbar={p.nbar!r} inconsistent with bose_occupation={expected!r}"
            )
    if p.gamma <= 0.0:
        raise ValueError("stationary limit requires gamma > 0")
    m = mode_evolve_moments(p, ModeMoments(occupation_n=7.0), 40.0 / p.gamma)
    symmetrized = m.occupation_n + 0.5
    x = beta * p.energy_E
    prediction = 0.5 if beta == math.inf else 0.5 / math.tanh(0.5 * x)
    return (symmetrized, prediction, abs(symmetrized - prediction))


def smeared_noise_spectrum(
    env: EnvironmentSpec, kernel: ClockKernel, Omega: float
) -> float:
    """Symmetrized smeared-noise spectrum (kappa(-Omega) + kappa(+Omega)) / 2.

    This is the Fourier transform of the symmetrized smeared correlator and
    matches the Kossakowski density; nonnegative by the positive-type kernel.
    """
    if abs(env.rapidity) > 1e-14:
        raise ValueError("smeared_noise_spectrum requires rapidity = 0")
    up = kappa_tcl(RateQuery(omega=+Omega, kernel=kernel, env=env))
    down = kappa_tcl(RateQuery(omega=-Omega, kernel=kernel, env=env))
    return 0.5 * (up + down)


def write_moment_trajectory_csv(path, p: ModeParams, m0: ModeMoments, taus) -> None:
    """Emit tau, re_mean, im_mean, n, re_m, im_m, ccr_defect rows."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau", "re_mean", "im_mean", "n", "re_m", "im_m", "ccr_defect"])
        for tau in taus:
            m = mode_evolve_moments(p, m0, float(tau))
            writer.writerow(
                [
                    f"{tau:.17g}",
                    f"{m.mean_a.real:.17g}",
                    f"{m.mean_a.imag:.17g}",
                    f"{m.occupation_n:.17g}",
                    f"{m.anomalous_m.real:.17g}",
                    f"{m.anomalous_m.imag:.17g}",
                    f"{ccr_defect(p, float(tau)):.17g}",
                ]
            )
