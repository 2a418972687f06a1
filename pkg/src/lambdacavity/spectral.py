"""Exact eigendecomposition of a hub coupled to one satellite level and a uniform flat band.

The generator has the arrowhead form

    hub (energy h)  --g--  satellite (energy p)
    hub             --sqrt(w)--  band levels e_m = e0 + m*dw, m = 0..N-1

Eigenvalues solve the secular equation

    E - h - g²/(E - p) - w * sum_m 1/(E - e_m) = 0,

whose band sums have closed forms in digamma/trigamma functions, so each
root costs O(1) and no N x N matrix is ever formed.  There is exactly one
root between consecutive poles plus one on each side of the band, found by
vectorised bisection.  A "window" restricts the search to a range of gaps,
which is enough when the initial state overlaps a narrow energy region;
the weight that is left out is returned so callers can bound the error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import polygamma, psi

SNAP_TOL = 1e-9
# bisection stops once brackets are this small (in units of the band spacing)
_U_TOL = 1e-15


def _band_sums_inside(k, u, n):
    """sum_m 1/(x-m) and sum_m 1/(x-m)^2 for x = k + u inside gap (k, k+1), 0 < u < 1."""
    s = (psi(k + 1 + u) - psi(u)) - (psi(n - k - u) - psi(1 - u))
    s2 = (polygamma(1, u) - polygamma(1, k + 1 + u)) + (polygamma(1, 1 - u) - polygamma(1, n - k - u))
    return s, s2


def _band_sums_outside(x, n):
    """Same sums for x < 0 or x > n - 1."""
    below = x < 0
    a = np.where(below, -x, x + 1 - n)
    b = np.where(below, n - x, x + 1)
    d = psi(b) - psi(a)
    s = np.where(below, -d, d)
    s2 = polygamma(1, a) - polygamma(1, b)
    return s, s2


def _band_sum_inside(k, u, n):
    return (psi(k + 1 + u) - psi(u)) - (psi(n - k - u) - psi(1 - u))


def _band_sum_outside(x, n):
    below = x < 0
    a = np.where(below, -x, x + 1 - n)
    b = np.where(below, n - x, x + 1)
    d = psi(b) - psi(a)
    return np.where(below, -d, d)


@dataclass(frozen=True)
class Spectrum:
    """Roots and overlap weights of the arrowhead generator.

    ``sat_weight[j]`` is |<v_j|sat>|², ``cross[j]`` is <hub|v_j><v_j|sat>,
    ``hub_weight[j]`` is |<v_j|hub>|².  ``dark_energy``/``dark_weight``
    describe the eigenvector with no hub component that appears when the
    satellite is degenerate with a band level (or the satellite itself when
    it is decoupled).
    """

    energies: np.ndarray
    sat_weight: np.ndarray
    cross: np.ndarray
    hub_weight: np.ndarray
    dark_energy: float
    dark_weight: float
    n_band: int
    windowed: bool

    @property
    def omitted_sat_weight(self) -> float:
        """1 minus the satellite weight captured; exact error bound on the satellite amplitude."""
        return max(0.0, 1.0 - float(self.sat_weight.sum()) - self.dark_weight)

    @property
    def omitted_hub_weight(self) -> float:
        return max(0.0, 1.0 - float(self.hub_weight.sum()))

    def evolve(self, times, which: str = "sat") -> np.ndarray:
        """Amplitude sum_j weight_j exp(-i E_j t) for ``which`` in {sat, cross, hub}."""
        return self.evolve_many(times, (which,))[which]

    def evolve_many(self, times, which=("sat", "cross"), reseed: int = 128) -> dict:
        """Several amplitudes sharing one pass over the phase factors.

        Samples are visited in order and the phase vector is advanced by
        exp(-i E (t_n - t_{n-1})), recomputed exactly every ``reseed``
        samples so rounding drift stays near machine precision.
        """
        table = {"sat": self.sat_weight, "cross": self.cross, "hub": self.hub_weight}
        weights = np.stack([table[w] for w in which], axis=1).astype(complex)
        times = np.asarray(times, dtype=float)
        out = np.empty((len(times), len(which)), dtype=complex)
        energies = self.energies
        phase = None
        for i, ti in enumerate(times):
            if i % reseed == 0:
                phase = np.exp(-1j * energies * ti)
            else:
                dt = ti - times[i - 1]
                if dt != last_dt:
                    step = np.exp(-1j * energies * dt)
                    last_dt = dt
                phase *= step
            if i % reseed == 0:
                last_dt = None
            out[i] = phase @ weights
        result = {w: out[:, j] for j, w in enumerate(which)}
        if "sat" in result and self.dark_weight:
            result["sat"] = result["sat"] + self.dark_weight * np.exp(-1j * self.dark_energy * times)
        return result


def arrowhead_spectrum(hub: float, sat_energy: float, g: float, e0: float, dw: float, w: float,
                       n: int, window: tuple[int, int] | None = None) -> Spectrum:
    """Eigen-decompose the hub/satellite/band generator.

    Parameters
    ----------
    hub, sat_energy : float
        Diagonal energies of the hub and satellite.
    g : float
        Hub-satellite coupling; ``g = 0`` drops the satellite entirely.
    e0, dw : float
        Band levels are ``e0 + m*dw`` for ``m = 0..n-1``.
    w : float
        Squared hub-band coupling (same for every band level).
    window : (int, int), optional
        Only gaps ``kmin <= k < kmax`` are searched (plus the outer regions
        if the window touches a band edge).
    """
    if n < 2 or dw <= 0 or w < 0:
        raise ValueError("need n >= 2, dw > 0, w >= 0")
    use_sat = g != 0
    xs = (sat_energy - e0) / dw
    xs_int = math.floor(xs)
    xs_frac = xs - xs_int
    snap = False
    if use_sat and 0 <= round(xs) <= n - 1 and abs(xs - round(xs)) < SNAP_TOL:
        snap = True
        xs_int, xs_frac = int(round(xs)), 0.0
    kmin, kmax = (0, n - 1) if window is None else (max(0, window[0]), min(n - 1, window[1]))
    windowed = window is not None and (kmin > 0 or kmax < n - 1)

    # inner brackets in (gap index, u_lo, u_hi) form
    ks = np.arange(kmin, kmax)
    ulo = np.zeros(len(ks))
    uhi = np.ones(len(ks))
    if use_sat and not snap and kmin <= xs_int < kmax:
        j = xs_int - kmin
        ks = np.insert(ks, j + 1, xs_int)
        ulo = np.insert(ulo, j + 1, xs_frac)
        uhi = np.insert(uhi, j + 1, 1.0)
        uhi[j] = xs_frac

    gg = g * g if use_sat else 0.0
    radius = (abs(hub - e0) + abs(sat_energy - e0) + math.sqrt(gg + n * w) + 1.0) / dw + n + 1.0

    def secular_inside(k, u):
        offset = ((k - xs_int) + (u - xs_frac)) * dw  # E - sat_energy, without cancellation
        energy = sat_energy + offset
        sat = gg / offset if use_sat else 0.0
        return energy - hub - sat - w * _band_sum_inside(k, u, n) / dw

    lo, hi = ulo.copy(), uhi.copy()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        pos = secular_inside(ks, mid) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
        if not len(ks) or np.max(hi - lo) <= _U_TOL:
            break
    u = 0.5 * (lo + hi)
    offset_in = ((ks - xs_int) + (u - xs_frac)) * dw
    energy_in = offset_in + sat_energy
    s_in, s2_in = _band_sums_inside(ks, u, n)

    # outer brackets in absolute x = (E - e0)/dw
    outer = []
    if kmin == 0:
        outer.append((-radius, 0.0))
    if kmax == n - 1:
        outer.append((n - 1.0, n - 1.0 + radius))
    olo, ohi = [], []
    for a, b in outer:
        if use_sat and not snap and a < xs < b:
            olo += [a, xs]
            ohi += [xs, b]
        else:
            olo.append(a)
            ohi.append(b)
    olo, ohi = np.array(olo), np.array(ohi)

    def secular_outside(x):
        energy = e0 + x * dw
        sat = gg / (energy - sat_energy) if use_sat else 0.0
        return energy - hub - sat - w * _band_sum_outside(x, n) / dw

    for _ in range(400):
        if not len(olo):
            break
        mid = 0.5 * (olo + ohi)
        pos = secular_outside(mid) > 0
        ohi = np.where(pos, mid, ohi)
        olo = np.where(pos, olo, mid)
        if np.all(ohi - olo <= 4e-16 * np.maximum(1.0, np.abs(ohi))):
            break
    x_out = 0.5 * (olo + ohi)
    energy_out = e0 + x_out * dw
    s_out, s2_out = _band_sums_outside(x_out, n) if len(x_out) else (np.zeros(0), np.zeros(0))

    energies = np.concatenate([energy_in, energy_out])
    s2 = np.concatenate([s2_in, s2_out])
    if use_sat:
        ratio = g / np.concatenate([offset_in, energy_out - sat_energy])
    else:
        ratio = np.zeros_like(energies)
    norm = 1.0 + ratio**2 + w * s2 / dw**2
    hub_weight = 1.0 / norm
    sat_weight = ratio**2 / norm
    cross = ratio / norm
    order = np.argsort(energies)
    if not use_sat:
        dark_weight = 1.0  # decoupled satellite just keeps its phase
    else:
        dark_weight = w / (w + gg) if snap else 0.0
    return Spectrum(energies[order], sat_weight[order], cross[order], hub_weight[order],
                    float(sat_energy), dark_weight, n, windowed)


def window_around(energy: float, e0: float, dw: float, n: int, half_gaps: int) -> tuple[int, int]:
    """Gap window of ``2 * half_gaps`` gaps centred on ``energy`` (clipped to the band)."""
    centre = min(max(int(math.floor((energy - e0) / dw)), 0), n - 2)
    return max(0, centre - half_gaps), min(n - 1, centre + half_gaps)
