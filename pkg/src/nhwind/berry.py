"""Biorthogonal Berry phases along tracked spectral loops.

For a non-Hermitian two-band model the energy branches can braid: after
one Brillouin zone the branches swap, and an eigenstate only returns to
itself after two.  The objects here follow one branch by continuity,
detect the true closure period (2 pi or 4 pi), and integrate the
biorthogonal Berry connection

    f(k) = <<l(k)| d/dk |u(k)>> / <<l(k)|u(k)>>

along the whole closed loop, where ``l`` is the gauge's left partner:
the row of the inverse eigenvector matrix in the component gauges
(``l @ u = 1`` there, so the division is trivial) and the transpose of
``u`` itself in the transpose gauge (where ``l @ u = u^T u`` genuinely
normalizes).  The loop phase is

    gamma_b = -i * integral of f over the loop, taken forward
              (increasing k),

an orientation convention fixed once and for all by requiring the
reference dimerized chain (:func:`nhwind.bloch.demo`) to come out with
winding +1; every quantity in this module and in the command line uses
it consistently.  ``winding_number`` divides by pi, and
``winding_lee`` further divides by a per-Brillouin-zone normalization
constant, which reproduces a fractional count whenever the loop period
is not 2 pi times that constant.

Per-band segment integrals over a single Brillouin zone
(:func:`band_winding`) and the two halves of a braided loop
(:func:`split_check`) use the same orientation map ``w = -i I / pi``,
so the two halves of a 4 pi loop sum exactly to the full loop winding.

Connections in a component gauge can develop poles where the fixed
component of the eigenvector crosses zero between grid points, and the
transpose pairing can pass through zero the same way.  When a single
grid sample contributes more than 0.5 to the integral the pole is
unresolvable at any grid, and :class:`~nhwind.bloch.GaugeSingular` is
raised rather than returning grid-dependent junk.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Callable

import numpy as np

from .bloch import (BlochModel, Defective, Gauge, GaugeSingular, hk,
                    hk_derivative)

__all__ = [
    "AmbiguousTracking",
    "NoClosure",
    "Band",
    "LoopTrajectory",
    "WindingReport",
    "SplitWindings",
    "loop_period",
    "berry_phase",
    "winding_number",
    "winding_lee",
    "band_winding",
    "split_check",
    "winding_report",
]

# Relative closure tolerance on (energy, gauge component) at the loop end.
CLOSURE_TOL = 1e-8
# Two candidate continuations closer than this are a tie.
TIE_TOL = 1e-10
# A single sample contributing more than this to the connection integral
# means an unresolvable pole sits between grid points.
POLE_TOL = 0.5
# An exceptional point sitting exactly on a grid sample is smeared by
# float rounding into a splitting of order sqrt(eps) ~ 1.5e-8, so any
# eigenvector pair closer than ~10x that floor is indistinguishable
# from a genuinely defective sample.
PATH_DEFECTIVE_TOL = 1e-7
GAUGE_TOL = 1e-12


class Band(IntEnum):
    """Which of the two energy branches tracking starts on.

    ``PLUS`` is the branch of the principal square root at k = 0,
    ``MINUS`` the other.  Members compare equal to the integers +1 and
    -1, and every op taking a band accepts those integers directly.
    """

    PLUS = +1
    MINUS = -1


class AmbiguousTracking(RuntimeError):
    """Branch continuation cannot be decided: the two candidates are
    equally close in energy and the eigenvector overlaps do not break
    the tie either."""


class NoClosure(RuntimeError):
    """The tracked branch fails to return to its starting state after
    two Brillouin zones (or the stored loop data violate closure)."""


def _track_branches(e1: np.ndarray, e2: np.ndarray, band: int,
                    resolver: Callable[[int, complex],
                                       tuple[float, float]] | None = None,
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Follow one energy branch through the sample arrays by continuity.

    ``e1``/``e2`` hold the two closed-form roots at each momentum in a
    fixed (unordered) labeling.  Tracking starts on ``e1`` for
    ``Band.PLUS`` and on ``e2`` for ``Band.MINUS`` and always continues
    to the nearer candidate.  On a distance tie,
    ``resolver(j, previous_other_energy)`` must return the eigenvector
    overlaps of the two candidates with the previous state; a missing
    resolver or an overlap tie raises :class:`AmbiguousTracking`.

    Returns ``(tracked, other)`` energy arrays.
    """
    e1 = np.asarray(e1, dtype=complex)
    e2 = np.asarray(e2, dtype=complex)
    if e1.shape != e2.shape or e1.ndim != 1:
        raise ValueError("branch arrays must be equal-length 1-d")
    band = Band(band)
    n = e1.size
    tracked = np.empty(n, dtype=complex)
    other = np.empty(n, dtype=complex)
    cur, oth = (e1[0], e2[0]) if band is Band.PLUS else (e2[0], e1[0])
    tracked[0], other[0] = cur, oth
    for j in range(1, n):
        d1 = abs(e1[j] - cur)
        d2 = abs(e2[j] - cur)
        if abs(d1 - d2) <= TIE_TOL * max(1.0, abs(cur)):
            if resolver is None:
                raise AmbiguousTracking(
                    f"energy tie at sample {j} with no overlap data")
            o1, o2 = resolver(j, complex(oth))
            if abs(o1 - o2) <= TIE_TOL * max(o1, o2, 1e-300):
                raise AmbiguousTracking(
                    f"energy and overlap tie at sample {j}")
            take1 = o1 > o2
        else:
            take1 = d1 < d2
        cur, oth = (e1[j], e2[j]) if take1 else (e2[j], e1[j])
        tracked[j], other[j] = cur, oth
    return tracked, other


def _roots(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a, b = h[..., 0, 0], h[..., 0, 1]
    c, d = h[..., 1, 0], h[..., 1, 1]
    m = 0.5 * (a + d)
    s = np.sqrt(m * m - (a * d - b * c))
    e1 = m + s
    e2 = (a + d) - e1
    return e1, e2


def _raw_vectors(h: np.ndarray, energy: np.ndarray) -> np.ndarray:
    """Unit right eigenvectors from the larger row candidate (vectorized)."""
    a, b = h[..., 0, 0], h[..., 0, 1]
    c, d = h[..., 1, 0], h[..., 1, 1]
    c1 = np.stack([b, energy - a], axis=-1)
    c2 = np.stack([energy - d, c], axis=-1)
    n1 = np.linalg.norm(c1, axis=-1)
    n2 = np.linalg.norm(c2, axis=-1)
    raw = np.where((n1 >= n2)[..., None], c1, c2)
    nrm = np.linalg.norm(raw, axis=-1)
    if np.any(nrm <= 1e-14 * (np.linalg.norm(h, axis=(-2, -1)) + abs(energy))):
        raise AmbiguousTracking(
            "scalar Hamiltonian sample on the loop: branches carry no "
            "eigenvector identity to track")
    return raw / nrm[..., None]


def _energy_derivative(h: np.ndarray, dh: np.ndarray, e_tracked: np.ndarray,
                       e_other: np.ndarray) -> np.ndarray:
    """dE/dk of the tracked branch, gauge independent (vectorized).

    Sandwiches dh/dk between the tracked right eigenvector and the left
    direction built from the adjugate of the *other* branch's right
    vector, which annihilates that branch.  Valid for any
    diagonalizable h; no gauge normalization enters because numerator
    and denominator carry the same arbitrary scales.
    """
    r_t = _raw_vectors(h, e_tracked)
    r_o = _raw_vectors(h, e_other)
    l_dir = np.stack([r_o[..., 1], -r_o[..., 0]], axis=-1)
    num = np.einsum("...i,...ij,...j->...", l_dir, dh, r_t)
    den = np.einsum("...i,...i->...", l_dir, r_t)
    return num / den


def _free_component(h: np.ndarray, energy: np.ndarray, gauge: Gauge,
                    ) -> np.ndarray:
    """Gauge-fixed free component of the right eigenvector.

    ``psi`` (second entry of ``u = (1, psi)``) for the first-component
    and transpose gauges, ``phi`` (first entry of ``u = (phi, 1)``) for
    the second-component gauge.  Each is taken from whichever matrix
    row gives the larger denominator.
    """
    a, b = h[..., 0, 0], h[..., 0, 1]
    c, d = h[..., 1, 0], h[..., 1, 1]
    if gauge is Gauge.SECOND_COMPONENT_ONE:
        den1, den2 = energy - a, c
        num1, num2 = b, energy - d
    else:
        den1, den2 = b, energy - d
        num1, num2 = energy - a, c
    use1 = abs(den1) >= abs(den2)
    den = np.where(use1, den1, den2)
    num = np.where(use1, num1, num2)
    norms = np.sqrt(abs(den) ** 2 + abs(num) ** 2)
    bad = abs(den) < GAUGE_TOL * norms
    if np.any(bad):
        raise GaugeSingular(
            f"gauge {gauge.value!r} component vanishes at "
            f"{int(np.count_nonzero(bad))} loop sample(s)")
    return num / den


def _free_derivative(h: np.ndarray, dh: np.ndarray, energy: np.ndarray,
                     denergy: np.ndarray, gauge: Gauge) -> np.ndarray:
    """k-derivative of the free component, via the quotient rule on the
    same row that :func:`_free_component` picked."""
    a, b = h[..., 0, 0], h[..., 0, 1]
    c, d = h[..., 1, 0], h[..., 1, 1]
    da, db = dh[..., 0, 0], dh[..., 0, 1]
    dc, dd = dh[..., 1, 0], dh[..., 1, 1]
    if gauge is Gauge.SECOND_COMPONENT_ONE:
        # phi = b/(E-a) or (E-d)/c
        use1 = abs(energy - a) >= abs(c)
        r1 = (db * (energy - a) - b * (denergy - da)) / (energy - a) ** 2
        r2 = ((denergy - dd) * c - (energy - d) * dc) / c ** 2
    else:
        # psi = (E-a)/b or c/(E-d)
        use1 = abs(b) >= abs(energy - d)
        r1 = ((denergy - da) * b - (energy - a) * db) / (b * b)
        r2 = (dc * (energy - d) - c * (denergy - dd)) / (energy - d) ** 2
    return np.where(use1, r1, r2)


def _gauge_vectors(free_t: np.ndarray, free_o: np.ndarray, gauge: Gauge,
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Right and left vectors (u, l) per sample in the requested gauge.

    Component gauges pair biorthonormally (``l @ u = 1`` exactly); the
    transpose gauge stores ``l = u`` verbatim, leaving the pairing
    ``u^T u`` to be divided out by the connection.
    """
    ones = np.ones_like(free_t)
    if gauge is Gauge.SECOND_COMPONENT_ONE:
        u = np.stack([free_t, ones], axis=-1)
        sep = free_t - free_o
        _check_separation(sep, free_t, free_o)
        l = np.stack([ones, -free_o], axis=-1) / sep[..., None]
    elif gauge is Gauge.FIRST_COMPONENT_ONE:
        u = np.stack([ones, free_t], axis=-1)
        sep = free_o - free_t
        _check_separation(sep, free_t, free_o)
        l = np.stack([free_o, -ones], axis=-1) / sep[..., None]
    else:
        u = np.stack([ones, free_t], axis=-1)
        pairing = 1.0 + free_t * free_t
        scale = 1.0 + abs(free_t) ** 2
        if np.any(abs(pairing) < GAUGE_TOL * scale):
            raise GaugeSingular(
                "self-orthogonal transpose pairing on the loop")
        l = u.copy()
    return u, l


def _check_separation(sep: np.ndarray, free_t: np.ndarray,
                      free_o: np.ndarray) -> None:
    scale = 1.0 + abs(free_t) + abs(free_o)
    if np.any(abs(sep) < GAUGE_TOL * scale):
        raise Defective(
            "eigenvector components of the two branches coincide")


def _check_diagonalizable(h: np.ndarray, e_t: np.ndarray, e_o: np.ndarray,
                          k: np.ndarray) -> None:
    """Raise :class:`Defective` if branches are parallel at any sample.

    The determinant ratio is symmetric in the two branches, so the check
    runs on the raw (untracked) root pair and catches an exceptional
    point before branch tracking can trip over its degenerate tie.
    """
    u_t = _raw_vectors(h, e_t)
    u_o = _raw_vectors(h, e_o)
    det = u_t[..., 0] * u_o[..., 1] - u_t[..., 1] * u_o[..., 0]
    gram = abs(np.einsum("...i,...i->...", np.conj(u_t), u_o))
    ratio = abs(det) / (1.0 + gram)
    bad = ratio < PATH_DEFECTIVE_TOL
    if np.any(bad):
        j = int(np.argmax(bad))
        raise Defective(
            f"non-diagonalizable point near k = {float(k[j]):.6f} "
            f"(singular-value ratio {float(ratio[j]):.2e})")


def _overlap_resolver(h: np.ndarray, e1: np.ndarray, e2: np.ndarray,
                      ) -> Callable[[int, complex], tuple[float, float]]:
    """Tie-breaker: overlap of each candidate with the previous state.

    The previous left direction is the adjugate row of the previous
    *other*-branch vector, so it annihilates the branch a crossover
    would land on and is maximal on the true continuation.
    """
    def resolve(j: int, prev_other_energy: complex) -> tuple[float, float]:
        prev_other = _raw_vectors(h[j - 1], np.asarray(prev_other_energy))
        l_dir = np.array([prev_other[1], -prev_other[0]], dtype=complex)
        l_dir /= np.linalg.norm(l_dir)
        out = []
        for cand in (e1[j], e2[j]):
            u = _raw_vectors(h[j], np.asarray(cand))
            out.append(float(abs(l_dir @ u)))
        return out[0], out[1]
    return resolve


def _tracked_segment(model: BlochModel, k_inc: np.ndarray, gauge: Gauge,
                     start_band: Band):
    """Track one branch over an inclusive momentum grid.

    Shared front end of the loop and segment integrators: builds the
    Hamiltonian samples, tracks the branch with the overlap tie-break,
    and runs the per-sample health checks.  Returns
    ``(h, tracked, other, free_tracked, free_other)``.
    """
    h = hk(model, k_inc)
    e1, e2 = _roots(h)
    _check_diagonalizable(h, e1, e2, k_inc)
    try:
        e_t, e_o = _track_branches(e1, e2, start_band,
                                   _overlap_resolver(h, e1, e2))
    except AmbiguousTracking as exc:
        raise AmbiguousTracking(f"{exc} (of {k_inc.size} samples on "
                                f"[0, {k_inc[-1]:.6f}])") from exc
    free_t = _free_component(h, e_t, gauge)
    free_o = _free_component(h, e_o, gauge)
    return h, e_t, e_o, free_t, free_o


@dataclass(frozen=True)
class LoopTrajectory:
    """One spectral branch tracked around its full closed loop.

    Samples live on the half-open interval ``[0, period)`` with uniform
    spacing; the state at ``period`` equals the state at ``0`` within
    ``CLOSURE_TOL`` (that mismatch is recorded as ``closure_error``).
    ``states`` holds the gauge-fixed right vectors and ``left_states``
    their left partners: rows of the inverse eigenvector matrix in the
    component gauges, the right vectors themselves (transpose pairing)
    in the transpose gauge.  Construction re-validates continuity (each
    step stays on the nearest branch up to the tracking tie band), the
    left/right pairing rule of the gauge, and closure; violations raise
    ``ValueError`` or :class:`NoClosure`.
    """

    model: BlochModel
    gauge: Gauge
    start_band: Band
    period: float
    k_grid: np.ndarray
    energies: np.ndarray
    energies_other: np.ndarray
    states: np.ndarray
    left_states: np.ndarray
    closure_error: float

    def __post_init__(self) -> None:
        k = np.asarray(self.k_grid, dtype=float)
        e_t = np.asarray(self.energies, dtype=complex)
        e_o = np.asarray(self.energies_other, dtype=complex)
        u = np.asarray(self.states, dtype=complex)
        l = np.asarray(self.left_states, dtype=complex)
        m = k.size
        if m < 4:
            raise ValueError("a loop needs at least 4 samples")
        if not (e_t.shape == e_o.shape == (m,) and u.shape == l.shape == (m, 2)):
            raise ValueError("sample arrays have inconsistent shapes")
        object.__setattr__(self, "start_band", Band(self.start_band))
        if not (self.period > 0 and abs(k[0]) <= 1e-12):
            raise ValueError("loop must start at k = 0 with positive period")
        step = self.period / m
        if np.max(np.abs(np.diff(k) - step)) > 1e-9:
            raise ValueError("loop samples must be uniformly spaced")
        # Continuity: each step (including the wrap back to k = 0) must
        # stay on the nearest branch, up to the tracking tie band inside
        # which the overlap resolver may pick the energy-farther one.
        nxt = np.roll(e_t, -1)
        nxt_other = np.roll(e_o, -1)
        slack = TIE_TOL * np.maximum(1.0, np.abs(e_t))
        if np.any(np.abs(nxt - e_t) > np.abs(nxt_other - e_t) + slack):
            raise ValueError("stored samples are not a continuously "
                             "tracked branch")
        pairing = np.einsum("mi,mi->m", l, u)
        if self.gauge is Gauge.TRANSPOSE:
            if not np.array_equal(l, u):
                raise ValueError("transpose-gauge loops store left_states "
                                 "equal to states verbatim")
            norms_sq = np.sum(np.abs(u) ** 2, axis=-1)
            if np.any(np.abs(pairing) < GAUGE_TOL * norms_sq):
                raise GaugeSingular(
                    "stored loop contains a self-orthogonal sample")
        elif np.max(np.abs(pairing - 1.0)) > 1e-9:
            raise ValueError("stored left/right pairs are not "
                             "biorthonormalized")
        if not (np.isfinite(self.closure_error)
                and self.closure_error >= 0.0):
            raise ValueError("closure_error must be a non-negative number")
        if self.closure_error > CLOSURE_TOL:
            raise NoClosure(
                f"loop endpoint misses its start by {self.closure_error:.3e} "
                f"(tolerance {CLOSURE_TOL:.0e})")
        for name, arr in (("k_grid", k), ("energies", e_t),
                          ("energies_other", e_o), ("states", u),
                          ("left_states", l)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def grid_size(self) -> int:
        """Samples per single Brillouin zone."""
        return int(round(self.k_grid.size * 2.0 * np.pi / self.period))

    @property
    def step(self) -> float:
        return self.period / self.k_grid.size


def loop_period(model: BlochModel, grid_size: int = 8192,
                gauge: Gauge = Gauge.TRANSPOSE,
                start_band: Band = Band.PLUS) -> LoopTrajectory:
    """Track one branch until it closes; return the full loop.

    Probes one Brillouin zone first, then two; the detected period is
    the ``period`` field of the returned trajectory.  ``grid_size`` is
    the number of samples per Brillouin zone and must be even and at
    least 64.  Raises :class:`NoClosure` if the state does not return
    after two zones, :class:`AmbiguousTracking` on an unresolvable
    branch tie, and :class:`~nhwind.bloch.Defective` /
    :class:`~nhwind.bloch.GaugeSingular` on per-sample pathologies.
    """
    if grid_size < 64 or grid_size % 2:
        raise ValueError(f"grid_size must be even and >= 64, "
                         f"got {grid_size}")
    start_band = Band(start_band)
    step = 2.0 * np.pi / grid_size
    closure = np.inf
    for zones in (1, 2):
        m = zones * grid_size
        k_inc = np.arange(m + 1) * step
        _, e_t, e_o, free_t, free_o = _tracked_segment(
            model, k_inc, gauge, start_band)
        err_e = abs(e_t[-1] - e_t[0]) / max(1.0, abs(e_t[0]))
        err_f = abs(free_t[-1] - free_t[0]) / max(1.0, abs(free_t[0]))
        closure = float(max(err_e, err_f))
        if closure <= CLOSURE_TOL:
            u, l = _gauge_vectors(free_t[:-1], free_o[:-1], gauge)
            return LoopTrajectory(
                model=model, gauge=gauge, start_band=start_band,
                period=zones * 2.0 * np.pi, k_grid=k_inc[:-1],
                energies=e_t[:-1], energies_other=e_o[:-1],
                states=u, left_states=l, closure_error=closure)
    raise NoClosure(
        f"branch of {model.label} fails to close after two Brillouin "
        f"zones (final mismatch {closure:.3e})")


def _analytic_du(model: BlochModel, k: np.ndarray, h: np.ndarray,
                 e_t: np.ndarray, e_o: np.ndarray, gauge: Gauge,
                 ) -> np.ndarray:
    """d u / d k per sample: quotient rule on the free component."""
    dh = hk_derivative(model, k)
    de = _energy_derivative(h, dh, e_t, e_o)
    dfree = _free_derivative(h, dh, e_t, de, gauge)
    zeros = np.zeros_like(dfree)
    if gauge is Gauge.SECOND_COMPONENT_ONE:
        return np.stack([dfree, zeros], axis=-1)
    return np.stack([zeros, dfree], axis=-1)


def _connection_samples(traj: LoopTrajectory, derivative: str) -> np.ndarray:
    """Berry connection f(k) at every stored loop sample."""
    dk = traj.step
    if derivative == "analytic":
        h = hk(traj.model, traj.k_grid)
        du = _analytic_du(traj.model, traj.k_grid, h, traj.energies,
                          traj.energies_other, traj.gauge)
    elif derivative == "fd4":
        u = traj.states
        du = (-np.roll(u, -2, axis=0) + 8.0 * np.roll(u, -1, axis=0)
              - 8.0 * np.roll(u, 1, axis=0) + np.roll(u, 2, axis=0)
              ) / (12.0 * dk)
    else:
        raise ValueError(f"derivative must be 'analytic' or 'fd4', "
                         f"got {derivative!r}")
    num = np.einsum("mi,mi->m", traj.left_states, du)
    den = np.einsum("mi,mi->m", traj.left_states, traj.states)
    f = num / den
    _pole_guard(f, dk)
    return f


def _pole_guard(f: np.ndarray, dk: float) -> None:
    worst = float(np.max(np.abs(f))) * dk
    if not np.isfinite(worst) or worst > POLE_TOL:
        raise GaugeSingular(
            f"connection pole between grid points: one sample "
            f"contributes {worst:.3g} to the integral; no grid "
            f"refinement can resolve this in a component gauge")


def berry_phase(traj: LoopTrajectory, derivative: str = "analytic",
                ) -> complex:
    """Loop Berry phase ``gamma_b = -i * forward connection integral``.

    Uses the periodic trapezoid rule (a plain sample mean times the
    period) on the closed loop.  The default analytic derivative
    applies the quotient rule to the gauge-fixed eigenvector component,
    with the branch energy derivative from a biorthogonal sandwich of
    d h/d k; the ``fd4`` alternative differentiates the stored vectors
    with a five-point stencil wrapped around the loop.  Either way the
    connection divides by the stored left/right pairing, so the
    transpose gauge needs no extra normalization step.
    """
    f = _connection_samples(traj, derivative)
    forward = traj.step * complex(np.sum(f))
    return -1j * forward


def winding_number(gamma_b: complex) -> complex:
    """Loop winding ``w = gamma_b / pi``; near-integer for closed loops."""
    return complex(gamma_b) / np.pi


def winding_lee(traj: LoopTrajectory, lee_normalization: float,
                derivative: str = "analytic") -> complex:
    """Loop winding divided by a per-Brillouin-zone normalization.

    Computes ``winding_number(berry_phase(traj)) / lee_normalization``.
    Normalizing per zone instead of per loop yields fractional counts
    whenever the true closure period is not ``2 pi * lee_normalization``;
    this op exists to make that mismatch explicit.
    """
    if lee_normalization == 0:
        raise ValueError("lee_normalization must be nonzero")
    w = winding_number(berry_phase(traj, derivative=derivative))
    return w / lee_normalization


def band_winding(model: BlochModel, band: Band = Band.PLUS,
                 gauge: Gauge = Gauge.TRANSPOSE, grid_size: int = 8192,
                 derivative: str = "analytic") -> complex:
    """Single-zone segment winding ``w_b = -i/pi * integral over [0, 2 pi]``.

    The segment is traversed forward along one tracked branch and makes
    no closure claim: on a braided loop it starts on one branch and
    ends on the other.  Endpoints get half weight (ordinary trapezoid).
    The value is NOT gauge invariant; only the sum over both bands is.
    """
    if grid_size < 64 or grid_size % 2:
        raise ValueError(f"grid_size must be even and >= 64, "
                         f"got {grid_size}")
    band = Band(band)
    step = 2.0 * np.pi / grid_size
    k_inc = np.arange(grid_size + 1) * step
    h, e_t, e_o, free_t, free_o = _tracked_segment(model, k_inc, gauge, band)
    u, l = _gauge_vectors(free_t, free_o, gauge)

    if derivative == "analytic":
        du = _analytic_du(model, k_inc, h, e_t, e_o, gauge)
    elif derivative == "fd4":
        du = _fd4_segment(u, step)
    else:
        raise ValueError(f"derivative must be 'analytic' or 'fd4', "
                         f"got {derivative!r}")
    num = np.einsum("mi,mi->m", l, du)
    den = np.einsum("mi,mi->m", l, u)
    f = num / den
    _pole_guard(f, step)
    integral = step * (0.5 * f[0] + np.sum(f[1:-1]) + 0.5 * f[-1])
    return complex(-1j * integral / np.pi)


def _fd4_segment(u: np.ndarray, dk: float) -> np.ndarray:
    """Fourth-order derivative on an open segment: centered five-point
    stencil inside, one-sided five-point stencils at the edges."""
    du = np.empty_like(u)
    du[2:-2] = (-u[4:] + 8.0 * u[3:-1] - 8.0 * u[1:-3] + u[:-4]) / (12.0 * dk)
    du[0] = (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3]
             - 3.0 * u[4]) / (12.0 * dk)
    du[1] = (-3.0 * u[0] - 10.0 * u[1] + 18.0 * u[2] - 6.0 * u[3]
             + u[4]) / (12.0 * dk)
    du[-2] = (3.0 * u[-1] + 10.0 * u[-2] - 18.0 * u[-3] + 6.0 * u[-4]
              - u[-5]) / (12.0 * dk)
    du[-1] = (25.0 * u[-1] - 48.0 * u[-2] + 36.0 * u[-3] - 16.0 * u[-4]
              + 3.0 * u[-5]) / (12.0 * dk)
    return du


@dataclass(frozen=True)
class SplitWindings:
    """The two single-zone halves of a braided loop and their sum."""

    w_plus: complex
    w_minus: complex
    total: complex


def split_check(model: BlochModel, gauge: Gauge = Gauge.TRANSPOSE,
                grid_size: int = 8192, derivative: str = "analytic",
                ) -> SplitWindings:
    """Track the full loop, split it at the zone boundary, wind each half.

    Each half maps through the same ``-i/pi`` orientation as the full
    loop, so ``w_plus + w_minus`` reproduces the loop winding exactly
    (verified internally to 1e-8).  Models whose loop already closes
    after a single zone have nothing to split and raise ``ValueError``.
    """
    traj = loop_period(model, grid_size=grid_size, gauge=gauge)
    if abs(traj.period - 4.0 * np.pi) > traj.step:
        raise ValueError(
            f"split_check needs a two-zone loop; {model.label} closes "
            f"after {traj.period / np.pi:.3g} pi")
    f = _connection_samples(traj, derivative)
    m = f.size
    half = m // 2
    dk = traj.step
    first = dk * (0.5 * f[0] + np.sum(f[1:half]) + 0.5 * f[half])
    second = dk * (0.5 * f[half] + np.sum(f[half + 1:]) + 0.5 * f[0])
    w1 = complex(-1j * first / np.pi)
    w2 = complex(-1j * second / np.pi)
    total = w1 + w2
    w_loop = winding_number(berry_phase(traj, derivative))
    if abs(total - w_loop) > 1e-8:
        raise RuntimeError(
            f"half windings sum to {total:.3e} but the loop gives "
            f"{w_loop:.3e}; inconsistent connection data")
    if traj.start_band is Band.PLUS:
        return SplitWindings(w1, w2, total)
    return SplitWindings(w2, w1, total)


@dataclass(frozen=True)
class WindingReport:
    """Aggregated loop result with its quantization contract.

    For a closed loop the winding must be real and near-integer;
    construction enforces both to 1e-6 and refuses to represent
    anything else.  ``w_plus``/``w_minus`` are the optional per-band
    single-zone windings (gauge dependent, unlike ``w``).
    """

    model_label: str
    gauge: Gauge
    grid_size: int
    period: float
    raw_integral: complex
    gamma_b: complex
    w: complex
    lee_normalization: float | None = None
    w_lee: complex | None = None
    w_plus: complex | None = None
    w_minus: complex | None = None

    def __post_init__(self) -> None:
        if abs(self.w.imag) > 1e-6:
            raise ValueError(
                f"loop winding has imaginary part {self.w.imag:.3e}")
        if abs(self.w.real - round(self.w.real)) > 1e-6:
            raise ValueError(
                f"loop winding {self.w.real!r} is not near-integer")


def winding_report(model: BlochModel, gauge: Gauge = Gauge.TRANSPOSE,
                   grid_size: int = 8192,
                   lee_normalization: float | None = None,
                   derivative: str = "analytic",
                   with_bands: bool = False) -> WindingReport:
    """Track the loop, integrate, and assemble a validated report.

    With ``with_bands`` the report also carries the two single-zone
    band windings (independent quadratures, not halves of the loop).
    """
    traj = loop_period(model, grid_size=grid_size, gauge=gauge)
    gamma_b = berry_phase(traj, derivative=derivative)
    w = winding_number(gamma_b)
    w_lee = None
    if lee_normalization is not None:
        w_lee = winding_lee(traj, lee_normalization, derivative=derivative)
    w_plus = w_minus = None
    if with_bands:
        w_plus = band_winding(model, Band.PLUS, gauge, grid_size, derivative)
        w_minus = band_winding(model, Band.MINUS, gauge, grid_size,
                               derivative)
    return WindingReport(
        model_label=model.label, gauge=gauge, grid_size=grid_size,
        period=traj.period, raw_integral=-1j * gamma_b, gamma_b=gamma_b,
        w=w, lee_normalization=lee_normalization, w_lee=w_lee,
        w_plus=w_plus, w_minus=w_minus)
