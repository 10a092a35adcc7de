"""Shared plumbing for the projected-ascent solvers: step control,
feasible-set projections, seeded randomness and deterministic multi-start."""

import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np


class StepController:
    """Adaptive step size for a forward-Euler ascent.

    Grows the step on accepted updates, halves it when the objective
    would decrease, and reports exhaustion once the floor is reached.
    """

    def __init__(self, h0=0.1, grow=1.5, floor=1e-12, h_max=1e3):
        self.h = float(h0)
        self.grow = grow
        self.floor = floor
        self.h_max = h_max

    def accept(self):
        self.h = min(self.h * self.grow, self.h_max)

    def reject(self):
        """Halve the step; return False once it cannot shrink further."""
        self.h *= 0.5
        return self.h >= self.floor


def clip_unit_fro(M):
    """Radially project a block onto the closed unit Frobenius ball."""
    nrm = np.linalg.norm(M)
    if nrm > 1.0:
        return M / nrm
    return M


def project_ball_tangent(xn, grad, boundary_tol=1e-12):
    """Ascent direction for a unit-Frobenius-ball constrained block.

    Inside the ball the gradient is returned unchanged; on the boundary,
    an outward-pointing gradient is projected onto the tangent plane.
    """
    nrm = np.linalg.norm(xn)
    inner = float(np.sum(xn * grad))
    if nrm >= 1.0 - boundary_tol and inner > 0.0:
        return grad - inner * xn
    return grad


def clip_box(x, radius):
    """Componentwise projection onto [-radius, radius]."""
    return np.clip(x, -radius, radius)


def clip_spectral(M, eps):
    """Project a complex matrix onto the spectral-norm ball of radius eps."""
    if M.size == 0:
        return M
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] <= eps:
        return M
    return (U * np.minimum(s, eps)) @ Vh


def unit(x):
    nrm = np.linalg.norm(x)
    if nrm == 0.0:
        raise ZeroDivisionError("cannot normalize the zero vector")
    return x / nrm


def rng_from(seed, *key):
    """Deterministic generator for a (seed, purpose...) tuple."""
    words = [int(seed) & 0xFFFFFFFF]
    for part in key:
        if isinstance(part, str):
            words.append(zlib.crc32(part.encode()) & 0xFFFFFFFF)
        else:
            words.append(int(part) & 0xFFFFFFFF)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))


def random_in_fro_ball(rng, shape):
    """Uniform direction with uniform radius inside the unit Frobenius ball."""
    M = rng.standard_normal(shape)
    nrm = np.linalg.norm(M)
    if nrm == 0.0:
        return M
    return M * (rng.uniform(0.0, 1.0) / nrm)


def random_unit_complex(rng, size):
    v = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return unit(v)


def run_multistart(tasks, runner, threads=1):
    """Run ``runner`` over ``tasks`` and return results in task order.

    With ``threads > 1`` the starts run concurrently; the caller reduces
    over the ordered result list, so ties resolve to the lowest index
    either way.
    """
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(runner, tasks))
    return [runner(t) for t in tasks]


def argbest(values):
    """Index of the largest value, first occurrence winning ties."""
    best = None
    for i, v in enumerate(values):
        if v is None:
            continue
        if best is None or v > values[best]:
            best = i
    return best
