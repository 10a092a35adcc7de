"""Uncertain time-delay systems and their characteristic-matrix realizations.

A system is

    E x'(t) = A_0 x(t) + sum_k A_k x(t - tau_k) + B_0 w(t) + sum_k B_k w(t - tau_k)
       z(t) = C_0 x(t) + sum_k C_k x(t - tau_k) + D_0 w(t) + sum_k D_k w(t - tau_k)

with real structured uncertainties entering every coefficient matrix through
shape-matrix occurrences ``G @ delta_l @ H``, where each ``delta_l`` is a real
q_l x r_l matrix confined to a closed Frobenius ball of radius ``bound_l``.
The same block may occur several times, in several matrices.

The module also assembles the block characteristic matrix

    M(lam) = Q lam - P_0(delta, Delta) - sum_k P_k(delta) e^{-lam tau_k}

on which all eigenvalue and distance computations operate: ``Q`` is
block-diag(E, 0, 0) and ``Delta`` is a complex m x p disturbance entering
``P_0`` linearly through the injection/extraction matrices ``R`` and ``S``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, StructureError

TARGET_MATRICES = ("A", "B", "C", "D")

#: Relative singular-value cutoff used for all rank decisions.
RANK_RTOL = 1e-12

#: Admissibility is a closed ball; allow this much numerical slack.
_BALL_SLACK = 1e-12


def _as_matrix(value, shape, what):
    M = np.asarray(value, dtype=float)
    if M.shape != shape:
        raise StructureError(f"{what} must have shape {shape}, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise StructureError(f"{what} contains non-finite entries")
    M = M.copy()
    M.setflags(write=False)
    return M


def rank_and_nullspaces(M, rtol=RANK_RTOL):
    """Rank of ``M`` plus orthonormal bases of its left and right nullspaces.

    Singular values below ``rtol * sigma_max`` count as zero.  Returns
    ``(rank, U_null, V_null)`` where ``U_null^H M = 0`` and ``M V_null = 0``.
    """
    M = np.asarray(M)
    if M.size == 0:
        k = M.shape[0]
        return 0, np.eye(k, dtype=complex), np.eye(M.shape[1], dtype=complex)
    U, s, Vh = np.linalg.svd(M)
    cutoff = rtol * (s[0] if s.size else 0.0)
    rank = int(np.count_nonzero(s > cutoff))
    return rank, U[:, rank:], Vh[rank:, :].conj().T


@dataclass(frozen=True)
class Occurrence:
    """One insertion ``G @ delta @ H`` into a nominal coefficient matrix.

    ``matrix`` is one of ``"A"``, ``"B"``, ``"C"``, ``"D"`` and ``delay``
    the delay index ``k`` (0 means the undelayed term).
    """

    matrix: str
    delay: int
    G: np.ndarray
    H: np.ndarray

    @property
    def target(self):
        return f"{self.matrix}{self.delay}"


@dataclass(frozen=True)
class UncertaintyBlock:
    """A bounded real uncertainty with all of its occurrences."""

    bound: float
    rows: int
    cols: int
    occurrences: tuple

    @property
    def shape(self):
        return (self.rows, self.cols)


class UncertainDelaySystem:
    """Immutable container for an uncertain delay system.

    Parameters
    ----------
    A, B, C, D : sequences of K+1 real matrices
        Nominal coefficient matrices, index 0 holding the undelayed term.
    delays : array_like, shape (K,)
        Strictly positive, pairwise distinct delays.
    E : array_like, optional
        n x n descriptor matrix, possibly singular; identity by default.
    blocks : sequence of UncertaintyBlock, optional
    delay_bounds : array_like, optional
        Per-delay uncertainty radii; each must stay below its delay.

    All arrays are copied and frozen; instances are safe to share between
    concurrent workers.
    """

    def __init__(self, A, B, C, D, delays, E=None, blocks=(), delay_bounds=None):
        delays = np.atleast_1d(np.asarray(delays, dtype=float))
        K = delays.size
        for name, mats in (("A", A), ("B", B), ("C", C), ("D", D)):
            if len(mats) != K + 1:
                raise StructureError(
                    f"{name} must hold K+1 = {K + 1} matrices, got {len(mats)}"
                )
        A0 = np.asarray(A[0], dtype=float)
        if A0.ndim != 2 or A0.shape[0] != A0.shape[1]:
            raise StructureError(f"A[0] must be square, got shape {A0.shape}")
        n = A0.shape[0]
        B0 = np.asarray(B[0], dtype=float)
        if B0.ndim != 2 or B0.shape[0] != n:
            raise StructureError(f"B[0] must have {n} rows, got shape {B0.shape}")
        m = B0.shape[1]
        C0 = np.asarray(C[0], dtype=float)
        if C0.ndim != 2 or C0.shape[1] != n:
            raise StructureError(f"C[0] must have {n} columns, got shape {C0.shape}")
        p = C0.shape[0]
        if min(n, m, p) < 1:
            raise StructureError("state, input and output dimensions must be positive")

        self.n, self.m, self.p, self.K = n, m, p, K
        self.A = tuple(_as_matrix(M, (n, n), f"A[{k}]") for k, M in enumerate(A))
        self.B = tuple(_as_matrix(M, (n, m), f"B[{k}]") for k, M in enumerate(B))
        self.C = tuple(_as_matrix(M, (p, n), f"C[{k}]") for k, M in enumerate(C))
        self.D = tuple(_as_matrix(M, (p, m), f"D[{k}]") for k, M in enumerate(D))

        if not np.all(np.isfinite(delays)):
            raise StructureError("delays contain non-finite entries")
        if np.any(delays <= 0.0):
            raise StructureError("delays must be strictly positive")
        if K > 1 and np.unique(delays).size != K:
            raise StructureError("delays must be pairwise distinct")
        delays = delays.copy()
        delays.setflags(write=False)
        self.delays = delays

        if E is None:
            E = np.eye(n)
        self.E = _as_matrix(E, (n, n), "E")
        self.is_standard = bool(np.array_equal(self.E, np.eye(n)))

        if delay_bounds is None:
            delay_bounds = np.zeros(K)
        delay_bounds = np.atleast_1d(np.asarray(delay_bounds, dtype=float))
        if delay_bounds.shape != (K,):
            raise StructureError(f"delay_bounds must have shape ({K},)")
        if np.any(delay_bounds < 0.0):
            raise StructureError("delay_bounds must be nonnegative")
        if np.any(delays - delay_bounds <= 0.0):
            raise StructureError("each delay must exceed its uncertainty radius")
        delay_bounds = delay_bounds.copy()
        delay_bounds.setflags(write=False)
        self.delay_bounds = delay_bounds

        self.blocks = tuple(self._validated_block(l, blk) for l, blk in enumerate(blocks))

    # -- construction helpers -------------------------------------------------

    def _target_shape(self, matrix):
        return {
            "A": (self.n, self.n),
            "B": (self.n, self.m),
            "C": (self.p, self.n),
            "D": (self.p, self.m),
        }[matrix]

    def _validated_block(self, l, blk):
        bound = float(blk.bound)
        if not np.isfinite(bound) or bound <= 0.0:
            raise StructureError(f"block {l}: bound must be positive, got {bound}")
        q, r = int(blk.rows), int(blk.cols)
        if q < 1 or r < 1:
            raise StructureError(f"block {l}: dimensions must be positive")
        occs = []
        for i, occ in enumerate(blk.occurrences):
            if occ.matrix not in TARGET_MATRICES:
                raise StructureError(f"block {l} occurrence {i}: unknown matrix {occ.matrix!r}")
            if not 0 <= occ.delay <= self.K:
                raise StructureError(
                    f"block {l} occurrence {i}: delay index {occ.delay} outside 0..{self.K}"
                )
            t_rows, t_cols = self._target_shape(occ.matrix)
            G = _as_matrix(occ.G, (t_rows, q), f"block {l} occurrence {i}: G")
            H = _as_matrix(occ.H, (r, t_cols), f"block {l} occurrence {i}: H")
            occs.append(Occurrence(occ.matrix, int(occ.delay), G, H))
        return UncertaintyBlock(bound, q, r, tuple(occs))

    # -- basic queries ---------------------------------------------------------

    @property
    def L(self):
        return len(self.blocks)

    @property
    def has_delay_uncertainty(self):
        return bool(np.any(self.delay_bounds > 0.0))

    def zero_point(self):
        return UncertaintyPoint(
            tuple(np.zeros(b.shape) for b in self.blocks),
            np.zeros(self.K) if self.has_delay_uncertainty else None,
        )

    def random_point(self, rng, with_delays=False):
        """Uniform-direction, uniform-radius sample of the admissible set."""
        values = []
        for b in self.blocks:
            M = rng.standard_normal(b.shape)
            nrm = np.linalg.norm(M)
            radius = rng.uniform(0.0, b.bound)
            values.append(M * (radius / nrm) if nrm > 0 else M)
        rho = None
        if with_delays and self.has_delay_uncertainty:
            rho = rng.uniform(-self.delay_bounds, self.delay_bounds)
        return UncertaintyPoint(tuple(values), rho)

    def point_from_flat(self, values, rho=None):
        """Build a point from row-major flattened block entries."""
        values = np.asarray(values, dtype=float).ravel()
        need = sum(b.rows * b.cols for b in self.blocks)
        if values.size != need:
            raise StructureError(f"expected {need} block entries, got {values.size}")
        out, pos = [], 0
        for b in self.blocks:
            cnt = b.rows * b.cols
            out.append(values[pos : pos + cnt].reshape(b.shape))
            pos += cnt
        if rho is not None:
            rho = np.asarray(rho, dtype=float)
        return UncertaintyPoint(tuple(out), rho)

    def without_uncertainty(self):
        """Copy of the system with an empty uncertainty set {0}."""
        return UncertainDelaySystem(
            self.A, self.B, self.C, self.D, self.delays, E=self.E, blocks=()
        )

    def validate_point(self, point):
        if len(point.values) != self.L:
            raise StructureError(
                f"point carries {len(point.values)} blocks, system has {self.L}"
            )
        for l, (b, val) in enumerate(zip(self.blocks, point.values)):
            val = np.asarray(val, dtype=float)
            if val.shape != b.shape:
                raise StructureError(
                    f"block {l}: value shape {val.shape} != declared {b.shape}"
                )
            nrm = np.linalg.norm(val)
            if nrm > b.bound * (1.0 + _BALL_SLACK):
                raise AdmissibilityError(
                    f"block {l}: Frobenius norm {nrm:.6g} exceeds bound {b.bound:.6g}"
                )
        if point.rho is not None:
            rho = np.asarray(point.rho, dtype=float)
            if rho.shape != (self.K,):
                raise StructureError(f"delay offsets must have shape ({self.K},)")
            if np.any(np.abs(rho) > self.delay_bounds * (1.0 + _BALL_SLACK) + 1e-300):
                raise AdmissibilityError("delay offsets exceed their radii")


@dataclass(frozen=True)
class UncertaintyPoint:
    """One admissible uncertainty value: per-block matrices, optional delay offsets."""

    values: tuple
    rho: object = None

    def flat(self):
        if not self.values:
            return np.zeros(0)
        return np.concatenate([np.asarray(v, dtype=float).ravel() for v in self.values])


@dataclass(frozen=True)
class Realization:
    """Coefficient matrices of the system at a fixed uncertainty value."""

    A: tuple
    B: tuple
    C: tuple
    D: tuple
    delays: np.ndarray


def assemble_realization(system, point):
    """Evaluate all coefficient matrices at an admissible uncertainty value.

    Each target equals its nominal matrix plus the sum of ``G delta_l H``
    over every occurrence aimed at it; the map is affine in each block.
    """
    system.validate_point(point)
    mats = {
        "A": [M.astype(float) for M in system.A],
        "B": [M.astype(float) for M in system.B],
        "C": [M.astype(float) for M in system.C],
        "D": [M.astype(float) for M in system.D],
    }
    for blk, val in zip(system.blocks, point.values):
        val = np.asarray(val, dtype=float)
        for occ in blk.occurrences:
            mats[occ.matrix][occ.delay] = (
                mats[occ.matrix][occ.delay] + occ.G @ val @ occ.H
            )
    delays = system.delays.copy()
    if point.rho is not None:
        delays = delays + np.asarray(point.rho, dtype=float)
    return Realization(
        tuple(mats["A"]), tuple(mats["B"]), tuple(mats["C"]), tuple(mats["D"]), delays
    )


@dataclass(frozen=True)
class SdepRealization:
    """Assembled characteristic matrix ``Q lam - P0 - sum_k Pk e^{-lam tau_k}``.

    ``P0`` already contains the complex disturbance: ``P0 = P0_free + R Delta S``.
    ``occurrences`` lists, per uncertainty block, tuples
    ``(delay_index, row_offset, col_offset, G, H)`` locating every shape-matrix
    insertion inside the stacked P-matrices; the gradient code consumes it.
    """

    Q: np.ndarray
    P0: np.ndarray
    P0_free: np.ndarray
    Pk: tuple
    R: np.ndarray
    S: np.ndarray
    delays: np.ndarray
    Delta: np.ndarray
    dims: tuple
    bounds: tuple
    occurrences: tuple

    @property
    def size(self):
        return self.Q.shape[0]

    @property
    def is_real(self):
        return (
            float(np.abs(self.Delta.imag).max(initial=0.0)) == 0.0
            if self.Delta.size
            else True
        )

    def with_delta(self, Delta):
        """Same realization with a different complex disturbance."""
        Delta = np.asarray(Delta, dtype=complex)
        if Delta.shape != self.Delta.shape:
            raise StructureError(
                f"Delta must have shape {self.Delta.shape}, got {Delta.shape}"
            )
        return SdepRealization(
            self.Q,
            self.P0_free + self.R @ Delta @ self.S,
            self.P0_free,
            self.Pk,
            self.R,
            self.S,
            self.delays,
            Delta,
            self.dims,
            self.bounds,
            self.occurrences,
        )


# Row/column offsets of each target inside the stacked characteristic matrix.
def _block_offsets(n, m, p):
    return {
        "A": (0, 0),
        "B": (0, n),
        "C": (n + m, 0),
        "D": (n + m, n),
    }


def _occurrence_table(system, offsets, targets=TARGET_MATRICES):
    table = []
    for blk in system.blocks:
        rows = []
        for occ in blk.occurrences:
            if occ.matrix in targets:
                r_off, c_off = offsets[occ.matrix]
                rows.append((occ.delay, r_off, c_off, occ.G, occ.H))
        table.append(tuple(rows))
    return tuple(table)


def build_sdep(system, point, Delta=None):
    """Assemble the full characteristic matrix family at ``(point, Delta)``.

    The stacked matrices follow the fixed block layout: states, then inputs,
    then outputs.  ``Pk`` blocks never depend on ``Delta``.
    """
    real = assemble_realization(system, point)
    n, m, p = system.n, system.m, system.p
    nM = n + m + p
    if Delta is None:
        Delta = np.zeros((m, p), dtype=complex)
    Delta = np.asarray(Delta, dtype=complex)
    if Delta.shape != (m, p):
        raise StructureError(f"Delta must have shape ({m}, {p}), got {Delta.shape}")

    Q = np.zeros((nM, nM))
    Q[:n, :n] = system.E

    P0 = np.zeros((nM, nM), dtype=complex)
    P0[:n, :n] = real.A[0]
    P0[:n, n : n + m] = real.B[0]
    P0[n : n + m, n : n + m] = -np.eye(m)
    P0[n + m :, :n] = real.C[0]
    P0[n + m :, n : n + m] = real.D[0]
    P0[n + m :, n + m :] = -np.eye(p)

    R = np.zeros((nM, m))
    R[n : n + m, :] = np.eye(m)
    S = np.zeros((p, nM))
    S[:, n + m :] = np.eye(p)

    Pk = []
    for k in range(1, system.K + 1):
        P = np.zeros((nM, nM), dtype=complex)
        P[:n, :n] = real.A[k]
        P[:n, n : n + m] = real.B[k]
        P[n + m :, :n] = real.C[k]
        P[n + m :, n : n + m] = real.D[k]
        Pk.append(P)

    return SdepRealization(
        Q=Q,
        P0=P0 + R @ Delta @ S,
        P0_free=P0,
        Pk=tuple(Pk),
        R=R,
        S=S,
        delays=real.delays,
        Delta=Delta,
        dims=(n, m, p),
        bounds=tuple(b.bound for b in system.blocks),
        occurrences=_occurrence_table(system, _block_offsets(n, m, p)),
    )


def build_internal_sdep(system, point):
    """States-only characteristic matrix ``E lam - A_0(d) - sum A_k(d) e^{-lam tau}``.

    Used by the stability gate: the disturbance channel is absent, so ``R``
    and ``S`` have zero width and only A-occurrences remain.
    """
    real = assemble_realization(system, point)
    n = system.n
    return SdepRealization(
        Q=system.E.astype(float),
        P0=real.A[0].astype(complex),
        P0_free=real.A[0].astype(complex),
        Pk=tuple(M.astype(complex) for M in real.A[1:]),
        R=np.zeros((n, 0)),
        S=np.zeros((0, n)),
        delays=real.delays,
        Delta=np.zeros((0, 0), dtype=complex),
        dims=(n, 0, 0),
        bounds=tuple(b.bound for b in system.blocks),
        occurrences=_occurrence_table(system, {"A": (0, 0)}, targets=("A",)),
    )


def check_causality(system, n_random=32, seed=0):
    """Sampled check of the descriptor causality condition.

    For singular ``E`` the compression of ``A_0(delta)`` onto the nullspaces
    of ``E`` must stay invertible over the admissible set.  Quantifying over
    the whole ball is not decidable by sampling, so this checks the zero
    point, canonical-direction boundary points of every block, and seeded
    random interior points; a full-rank ``E`` is vacuously causal.
    """
    rank, UE, VE = rank_and_nullspaces(system.E)
    if rank == system.n:
        return True

    def singular_at(point):
        real = assemble_realization(system, point)
        M = UE.conj().T @ real.A[0] @ VE
        s = np.linalg.svd(M, compute_uv=False)
        return s.size == 0 or s[-1] <= 1e-9 * max(1.0, s[0])

    candidates = [system.zero_point()]
    for l, blk in enumerate(system.blocks):
        for i in range(blk.rows):
            for j in range(blk.cols):
                for sign in (1.0, -1.0):
                    vals = [np.zeros(b.shape) for b in system.blocks]
                    vals[l] = np.zeros(blk.shape)
                    vals[l][i, j] = sign * blk.bound
                    candidates.append(UncertaintyPoint(tuple(vals)))
    from .optim import rng_from

    rng = rng_from(seed, "causality")
    candidates.extend(system.random_point(rng) for _ in range(n_random))
    return not any(singular_at(pt) for pt in candidates)
