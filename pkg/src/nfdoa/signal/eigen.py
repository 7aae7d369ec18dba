"""
Cyclic Jacobi eigendecomposition of Hermitian matrices.

Rotations are scheduled in round-robin order, so every round applies a set
of disjoint 2x2 unitary rotations at once; a stack of matrices is processed
in lock-step.
"""
import functools

import numpy as np

from ..errors import EigenSolverError


DEFAULT_TOLERANCE = 1e-12
"""Convergence threshold, relative to the Frobenius norm of the input."""

DEFAULT_MAX_SWEEPS = 100


@functools.lru_cache(maxsize=None)
def round_robin_schedule(n):
    """
    Return the rounds of one Jacobi sweep over an ``n``-by-``n`` matrix.

    Each round is a pair of index arrays ``(p, q)`` with ``p < q``; the pairs
    within a round are disjoint and every pair occurs exactly once per sweep.
    """
    m = n + n % 2
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = sorted((min(a, b), max(a, b)) for (a, b) in pairs
                       if a < n and b < n)
        if pairs:
            p, q = zip(*pairs)
            rounds.append((np.array(p), np.array(q)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _off_diagonal_norm(a, mask):
    return np.sqrt(np.sum(np.abs(a[..., mask]) ** 2, axis=-1))


def _rotate(a, v, p, q):
    """Annihilate the entries ``(p, q)`` of every matrix in the stack."""
    app = a[:, p, p].real
    aqq = a[:, q, q].real
    apq = a[:, p, q]
    g = np.abs(apq)
    phase = np.where(g > 0, apq / np.where(g > 0, g, 1.0), 1.0)
    theta = 0.5 * np.arctan2(2 * g, app - aqq)
    # Take the inner rotation, |theta| <= pi/4.
    theta = np.where(theta > np.pi / 4, theta - np.pi / 2, theta)
    cos = np.cos(theta)
    sin = np.sin(theta)

    # Columns: A <- A U, V <- V U.
    c, s, e = cos[:, np.newaxis, :], sin[:, np.newaxis, :], phase[:, np.newaxis, :]
    for m in (a, v):
        mp = m[:, :, p]
        mq = m[:, :, q]
        m[:, :, p] = c * mp + s * np.conj(e) * mq
        m[:, :, q] = -s * mp + c * np.conj(e) * mq

    # Rows: A <- U^H A.
    c, s, e = cos[:, :, np.newaxis], sin[:, :, np.newaxis], phase[:, :, np.newaxis]
    ap = a[:, p, :]
    aq = a[:, q, :]
    a[:, p, :] = c * ap + s * e * aq
    a[:, q, :] = -s * ap + c * e * aq
    a[:, p, q] = 0
    a[:, q, p] = 0


def jacobi_eigh(matrices, tol=DEFAULT_TOLERANCE, max_sweeps=DEFAULT_MAX_SWEEPS):
    """
    Diagonalise one Hermitian matrix or a stack of them.

    Parameters
    ----------
    matrices
        A complex array of shape ``(n, n)`` or ``(S, n, n)``; it is
        Hermitian-symmetrised before iterating.
    tol
        Iteration stops once the off-diagonal Frobenius norm of every matrix
        is at most ``tol`` times its Frobenius norm.
    max_sweeps
        The maximum number of cyclic sweeps.

    Returns
    -------
        The eigenvalues in descending order (shape ``(..., n)``) and the
        matching unit-norm eigenvectors as columns (shape ``(..., n, n)``).

    Raises
    ------
    EigenSolverError
        If any matrix has not converged after ``max_sweeps`` sweeps.

    """
    a = np.array(matrices, dtype=complex)
    single = a.ndim == 2
    if single:
        a = a[np.newaxis]
    if a.ndim != 3 or a.shape[-1] != a.shape[-2]:
        raise ValueError('Expected square matrices, not shape {}'.format(
            np.shape(matrices)))
    a = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
    n = a.shape[-1]
    v = np.broadcast_to(np.eye(n, dtype=complex), a.shape).copy()

    mask = ~np.eye(n, dtype=bool)
    threshold = tol * np.sqrt(np.sum(np.abs(a) ** 2, axis=(-2, -1)))
    schedule = round_robin_schedule(n)
    sweeps = 0
    while True:
        off = _off_diagonal_norm(a, mask)
        if np.all(off <= threshold):
            break
        if sweeps >= max_sweeps:
            worst = np.argmax(off - threshold)
            raise EigenSolverError(off[worst], threshold[worst], sweeps)
        for p, q in schedule:
            _rotate(a, v, p, q)
        sweeps += 1

    w = np.real(np.diagonal(a, axis1=-2, axis2=-1))
    order = np.argsort(-w, axis=-1, kind='stable')
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[:, np.newaxis, :], axis=-1)
    if single:
        return w[0], v[0]
    return w, v
