"""Small dense complex linear algebra for qubit and two-qubit states.

Matrices are plain numpy arrays. Every routine that decomposes a matrix
accepts a stack ``(..., n, n)`` as well as a single matrix so that grid
searches over many states can run in one call.
"""
import numpy as np

from qnetconn.errors import NumericalError, ValidationError

HERMITIAN_TOL = 1e-10
DENSITY_TOL = 1e-12
PSD_TOL = 1e-10

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


def _as_square_stack(m):
    a = np.asarray(m)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2] or a.shape[-1] == 0:
        raise ValidationError(f"expected square matrix (or stack), got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    return a


def hermitian_eigen(m, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(w, v)`` with ``w`` ascending real eigenvalues and ``v`` holding
    orthonormal eigenvectors in its columns, so ``v @ diag(w) @ v.conj().T``
    reproduces ``m``. Leading batch dimensions are carried through.

    Sweeps stop once the off-diagonal Frobenius norm falls below
    ``tol * max(1, ||m||_F)``.
    """
    a = _as_square_stack(m)
    if np.max(np.abs(a - np.conj(np.swapaxes(a, -1, -2))), initial=0.0) > HERMITIAN_TOL * max(
        1.0, float(np.max(np.abs(a), initial=0.0))
    ):
        raise ValidationError("matrix is not Hermitian within 1e-10")

    is_complex = np.iscomplexobj(a)
    dtype = complex if is_complex else float
    batch_shape = a.shape[:-2]
    n = a.shape[-1]
    a = a.astype(dtype).reshape((-1, n, n))
    a = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
    b = a.shape[0]
    v = np.broadcast_to(np.eye(n, dtype=dtype), (b, n, n)).copy()

    scale = np.maximum(1.0, np.sqrt(np.sum(np.abs(a) ** 2, axis=(-1, -2))))
    offdiag = ~np.eye(n, dtype=bool)

    for _ in range(max_sweeps + 1):
        off = np.sqrt(np.sum(np.abs(a[:, offdiag]) ** 2, axis=-1))
        if np.all(off < tol * scale):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                mag = np.abs(apq)
                active = mag > 1e-300
                if not np.any(active):
                    continue
                safe = np.where(active, mag, 1.0)
                phase = np.where(active, apq / safe, 1.0)
                theta = (a[:, q, q].real - a[:, p, p].real) / (2.0 * safe)
                t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                g = np.empty((b, 2, 2), dtype=dtype)
                g[:, 0, 0] = c
                g[:, 1, 1] = c
                g[:, 0, 1] = s * phase
                g[:, 1, 0] = -s * np.conj(phase)
                gh = np.conj(np.swapaxes(g, -1, -2))

                cols = [p, q]
                a[:, :, cols] = a[:, :, cols] @ g
                a[:, cols, :] = gh @ a[:, cols, :]
                v[:, :, cols] = v[:, :, cols] @ g
    else:
        raise NumericalError(f"Jacobi did not converge in {max_sweeps} sweeps")

    w = np.real(np.diagonal(a, axis1=-2, axis2=-1))
    order = np.argsort(w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)
    return w.reshape(batch_shape + (n,)), v.reshape(batch_shape + (n, n))


def validate_density(rho, dim=None):
    """Check Hermiticity, unit trace and positivity; return ``rho`` as an array."""
    r = _as_square_stack(rho)
    if r.ndim != 2:
        raise ValidationError(f"expected a single density matrix, got shape {r.shape}")
    if dim is not None and r.shape[0] != dim:
        raise ValidationError(f"expected a {dim}x{dim} density matrix, got {r.shape}")
    if np.max(np.abs(r - r.conj().T)) > DENSITY_TOL * 10:
        raise ValidationError("density matrix is not Hermitian")
    tr = np.trace(r)
    if abs(tr - 1.0) > DENSITY_TOL * 10:
        raise ValidationError(f"density matrix trace is {tr.real:.15g}, expected 1")
    w, _ = hermitian_eigen(r)
    if w[0] < -PSD_TOL:
        raise ValidationError(f"density matrix has negative eigenvalue {w[0]:.3g}")
    return r


def entropy_from_eigenvalues(w):
    """Shannon entropy in bits of eigenvalue arrays along the last axis.

    Tiny negative round-off is treated as zero.
    """
    w = np.clip(np.asarray(w, dtype=float), 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(w > 0, -w * np.log2(np.where(w > 0, w, 1.0)), 0.0)
    return np.maximum(np.sum(terms, axis=-1), 0.0)


def entropy_unchecked(rho):
    """Von Neumann entropy (bits) of a matrix or stack, without validation."""
    w, _ = hermitian_eigen(rho)
    return entropy_from_eigenvalues(w)


def vn_entropy(rho):
    """Von Neumann entropy of a density matrix in bits.

    >>> round(float(vn_entropy(np.eye(2) / 2)), 12)
    1.0
    """
    r = validate_density(rho)
    w, _ = hermitian_eigen(r)
    s = float(entropy_from_eigenvalues(w))
    return min(s, float(np.log2(r.shape[0])))


def tensor(a, b):
    """Kronecker product; block ``(i, j)`` of the result is ``a[i, j] * b``."""
    return np.kron(np.asarray(a), np.asarray(b))


def partial_trace(rho, keep):
    """Reduce a two-qubit state (or stack of them) to one subsystem.

    ``keep`` is ``"first"`` or ``"second"`` (also accepts 0 / 1).
    """
    r = np.asarray(rho)
    if r.shape[-2:] != (4, 4):
        raise ValidationError(f"partial_trace needs 4x4 input, got {r.shape}")
    r = r.reshape(r.shape[:-2] + (2, 2, 2, 2))
    if keep in ("first", 0):
        return np.einsum("...ijkj->...ik", r)
    if keep in ("second", 1):
        return np.einsum("...ijil->...jl", r)
    raise ValidationError(f"keep must be 'first' or 'second', got {keep!r}")


def purify_unchecked(rho):
    """Purification of qubit state(s): sum_k sqrt(l_k) |k>|k>, system first."""
    w, v = hermitian_eigen(rho)
    amp = np.sqrt(np.clip(w, 0.0, None))
    # reference system uses the computational basis, eigenvectors go on the system
    psi = np.einsum("...k,...ak,kb->...ab", amp, v, np.eye(2))
    psi = psi.reshape(psi.shape[:-2] + (4,))
    return np.einsum("...i,...j->...ij", psi, np.conj(psi))


def purify(rho):
    """Pure two-qubit state whose first-subsystem marginal is ``rho``."""
    r = validate_density(rho, dim=2)
    return purify_unchecked(r)
