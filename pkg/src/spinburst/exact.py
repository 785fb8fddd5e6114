"""Exact open-system dynamics of few spins plus a truncated resonator mode.

This engine integrates the full master equation

    d rho / dt = -i [H, rho] + kappa D[a] + sum_j 2 gamma_par D[sigma_-^j]
                 + sum_j (gamma_perp / 2) D[sigma_z^j]

with the driven collective Hamiltonian (rotating frame, hbar = 1)

    H = delta_c a+a + sum_j (delta_j / 2) sigma_z^j
        + i g sum_j (a+ sigma_-^j - sigma_+^j a) + i eta (a+ - a),

where D[c] rho = c rho c+ - (c+c rho + rho c+c)/2.  Conventions: kappa is the
energy decay rate (resonator line FWHM), gamma_perp the coherence decay rate
(spin line FWHM / 2, hence the sigma_z jump rate gamma_perp/2), and the
longitudinal dissipator is written with the excited population decaying at
2*gamma_par.

It is exponentially expensive and exists as the trust anchor for the reduced
engines, so the Hilbert-space capacity is deliberately small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, sparse

from .errors import CapacityError, StiffnessError, ValidationError
from .params import PhysicalParams, PulseSequence
from .trajectory import Trajectory

__all__ = [
    "HilbertSpec",
    "Liouvillian",
    "build_liouvillian",
    "evolve",
    "drive_then_release",
    "suggested_n_fock",
    "ground_state",
    "inverted_state",
    "spin_product_state",
    "validate_density",
]

DEFAULT_MAX_DIM = 4096
FOCK_LEAK_LIMIT = 1e-6  # top-level population above this flags the truncation


@dataclass(frozen=True)
class HilbertSpec:
    """Tensor layout: ``n_spins`` two-level systems then one ``n_fock`` mode."""

    n_spins: int
    n_fock: int
    max_dim: int = DEFAULT_MAX_DIM

    def __post_init__(self):
        if int(self.n_spins) != self.n_spins or self.n_spins < 1:
            raise ValidationError(f"n_spins must be an integer >= 1, got {self.n_spins!r}")
        if int(self.n_fock) != self.n_fock or self.n_fock < 2:
            raise ValidationError(f"n_fock must be an integer >= 2, got {self.n_fock!r}")
        if self.dim > self.max_dim:
            raise CapacityError(
                f"Hilbert dimension 2^{self.n_spins} * {self.n_fock} = {self.dim} "
                f"exceeds the budget of {self.max_dim}; this engine is meant for "
                "few-spin oracle runs"
            )

    @property
    def dim(self) -> int:
        return (2 ** self.n_spins) * self.n_fock


def suggested_n_fock(eta: float, kappa: float, margin: int = 8) -> int:
    """Truncation covering the driven coherent amplitude 2 eta / kappa.

    The steady mean photon number is (2 eta / kappa)^2; the Poisson spread
    around it grows with its square root, so the headroom must too.
    """
    n_bar = (2.0 * abs(eta) / kappa) ** 2
    return int(math.ceil(n_bar + margin * math.sqrt(n_bar))) + margin


# ---------------------------------------------------------------------------
# operator construction (sparse, basis index = spin_index * n_fock + fock)
# ---------------------------------------------------------------------------

_SIGMA_MINUS = sparse.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))  # |g><e|
_SIGMA_Z = sparse.csr_matrix(np.diag([-1.0, 1.0]))  # basis order (g, e)


def _destroy(n_fock: int) -> sparse.csr_matrix:
    return sparse.diags(np.sqrt(np.arange(1, n_fock)), offsets=1).tocsr()


def _spin_operator(op: sparse.spmatrix, j: int, spec: HilbertSpec) -> sparse.csr_matrix:
    """Embed a single-spin operator at site ``j`` (identity elsewhere)."""
    left = sparse.identity(2 ** j, format="csr")
    right = sparse.identity(2 ** (spec.n_spins - j - 1), format="csr")
    spin_part = sparse.kron(sparse.kron(left, op), right)
    return sparse.kron(spin_part, sparse.identity(spec.n_fock), format="csr")


def _cavity_operator(op: sparse.spmatrix, spec: HilbertSpec) -> sparse.csr_matrix:
    return sparse.kron(sparse.identity(2 ** spec.n_spins), op, format="csr")


class Liouvillian:
    """Master-equation generator with cached operators and observables."""

    def __init__(
        self,
        spec: HilbertSpec,
        params: PhysicalParams,
        hamiltonian: sparse.csr_matrix,
        jumps: list[sparse.csr_matrix],
    ):
        self.spec = spec
        self.params = params
        self.hamiltonian = hamiltonian
        self.jumps = [(c, (c.conj().T).tocsr(), (c.conj().T @ c).tocsr()) for c in jumps]

        self.a_op = _cavity_operator(_destroy(spec.n_fock), spec)
        self.number_diag = self.a_op.conj().T @ self.a_op  # diagonal
        self._n_diag = np.asarray(self.number_diag.diagonal()).real
        sm = sum(_spin_operator(_SIGMA_MINUS, j, spec) for j in range(spec.n_spins))
        self.s_minus = sm.tocsr()
        self.s_plus = self.s_minus.conj().T.tocsr()
        self.spsm_op = (self.s_plus @ self.s_minus).tocsr()
        self.s_z_op = (
            0.5 * sum(_spin_operator(_SIGMA_Z, j, spec) for j in range(spec.n_spins))
        ).tocsr()
        # population of the highest Fock level, for truncation monitoring
        top = np.zeros(spec.n_fock)
        top[-1] = 1.0
        self._top_diag = np.asarray(
            _cavity_operator(sparse.diags(top), spec).diagonal()
        ).real

    @property
    def dim(self) -> int:
        return self.spec.dim

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Right-hand side of the master equation for one density matrix."""
        h = self.hamiltonian
        out = -1j * (h @ rho - rho @ h)
        for c, c_dag, cdc in self.jumps:
            out += (c @ rho) @ c_dag - 0.5 * (cdc @ rho + rho @ cdc)
        return out

    def matrix(self) -> sparse.csr_matrix:
        """Superoperator on row-major vec(rho): vec(A rho B) = kron(A, B^T) vec(rho)."""
        d = self.dim
        eye = sparse.identity(d, format="csr")
        h = self.hamiltonian
        mat = -1j * (sparse.kron(h, eye) - sparse.kron(eye, h.T))
        for c, c_dag, cdc in self.jumps:
            mat = mat + sparse.kron(c, c.conj()) - 0.5 * (
                sparse.kron(cdc, eye) + sparse.kron(eye, cdc.T)
            )
        return mat.tocsr()

    def expect(self, op: sparse.spmatrix, rho: np.ndarray) -> complex:
        return complex(op.multiply(rho.T).sum())

    def photon_number(self, rho: np.ndarray) -> float:
        return float(np.real(self._n_diag @ rho.diagonal()))

    def top_fock_population(self, rho: np.ndarray) -> float:
        return float(np.real(self._top_diag @ rho.diagonal()))


def build_liouvillian(
    params: PhysicalParams,
    spec: HilbertSpec,
    detunings=0.0,
    eta: float = 0.0,
) -> Liouvillian:
    """Assemble H and the three dissipation channels for ``spec``.

    ``detunings`` is a scalar or per-spin array of spin-drive detunings
    (rad/s).  Zero-rate channels are dropped from the jump list.
    """
    if spec.n_spins != params.n_spins:
        raise ValidationError(
            f"spec carries {spec.n_spins} spins but params declare {params.n_spins}"
        )
    det = np.broadcast_to(np.asarray(detunings, dtype=float), (spec.n_spins,))
    if not np.all(np.isfinite(det)):
        raise ValidationError("detunings must be finite")
    if not math.isfinite(eta):
        raise ValidationError(f"eta must be finite, got {eta!r}")

    a = _cavity_operator(_destroy(spec.n_fock), spec)
    a_dag = a.conj().T.tocsr()
    h = params.delta_c * (a_dag @ a)
    for j in range(spec.n_spins):
        h = h + 0.5 * det[j] * _spin_operator(_SIGMA_Z, j, spec)
        sm_j = _spin_operator(_SIGMA_MINUS, j, spec)
        h = h + 1j * params.g * (a_dag @ sm_j - sm_j.conj().T @ a)
    if eta != 0.0:
        h = h + 1j * eta * (a_dag - a)

    jumps = [math.sqrt(params.kappa) * a]
    if params.gamma_par > 0.0:
        for j in range(spec.n_spins):
            jumps.append(math.sqrt(2.0 * params.gamma_par) * _spin_operator(_SIGMA_MINUS, j, spec))
    if params.gamma_perp > 0.0:
        for j in range(spec.n_spins):
            jumps.append(math.sqrt(0.5 * params.gamma_perp) * _spin_operator(_SIGMA_Z, j, spec))
    return Liouvillian(spec, params, h.tocsr(), [c.tocsr() for c in jumps])


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


def validate_density(
    rho: np.ndarray,
    herm_tol: float = 1e-10,
    trace_tol: float = 1e-10,
    eig_floor: float = -1e-8,
) -> np.ndarray:
    """Check Hermiticity, unit trace and positivity of a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValidationError(f"density matrix must be square, got shape {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise ValidationError(f"density matrix not Hermitian: |rho - rho+| = {herm:.3e}")
    tr = rho.trace()
    if abs(tr - 1.0) > trace_tol:
        raise ValidationError(f"density matrix trace {tr!r} deviates from 1")
    lowest = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    if lowest < eig_floor:
        raise ValidationError(f"density matrix has eigenvalue {lowest:.3e} below {eig_floor:.0e}")
    return rho


def spin_product_state(spec: HilbertSpec, excited: list[bool], fock: int = 0) -> np.ndarray:
    """Pure product state |s_1 ... s_N> |fock> as a density matrix."""
    if len(excited) != spec.n_spins:
        raise ValidationError(f"need {spec.n_spins} spin flags, got {len(excited)}")
    if not 0 <= fock < spec.n_fock:
        raise ValidationError(f"fock index {fock} outside [0, {spec.n_fock})")
    spin_index = 0
    for flag in excited:
        spin_index = (spin_index << 1) | (1 if flag else 0)
    index = spin_index * spec.n_fock + fock
    psi = np.zeros(spec.dim, dtype=complex)
    psi[index] = 1.0
    return np.outer(psi, psi.conj())


def ground_state(spec: HilbertSpec) -> np.ndarray:
    return spin_product_state(spec, [False] * spec.n_spins)


def inverted_state(spec: HilbertSpec) -> np.ndarray:
    return spin_product_state(spec, [True] * spec.n_spins)


# ---------------------------------------------------------------------------
# evolution
# ---------------------------------------------------------------------------


def _integrate(liou: Liouvillian, rho0_vec: np.ndarray, times: np.ndarray,
               tolerance: float, method: str):
    d = liou.dim
    k_out_rate = liou.params.kappa_out * liou.params.kappa

    def rhs(_t, y):
        rho = y[:-1].reshape(d, d)
        drho = liou.apply(rho)
        emitted_rate = k_out_rate * np.real(liou._n_diag @ rho.diagonal())
        return np.concatenate([drho.reshape(-1), [emitted_rate]])

    kwargs = {}
    if method == "BDF":
        # constant analytic jacobian: the assembled superoperator plus the
        # emitted-photon counter row (avoids finite-difference probing)
        d2 = d * d
        diag_idx = np.arange(d) * (d + 1)
        counter_row = sparse.coo_matrix(
            (k_out_rate * np.asarray(liou._n_diag, dtype=complex),
             (np.zeros(d, dtype=int), diag_idx)),
            shape=(1, d2),
        )
        kwargs["jac"] = sparse.bmat(
            [
                [liou.matrix(), sparse.csr_matrix((d2, 1), dtype=complex)],
                [counter_row, sparse.csr_matrix((1, 1), dtype=complex)],
            ],
            format="csc",
        )

    sol = integrate.solve_ivp(
        rhs,
        (times[0], times[-1]),
        rho0_vec,
        t_eval=times,
        method=method,
        rtol=tolerance,
        atol=tolerance * 1e-3,
        **kwargs,
    )
    if not sol.success:
        t_reached = float(sol.t[-1]) if sol.t.size else float(times[0])
        raise StiffnessError(
            f"integrator {method} failed at t = {t_reached:.6e} s with tolerance "
            f"{tolerance:g}; smallest representable step there is {np.spacing(t_reached):.3e} s "
            f"({sol.message})",
            t_reached=t_reached,
            min_step=float(np.spacing(t_reached)),
        )
    return sol


def _observables(liou: Liouvillian, sol_y: np.ndarray, times: np.ndarray) -> dict:
    d = liou.dim
    n = times.size
    out = {
        "s_z": np.empty(n),
        "spsm": np.empty(n),
        "photons": np.empty(n),
        "field": np.empty(n, dtype=complex),
        "emitted": np.empty(n),
        "top_fock": np.empty(n),
    }
    for i in range(n):
        rho = sol_y[:-1, i].reshape(d, d)
        out["s_z"][i] = liou.expect(liou.s_z_op, rho).real
        out["spsm"][i] = liou.expect(liou.spsm_op, rho).real
        out["photons"][i] = liou.photon_number(rho)
        out["field"][i] = liou.expect(liou.a_op, rho)
        out["emitted"][i] = sol_y[-1, i].real
        out["top_fock"][i] = liou.top_fock_population(rho)
    return out


def evolve(
    rho0: np.ndarray,
    liou: Liouvillian,
    times: np.ndarray,
    tolerance: float = 1e-9,
    method: str = "RK45",
    validate: bool = True,
) -> Trajectory:
    """Integrate the master equation and sample observables on ``times``.

    ``times`` is the fixed output grid (strictly increasing, seconds); the
    adaptive integrator steps independently and interpolates onto it.  The
    final state is re-checked against the density-matrix invariants with a
    positivity floor widened to the requested tolerance.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0.0):
        raise ValidationError("times must be a strictly increasing 1-d grid")
    if not (0.0 < tolerance < 1e-2):
        raise ValidationError(f"tolerance must lie in (0, 1e-2), got {tolerance!r}")
    if validate:
        rho0 = validate_density(rho0)
    if rho0.shape != (liou.dim, liou.dim):
        raise ValidationError(
            f"state dimension {rho0.shape} does not match Liouvillian dim {liou.dim}"
        )

    y0 = np.concatenate([np.asarray(rho0, dtype=complex).reshape(-1), [0.0 + 0.0j]])
    sol = _integrate(liou, y0, times, tolerance, method)
    obs = _observables(liou, sol.y, times)

    final = sol.y[:-1, -1].reshape(liou.dim, liou.dim)
    if validate:
        validate_density(
            final,
            herm_tol=1e-8,
            trace_tol=max(1e-10, 10.0 * tolerance),
            eig_floor=-max(1e-8, 10.0 * tolerance),
        )

    k = liou.params
    top_worst = float(obs["top_fock"].max())
    traj = Trajectory(
        times=times,
        s_z=obs["s_z"],
        spsm=obs["spsm"],
        photons=obs["photons"],
        field=obs["field"],
        intensity=k.kappa_out * k.kappa * obs["photons"],
        emitted=obs["emitted"],
        meta={
            "engine": "exact",
            "solver": {"method": method, "tolerance": tolerance},
            "n_fock": liou.spec.n_fock,
            "fock_truncation_ok": bool(top_worst < FOCK_LEAK_LIMIT),
            "top_fock_population": top_worst,
        },
    )
    traj.meta["_final_state"] = final  # in-memory handle, never serialized
    return traj


def drive_then_release(
    rho0: np.ndarray,
    params: PhysicalParams,
    spec: HilbertSpec,
    pulse: PulseSequence,
    times: np.ndarray,
    detunings=0.0,
    tolerance: float = 1e-9,
    method: str = "RK45",
) -> Trajectory:
    """Evolve through a piecewise-constant drive sequence.

    The state is carried continuously across segments; segment boundaries are
    inserted into the sample grid and recorded on the trajectory.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0.0):
        raise ValidationError("times must be a strictly increasing 1-d grid")
    if abs(times[0]) > 0.0:
        raise ValidationError("drive sequences start at t = 0")
    total = pulse.total_duration
    if times[-1] > total * (1.0 + 1e-12):
        raise ValidationError(
            f"grid extends to {times[-1]!r} s beyond the pulse total {total!r} s"
        )

    rho = validate_density(rho0)
    boundaries = pulse.boundaries()
    pieces: list[Trajectory] = []
    t_start = 0.0
    emitted_offset = 0.0
    fock_worst = 0.0
    for (duration, eta), t_end in zip(pulse.segments, boundaries):
        liou = build_liouvillian(params, spec, detunings=detunings, eta=eta)
        inside = times[(times > t_start + 1e-18) & (times < t_end - 1e-18)]
        seg_times = np.unique(np.concatenate([[t_start], inside, [t_end]]))
        seg = evolve(rho, liou, seg_times, tolerance=tolerance, method=method, validate=False)
        seg.emitted += emitted_offset
        emitted_offset = seg.emitted[-1]
        fock_worst = max(fock_worst, seg.meta["top_fock_population"])
        rho = seg.meta.pop("_final_state")
        pieces.append(seg)
        t_start = t_end

    def _merge(attr):
        parts = [getattr(pieces[0], attr)]
        for piece in pieces[1:]:
            parts.append(getattr(piece, attr)[1:])  # drop duplicated boundary
        return np.concatenate(parts)

    traj = Trajectory(
        times=_merge("times"),
        s_z=_merge("s_z"),
        spsm=_merge("spsm"),
        photons=_merge("photons"),
        field=_merge("field"),
        intensity=_merge("intensity"),
        emitted=_merge("emitted"),
        segment_boundaries=boundaries,
        meta={
            "engine": "exact",
            "solver": {"method": method, "tolerance": tolerance},
            "n_fock": spec.n_fock,
            "drive_off_time": pulse.drive_off_time(),
            "fock_truncation_ok": bool(fock_worst < FOCK_LEAK_LIMIT),
            "top_fock_population": fock_worst,
        },
    )
    traj.meta["_final_state"] = rho
    return traj
