"""Iterative pressure correction enforcing discrete incompressibility.

After the face sweep has produced fresh velocity ports, each cell
carries a boundary divergence integral I = sum over faces of u.f.  The
nodal pressure field is adjusted until the reconstructed pressure
gradient flux balances it cell by cell:

    tau * (sum over faces of grad-p flux) = rho_inf * I

a pure-Neumann Poisson problem (boundary faces carry zero normal
pressure gradient), solved by relaxation sweeps over the cells with the
face pressures re-established between sweeps.  One reference cell is
pinned to remove the additive constant.

Two cell orderings are available: "natural" visits cells sequentially
(classic Gauss-Seidel), "redblack" runs two vectorized half-sweeps over
the mesh two-coloring and is the fast path on structured meshes.
"""

import numpy as np
from dataclasses import dataclass

from .connection import (
    contract_flux_coeffs,
    face_nodal_components,
    one_sided_face_value,
    update_interface,
)
from .errors import DegenerateCellError, PressureConvergenceError, SingularInterfaceError

ORDERINGS = ("natural", "redblack")

_SINGULAR_RTOL = 1e-14


@dataclass(frozen=True)
class PressureSolverConfig:
    max_iterations: int = 500
    tolerance: float = 1e-8
    relaxation: float = 1.0
    ordering: str = "natural"

    def __post_init__(self):
        if not isinstance(self.max_iterations, (int, np.integer)) or self.max_iterations < 1:
            raise ValueError("max_iterations must be an integer >= 1")
        if not (self.tolerance > 0.0 and np.isfinite(self.tolerance)):
            raise ValueError("tolerance must be positive and finite")
        if not (0.0 < self.relaxation < 2.0):
            raise ValueError(
                f"relaxation factor must lie in (0, 2), got {self.relaxation}")
        if self.ordering not in ORDERINGS:
            raise ValueError(
                f"unknown ordering {self.ordering!r}; pick from {ORDERINGS}")


def cell_divergence_integral(mesh, face_u: np.ndarray) -> np.ndarray:
    """Boundary integral of u.dF per cell from the velocity ports."""
    return np.einsum("cfk,cfk->c", face_u, mesh.face_vecs)


def _tangential_flux_part(mesh, face_p):
    # contraction of the in-plane gradient slots only; normal slots zeroed
    # by feeding zero cell values
    zeros = np.zeros(mesh.n_cells)
    return contract_flux_coeffs(mesh, face_nodal_components(mesh, zeros, face_p))


def gradient_flux(mesh, cell_p: np.ndarray, face_p: np.ndarray) -> np.ndarray:
    """Outward pressure-gradient flux per (cell, face): s.z - g*P."""
    sz = contract_flux_coeffs(mesh, face_nodal_components(mesh, cell_p, face_p))
    return sz - mesh.pair_coeff * face_p


def pressure_residual(mesh, cell_p, face_p, div_integral, tau, rho_inf) -> np.ndarray:
    """Signed per-cell defect tau*(sum of gradient flux) - rho_inf*I."""
    return tau * gradient_flux(mesh, cell_p, face_p).sum(axis=1) \
        - rho_inf * div_integral


def pressure_cell_solve(mesh, cell_p, face_p, div_integral, tau, rho_inf,
                        relaxation: float = 1.0) -> np.ndarray:
    """Per-cell exact compensation with all six face pressures held fixed.

    Returns the nodal pressures solving each cell's balance equation
    (relaxed by the SOR factor), computed as an increment off the current
    value so an already-balanced cell comes back bit-identical.
    """
    g = mesh.pair_coeff
    diag = g.sum(axis=1)
    bad = np.abs(diag) <= _SINGULAR_RTOL * np.abs(g).sum(axis=1)
    if bad.any():
        raise DegenerateCellError(
            f"zero diagonal in pressure equation of cell {int(np.argmax(bad))}")
    defect = rho_inf * div_integral / tau \
        - gradient_flux(mesh, cell_p, face_p).sum(axis=1)
    return cell_p + relaxation * (defect / diag)


def pressure_face_sweep(mesh, cell_p, face_p, sz=None) -> np.ndarray:
    """Re-establish face pressures from nodal values.

    Interior faces get the shared interface value; boundary faces get the
    one-sided zero-normal-gradient value.  ``sz`` may carry precomputed
    reconstruction fluxes for this (cell_p, face_p) pair.
    """
    if sz is None:
        sz = contract_flux_coeffs(mesh, face_nodal_components(mesh, cell_p, face_p))
    new = face_p.copy()
    vals = update_interface(mesh, cell_p, sz)
    new[mesh.icell_a, mesh.iface_a] = vals
    new[mesh.icell_b, mesh.iface_b] = vals
    if len(mesh.bcell):
        new[mesh.bcell, mesh.bface] = one_sided_face_value(
            mesh, cell_p, sz, mesh.bcell, mesh.bface)
    return new


def project_port_velocities(mesh, state, tau: float, rho_inf: float) -> None:
    """Subtract the face-normal pressure gradient from the velocity ports.

    The per-face gradient flux S here is the same discrete quantity the
    Poisson iteration balanced against the divergence integrals, so the
    corrected ports settle the budget cell by cell: after a converged
    solve, each cell's sum of u.f drops to the converged residual over
    rho_inf.  Interior ports move as one shared value per face pair so
    the skeleton stays single-valued; boundary ports are left alone
    (their pressure flux vanishes under the zero-normal-gradient rule,
    and their values belong to the boundary rules).
    """
    if mesh.n_interior_faces == 0:
        return
    S = gradient_flux(mesh, state.cell_p, state.face_p)
    fv = mesh.face_vecs[mesh.icell_a, mesh.iface_a]
    shift = (tau / rho_inf * S[mesh.icell_a, mesh.iface_a]
             / np.einsum("ik,ik->i", fv, fv))[:, None] * fv
    state.face_u[mesh.icell_a, mesh.iface_a] -= shift
    state.face_u[mesh.icell_b, mesh.iface_b] -= shift


def _interface_coupling(mesh):
    """Geometric half of the interface elimination, shape (n_cells, 6).

    Eliminating the shared port between two cells turns the flux into
    S = H*(p - p_nb) + C; this returns H, which depends on the mesh only,
    so the solver hoists it out of the relaxation loop.  Boundary faces
    carry zeros (their pressure flux vanishes by the boundary rule).
    """
    g = mesh.pair_coeff
    H = np.zeros_like(g)
    ga = g[mesh.icell_a, mesh.iface_a]
    gb = g[mesh.icell_b, mesh.iface_b]
    den = ga + gb
    bad = np.abs(den) <= _SINGULAR_RTOL * (np.abs(ga) + np.abs(gb))
    if bad.any():
        raise SingularInterfaceError(
            "vanishing combined flux coefficient at an interior face")
    h = ga * gb / den
    H[mesh.icell_a, mesh.iface_a] = h
    H[mesh.icell_b, mesh.iface_b] = h
    return H


def pressure_iterate(mesh, state, tau: float, rho_inf: float,
                     config: PressureSolverConfig = None):
    """Drive the pressure field to compensate the velocity divergence.

    Mutates state.cell_p and state.face_p in place and returns
    (iterations_used, residual_history).  The convergence threshold is
    config.tolerance times the largest per-face mass flux magnitude
    (absolute when the ports are entirely quiescent).  Raises
    PressureConvergenceError when max_iterations passes do not reach it.
    """
    if config is None:
        config = PressureSolverConfig()
    if not state.ready_for_cell_sweep:
        raise ValueError("pressure correction runs on fresh velocity ports")
    if config.ordering == "redblack" and mesh.colors is None:
        raise ValueError("redblack ordering needs a two-colorable mesh")

    div = cell_divergence_integral(mesh, state.face_u)
    flux_scale = rho_inf * np.abs(
        np.einsum("cfk,cfk->cf", state.face_u, mesh.face_vecs)).max()
    threshold = config.tolerance * flux_scale if flux_scale > 0.0 else config.tolerance

    history = []
    resid = np.abs(pressure_residual(
        mesh, state.cell_p, state.face_p, div, tau, rho_inf)).max()
    if resid <= threshold:
        # already balanced: leave the field bit-identical
        return 0, [float(resid)]

    # pin by constant shift: gradients unchanged, cell 0 lands at zero
    p = state.cell_p - state.cell_p[0]
    fp = state.face_p - state.cell_p[0]

    omega = config.relaxation
    rhs_base = rho_inf * div / tau
    nb_cell = np.where(mesh.neighbor_cell < 0, 0, mesh.neighbor_cell)
    g = mesh.pair_coeff
    H = _interface_coupling(mesh)
    diag = H.sum(axis=1)
    # all cells sweep; the constant mode is exactly invariant, so the
    # reference shift at the end settles the additive freedom.  Cells
    # with no interior faces have nothing to solve and are skipped.
    active = np.abs(diag) > 0.0
    ia, fa = mesh.icell_a, mesh.iface_a
    ib, fb = mesh.icell_b, mesh.iface_b
    ga, gb = g[ia, fa], g[ib, fb]
    C = np.zeros_like(g)
    t = _tangential_flux_part(mesh, fp)
    iterations = 0
    for _ in range(config.max_iterations):
        # offset half of the interface elimination, from the current
        # in-plane fluxes
        c = (gb * t[ia, fa] - ga * t[ib, fb]) / (ga + gb)
        C[ia, fa] = c
        C[ib, fb] = -c
        rhs = rhs_base - C.sum(axis=1)
        if config.ordering == "natural":
            for z in np.flatnonzero(active):
                acc = H[z] @ p[nb_cell[z]]
                p[z] = (1.0 - omega) * p[z] + omega * (rhs[z] + acc) / diag[z]
        else:
            for color in (0, 1):
                cells = np.flatnonzero(active & (mesh.colors == color))
                acc = np.einsum("cf,cf->c", H[cells], p[nb_cell[cells]])
                p[cells] = (1.0 - omega) * p[cells] \
                    + omega * (rhs[cells] + acc) / diag[cells]
        # the in-plane fluxes never see the nodal values, so t feeds the
        # face sweep through sz = t + g*p and is refreshed only after the
        # ports move
        fp = pressure_face_sweep(mesh, p, fp, sz=t + g * p[:, None])
        iterations += 1
        t = _tangential_flux_part(mesh, fp)
        flux = t + g * (p[:, None] - fp)
        resid = np.abs(tau * flux.sum(axis=1) - rho_inf * div).max()
        history.append(float(resid))
        if resid <= threshold:
            break
    fp = fp - p[0]
    p = p - p[0]
    state.cell_p = p
    state.face_p = fp
    if resid > threshold:
        raise PressureConvergenceError(
            f"pressure iteration stalled at residual {resid:.3e} "
            f"(threshold {threshold:.3e}) after {iterations} sweeps",
            iterations=iterations, residual=float(resid))
    return iterations, history
