"""Cell-balance sweep: advance nodal temperature and velocity.

Each cell integrates its surface exchange over the half-step-fresh
ports: diffusive gradient fluxes (cached by the face sweep), advective
transport through every face, buoyancy from the temperature excess,
the nodal pressure gradient, and volumetric heating.  The update is
explicit and local; all cells advance from the same read-only port
snapshot, so sweep order cannot matter.

Sign note: the thermal expansion coefficient is the relative density
change per kelvin, d(rho)/dT / rho, which is NEGATIVE for ordinary
fluids (about -1/T for an ideal gas).  With gravity pointing down,
e.g. g = (0, -9.81, 0), a negative beta makes hot fluid rise.  Passing
a positive beta silently flips every plume upside down.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hexmesh import Mesh
from .state import FieldState


@dataclass(frozen=True)
class MaterialProps:
    """Constant fluid properties (Boussinesq: density varies only in
    the gravity term)."""

    alpha: float = 0.0       # thermal diffusivity, m^2/s
    eta: float = 0.0         # dynamic viscosity, Pa s
    rho_inf: float = 1.0     # reference density, kg/m^3
    beta: float = 0.0        # thermal expansion d(rho)/dT / rho, 1/K; < 0 for real fluids
    T_inf: float = 0.0       # reference temperature, K
    g: tuple = (0.0, 0.0, 0.0)  # gravity, m/s^2

    def __post_init__(self):
        if not (self.alpha >= 0.0):
            raise ValueError("alpha must be >= 0")
        if not (self.eta >= 0.0):
            raise ValueError("eta must be >= 0")
        if not (self.rho_inf > 0.0):
            raise ValueError("rho_inf must be > 0")
        vals = (self.alpha, self.eta, self.rho_inf, self.beta, self.T_inf, *self.g)
        if not np.isfinite(vals).all():
            raise ValueError("material properties must be finite")
        object.__setattr__(self, "g", tuple(float(c) for c in self.g))

    @property
    def nu(self) -> float:
        """Kinematic viscosity eta / rho_inf."""
        return self.eta / self.rho_inf


@dataclass(frozen=True)
class SourceField:
    """Volumetric heat source per cell, in temperature units per second."""

    q: object = 0.0  # scalar or (nc,) array

    def __post_init__(self):
        q = np.asarray(self.q, dtype=np.float64)
        if not np.isfinite(q).all():
            raise ValueError("heat source must be finite")
        object.__setattr__(self, "q", q if q.ndim else float(q))


def nodal_gradient(mesh: Mesh, face_values) -> np.ndarray:
    """Cell-centered Cartesian gradient from opposite-face differences.

    Exact for affine fields on any valid cell, because each node vector
    joins the centroids of its two faces exactly.  Shape (nc, 3).
    """
    face_values = np.asarray(face_values, dtype=np.float64)
    d = face_values[:, 1::2] - face_values[:, 0::2]  # (nc, 3)
    return np.einsum("cnm,cm->cn", mesh.gamma, d)


def advective_rates(mesh: Mesh, state: FieldState) -> np.ndarray:
    """u . f volume flow rate through every face, outward positive."""
    return np.einsum("cfi,cfi->cf", state.face_u, mesh.face_vecs)


def update_temperature_node(mesh: Mesh, state: FieldState, props: MaterialProps,
                            q, tau: float) -> np.ndarray:
    """New nodal temperatures; reads only port-time data, returns a copy."""
    out_flow = advective_rates(mesh, state)
    net = props.alpha * state.flux["T"] - state.face_T * out_flow
    return state.cell_T + (tau / mesh.volumes) * net.sum(axis=1) + tau * q


def update_velocity_node(mesh: Mesh, state: FieldState, props: MaterialProps,
                         grad_p: np.ndarray, tau: float) -> np.ndarray:
    """New nodal velocities from viscous, advective, buoyant and
    pressure-gradient contributions; returns a copy."""
    out_flow = advective_rates(mesh, state)
    buoy = props.beta * (state.cell_T - props.T_inf)
    nu = props.nu
    new_u = np.empty_like(state.cell_u)
    for k, name in enumerate(("ux", "uy", "uz")):
        net = nu * state.flux[name] - state.face_u[:, :, k] * out_flow
        new_u[:, k] = (
            state.cell_u[:, k]
            + tau * (buoy * props.g[k] - grad_p[:, k] / props.rho_inf)
            + (tau / mesh.volumes) * net.sum(axis=1)
        )
    return new_u


def reflection_sweep(mesh: Mesh, state: FieldState, props: MaterialProps,
                     tau: float, source=None, coarsen_hook=None) -> None:
    """Advance all nodal T and u by one full step, in place.

    Requires a completed face sweep (ports lead, fluxes cached).  The
    optional ``coarsen_hook(mesh, state)`` runs first, before any nodal
    value is read, which is the place the periodic port-averaging
    stabilization plugs in.
    """
    if not state.ready_for_cell_sweep:
        raise ValueError("cell sweep needs ports half a step ahead of nodes")
    missing = [k for k in ("T", "ux", "uy", "uz") if k not in state.flux]
    if missing:
        raise ValueError(f"port fluxes not cached (missing {missing}); "
                         "run the face sweep first")
    if coarsen_hook is not None:
        coarsen_hook(mesh, state)

    if source is None:
        q = 0.0
    elif isinstance(source, SourceField):
        q = source.q
    else:
        q = np.asarray(source, dtype=np.float64)

    grad_p = nodal_gradient(mesh, state.face_p)
    new_T = update_temperature_node(mesh, state, props, q, tau)
    new_u = update_velocity_node(mesh, state, props, grad_p, tau)
    state.cell_T = new_T
    state.cell_u = new_u
    state.advance_nodes()


def cfl_number(mesh: Mesh, state: FieldState, props: MaterialProps,
               tau: float) -> float:
    """Worst-cell stability indicator for the explicit update.

    Largest of the advective number |u| tau / h and the two diffusive
    numbers 2 a tau / h^2 (thermal and viscous), over all cells, with h
    the cell's smallest thickness.  Not a sharp bound; values well
    above 1 reliably precede blow-up.
    """
    h = mesh.cell_size
    speed = np.linalg.norm(state.cell_u, axis=1)
    adv = (speed * tau / h).max() if len(h) else 0.0
    diff = 2.0 * max(props.alpha, props.nu) * tau / (h * h).min()
    return float(max(adv, diff))
