"""Numeric defaults shared by the library and the CLI.

All tolerances and step sizes live here so a run can be reproduced from its
flags alone. The CLI exposes the commonly tuned ones as options.
"""

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Defaults:
    # normal form / verifier
    sigma_tol: float = 1e-9          # |e1.x| <= sigma_tol * (1 + |x|) counts as "on Sigma"
    cond_max: float = 1e12           # cond(I - M_X) above this is treated as singular
    cubic_disc_tol: float = 1e-10    # near-multiple-root threshold for the closed-form cubic
    equality_tol: float = 1e-9       # lambda1*lambda2 == 1, homoclinic projection, etc.
    backward_periods: int = 10
    forward_converge_tol: float = 1e-9
    forward_safety_periods: int = 2
    forward_cap_periods: int = 200
    k_max: int = 8

    # parameter synthesis
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    fd_rel_step: float = 1e-7
    armijo_factor: float = 0.5
    armijo_max_halvings: int = 40
    search_radius: float = 0.05      # half-width of the multi-start box around a guess
    search_points: int = 5           # grid points per axis in that box
    search_max_iter: int = 20        # Newton budget per start inside the search

    # ODE model
    grid_per_period: int = 2048
    root_tol: float = 1e-13
    sliding_steps: int = 48
    sliding_min_denominator: float = 1e-12
    escape_base_periods: int = 10

    # continuation
    orbit_tol: float = 1e-10
    orbit_max_iter: int = 25
    orbit_fd_step: float = 1e-9
    min_step: float = 1e-8
    marginal_tol: float = 1e-6
    fold_bracket: float = 1e-6
    diag_scale: float = 500.0
    start_offset: float = 1e-6

    def override(self, **kwargs):
        known = {f.name for f in fields(self)}
        clean = {k: v for k, v in kwargs.items() if v is not None}
        unknown = set(clean) - known
        if unknown:
            raise KeyError(f"unknown config keys: {sorted(unknown)}")
        for k, v in clean.items():
            if k.endswith(("tol", "step")) and v <= 0:
                raise ValueError(f"{k} must be strictly positive, got {v}")
        return replace(self, **clean)


DEFAULTS = Defaults()
