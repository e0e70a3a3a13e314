"""Tail approximations for integrals of exponentiated Gaussian random fields."""

from ._grftail import (
    ConfigError,
    CovarianceModel,
    Error,
    InfeasibleError,
    NumericalError,
    SpectralMoments,
    constant_H,
    constant_H_quadrature,
    cover_counts,
    importance_sampling,
    minimum_log_b,
    one_big_jump_approx,
    run_cli,
    sample_field,
    solve_u,
    spectral_moments,
    standardize,
    sum_tail_mc,
    tail_approx,
    threshold_for_marginal_tail,
    threshold_for_probability,
    u_closed_form,
)

__all__ = [name for name in dir() if not name.startswith("_")]
