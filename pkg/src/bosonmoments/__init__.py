"""Moment-based learning of Gaussian-transformed Fock states and symplectic invariants."""

from .errors import *  # noqa: F401,F403
from .invariants import (
    convertibility_witness,
    eigen_invariants,
    fock_moments,
    gamma_tensor,
    state_moments,
    theta_contraction,
)
from .learner import align_symplectic, align_unitary, find_q, find_v, find_v_fock
from .measurement import (
    recover_sigma1,
    recover_sigma2,
    sample_budget_active,
    sample_budget_passive,
    simulate_correlators,
)
from .moments import (
    NoiseSpec,
    add_noise,
    lambda_fock,
    lambda_to_sigma,
    sigma_fock,
    transform_lambda,
    transform_sigma,
)
from .oracle import passive_fidelity, passive_fock_overlap, permanent
from .symplectic import (
    euler,
    nearest_orthogonal_symplectic,
    passive_embed,
    random_passive,
    random_symplectic,
    williamson,
)
