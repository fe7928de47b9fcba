"""Expressibility of layered parameterized circuits: sampling, exact frame potentials, VQE."""
from .ansatz import AnsatzSpec, build_template, prepare_state, sample_block_haar_state, sample_parameters
from .moments import (
    alt_second_frame_potential,
    corollary1_bound,
    haar_second_frame_potential,
    ten_second_frame_potential,
    theorem4_bound,
)
from .sampling import frame_potential, haar_frame_potential, kl_expressibility, sample_fidelities
from .vqe import build_heisenberg_ring, gradient_profile, run_trials

__all__ = [
    "AnsatzSpec",
    "build_template",
    "prepare_state",
    "sample_block_haar_state",
    "sample_parameters",
    "alt_second_frame_potential",
    "corollary1_bound",
    "haar_second_frame_potential",
    "ten_second_frame_potential",
    "theorem4_bound",
    "frame_potential",
    "haar_frame_potential",
    "kl_expressibility",
    "sample_fidelities",
    "build_heisenberg_ring",
    "gradient_profile",
    "run_trials",
]
