"""Route-choice driven two-class macroscopic traffic model.

CPT route choice yields the class split ``alpha``; ``alpha`` parameterises a
two-class hyperbolic conservation law whose spectrum, stability and
perturbation dynamics this package computes.
"""
from .analysis import (block_eigenvalues, check_hyperbolicity, fit_decay,
                       lyapunov_certificate, stability_report)
from .cpt import CptParams, Prospect, cpt_value, cpt_value_empirical, prelec_weight
from .density import gaussian_kernel, kde_density, mix_densities
from .model import OperatingPoint, TrafficState, flux, jacobian, legendre_fenchel
from .route_choice import SocialScenario, choose_routes, compute_alpha
from .solver import SolverConfig, run_simulation

__version__ = "0.1.0"
