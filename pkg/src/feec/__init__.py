"""Finite element exterior calculus on simplicial meshes in exact and floating arithmetic."""
from .barycentric import LocalForm, exterior_derivative, trace, wedge, whitney_form
from .curlcurl import (
    CurlCurlProblem,
    estimate,
    lowest_order_sigma,
    manufactured_problem,
    reconstruct_sigma,
    run_estimator,
    solve_galerkin,
)
from .flux import cohomology_dims, flux_reconstruct, full_reconstruct, pseudo_inverse_local, pseudo_inverse_whitney
from .interpolants import PiecewiseForm, interpolate_canonical, interpolate_whitney
from .simplicial import Complex, betti_numbers, build_complex
from .spaces.assignment import SequenceAssignment, assignment_from_spec, uniform_assignment
from .spaces.layout import GlobalForm, Layout, assemble_global_d, decompose_piecewise

__all__ = [
    "Complex", "CurlCurlProblem", "GlobalForm", "Layout", "LocalForm", "PiecewiseForm", "SequenceAssignment",
    "assemble_global_d", "assignment_from_spec", "betti_numbers", "build_complex", "cohomology_dims",
    "decompose_piecewise", "estimate", "exterior_derivative", "flux_reconstruct", "full_reconstruct",
    "interpolate_canonical", "interpolate_whitney", "lowest_order_sigma", "manufactured_problem",
    "pseudo_inverse_local", "pseudo_inverse_whitney", "reconstruct_sigma", "run_estimator", "solve_galerkin",
    "trace", "uniform_assignment", "wedge", "whitney_form",
]
