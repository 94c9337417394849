"""Numerical laboratory for the parabolic total variation flow and its continuity diagnostics."""

from .grid import (
    Ball,
    Cylinder,
    DualField,
    OscillationData,
    SpaceTimeField,
    ess_osc,
    read_dual,
    read_field,
    sample_analytic,
    write_dual,
    write_field,
)
from .tvmeasure import TVSlice, LevelSet, tv_slice, tv_time_integral, level_set_measure
from .flow import SolverConfig, rof_step, evolve, regularized_step, residual_div_z
from .cutoff import Cutoff
from .certify import TruncationSpec, EnergyBudget, minimizer_gap, dg_energy_report, one_laplacian_certificate
from .continuity import (
    IndicatorCurve,
    DeGiorgiConstants,
    ExpansionConstants,
    CascadeState,
    indicator,
    necessary_bound_check,
    degiorgi_nu,
    iterate_Yn,
    degiorgi_lemma_check,
    expansion_check,
    oscillation_cascade,
    sup_bound_check,
)
from .examples import AnalyticExample, make_example, analytic_tv

__version__ = "0.1.0"
