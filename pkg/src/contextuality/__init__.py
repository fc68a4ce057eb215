"""Contextuality toolkit: finite measurement scenarios, quantum
realizations, possibilistic logic, noncontextual fractions, observer
chains, and a small scenario-file format with a CLI on top.
"""
from __future__ import annotations

from .qstate import (
    Distribution,
    ProductBasis,
    SiteBasis,
    StateVector,
    born,
    computational_basis,
    diagonal_basis,
    memory_basis,
    premeasure,
    project,
    tensor,
)
from .scenario import (
    EmpiricalModel,
    MeasurementRecipe,
    Observable,
    PossibilisticModel,
    QuantumRealization,
    Scenario,
    marginal,
    no_disturbance,
    realize,
    snap_to_rationals,
    support_of,
)
from .logic import (
    Classification,
    GlobalAssignment,
    ImplicationStep,
    LiarCycle,
    classify,
    cycle_empirical_model,
    cycle_model,
    extends_to_global,
    global_sections,
    liar_cycles,
)
from .ncpoly import (
    FractionResult,
    SignallingModelError,
    contextual_fraction,
)
from .builders import (
    CertainImplication,
    Friendified,
    ProbabilityStatement,
    certain_implications,
    fr_realization,
    friendify,
    hardy_realization,
)
from .metacontext import (
    Agent,
    AssumptionSet,
    BranchEnsemble,
    Claim,
    Cut,
    InferenceStep,
    ObserverChain,
    Verdict,
    check_claims,
    claims_for_cycle,
    coherent_final_basis,
    compare_cuts,
    computational_final_basis,
    describe,
    fr_claim_set,
    mixture_born,
    observer_claims,
)
from .scnformat import (
    ParseError,
    ScenarioFile,
    parse_file,
    parse_model,
    serialize_chain,
    serialize_model,
    serialize_realization,
    serialize_scenario,
)
from .report import (
    AnalysisReport,
    chain_report,
    model_report,
    render_json,
    render_text,
    scenario_report,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # states and bases
    "StateVector",
    "SiteBasis",
    "ProductBasis",
    "Distribution",
    "tensor",
    "born",
    "project",
    "premeasure",
    "computational_basis",
    "diagonal_basis",
    "memory_basis",
    # scenarios and models
    "Observable",
    "Scenario",
    "EmpiricalModel",
    "MeasurementRecipe",
    "QuantumRealization",
    "PossibilisticModel",
    "realize",
    "no_disturbance",
    "support_of",
    "marginal",
    "snap_to_rationals",
    # possibilistic logic
    "Classification",
    "GlobalAssignment",
    "ImplicationStep",
    "LiarCycle",
    "global_sections",
    "extends_to_global",
    "classify",
    "liar_cycles",
    "cycle_model",
    "cycle_empirical_model",
    # noncontextual fraction
    "SignallingModelError",
    "FractionResult",
    "contextual_fraction",
    # built-in realizations and sentences
    "CertainImplication",
    "ProbabilityStatement",
    "Friendified",
    "hardy_realization",
    "friendify",
    "fr_realization",
    "certain_implications",
    # observer chains and claims
    "Agent",
    "ObserverChain",
    "Cut",
    "BranchEnsemble",
    "AssumptionSet",
    "Claim",
    "InferenceStep",
    "Verdict",
    "describe",
    "mixture_born",
    "compare_cuts",
    "computational_final_basis",
    "coherent_final_basis",
    "observer_claims",
    "claims_for_cycle",
    "fr_claim_set",
    "check_claims",
    # file format
    "ParseError",
    "ScenarioFile",
    "parse_file",
    "parse_model",
    "serialize_scenario",
    "serialize_model",
    "serialize_realization",
    "serialize_chain",
    # reports
    "AnalysisReport",
    "model_report",
    "chain_report",
    "scenario_report",
    "render_text",
    "render_json",
]
