"""Simulation and estimation toolkit for randomized trials with contagious
outcomes: a structural within-cluster transmission model, independent and
coupled epidemic samplers, three randomization designs, direct-effect
estimators, an exact small-cluster oracle, and a Monte Carlo harness."""

from .estimators import (ClusterRecord, TrialData, TrialResult, de_hat,
                         de_hat_bernoulli, de_hat_block, de_hat_cluster)
from .experiments import (CoefficientMode, ExperimentConfig, HorizonSpec,
                          MaskRow, SizeSpec, SweepResult, SweepRow,
                          heatmap_mask, run_heatmap, run_replicate, run_sweep,
                          run_trial_detail, verify_propositions,
                          write_mask_csv, write_sweep_csv)
from .model import (Cluster, EpidemicState, ModelParams, NormalSpec, hazard,
                    susceptibility_hazard_ratio)
from .oracle import (CtmcSpec, ExactDirectEffect, build_ctmc,
                     check_block_decomposition, exact_de,
                     exact_individual_average, exact_marginals,
                     state_distribution)
from .randomization import (DegenerateBlockDesign, Design, DesignSpec,
                            allocation_pmf, assign, conditional_pmf_others)
from .simulator import (CoupledOutcome, CouplingRequiresNullBeta,
                        EpidemicOutcome, SimultaneousInfections, simulate,
                        simulate_coupled, waiting_time_cdf,
                        waiting_time_inverse)
from .verification import (ChiSquareResult, Contrast, DominanceReport,
                           DominanceSpec, MarginalValidityReport, Relation,
                           check_dominance, check_marginal_validity,
                           expected_relation)

__version__ = "0.1.0"

__all__ = [
    "ClusterRecord", "TrialData", "TrialResult", "de_hat", "de_hat_bernoulli",
    "de_hat_block", "de_hat_cluster",
    "CoefficientMode", "ExperimentConfig", "HorizonSpec", "MaskRow", "SizeSpec",
    "SweepResult", "SweepRow", "heatmap_mask", "run_heatmap", "run_replicate",
    "run_sweep", "run_trial_detail", "verify_propositions", "write_mask_csv",
    "write_sweep_csv",
    "Cluster", "EpidemicState", "ModelParams", "NormalSpec", "hazard",
    "susceptibility_hazard_ratio",
    "CtmcSpec", "ExactDirectEffect", "build_ctmc", "check_block_decomposition",
    "exact_de", "exact_individual_average", "exact_marginals",
    "state_distribution",
    "DegenerateBlockDesign", "Design", "DesignSpec", "allocation_pmf", "assign",
    "conditional_pmf_others",
    "CoupledOutcome", "CouplingRequiresNullBeta", "EpidemicOutcome",
    "SimultaneousInfections", "simulate", "simulate_coupled",
    "waiting_time_cdf", "waiting_time_inverse",
    "ChiSquareResult", "Contrast", "DominanceReport", "DominanceSpec",
    "MarginalValidityReport", "Relation", "check_dominance",
    "check_marginal_validity", "expected_relation",
]
