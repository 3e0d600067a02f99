"""Divide-and-learn performance prediction for configurable software.

Training samples are divided into locally smooth groups by a regression
tree, the division depth is adapted with an averaging-hypervolume score,
an isolated local model is trained per division, and new configurations
are routed to their division by a SMOTE-balanced Random Forest. An
evaluation harness (MRE, Scott-Knott ranking) compares divided learners
against their global counterparts.
"""

from .assign import (
    BalancedSet,
    ForestClassifier,
    PseudoLabeledSet,
    assign_division,
    assign_many,
    make_pseudo_labels,
    smote_balance,
    train_forest,
)
from .cart import (
    CartNode,
    CartTree,
    Division,
    DivisionSet,
    SplitRecord,
    best_split,
    extract_divisions,
    predict_mean,
    train_cart,
)
from .dataset import (
    Dataset,
    OptionMeta,
    SplitPlan,
    dataset_from_arrays,
    load_dataset,
    sample_split,
    save_dataset,
    training_size,
)
from .depth_adapt import (
    DepthScore,
    ObjectivePoint,
    ReferencePoint,
    adapt_depth,
    depth_scores,
    division_objectives,
    mu_hv,
    nadir_reference,
    select_best,
)
from .evaluation import (
    EvaluationReport,
    RankTable,
    RunResult,
    a12,
    dal_approach,
    global_approach,
    mre,
    run_experiment,
    scott_knott,
)
from .localmodels import (
    LocalModelSpec,
    TrainedLocalModel,
    linear_coefficients,
    predict_local,
    train_local,
)
from .pipeline import DalModel, fit, load_model, predict, predict_many, save_model
from .synth import LandscapeSpec, generate, mode_labels

__version__ = "0.1.0"
