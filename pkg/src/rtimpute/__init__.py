"""rtimpute: real-time imputation of missing predictor values, survival risk
prediction, and validation tooling over synthetic cohorts."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .imputation import (
    ImputationResult,
    Method,
    VariableSet,
    conditional_normal,
    impute_joint,
    impute_joint_multiple,
    impute_mean,
)
from .population import (
    PopulationCharacteristics,
    draw_local_sample,
    estimate_characteristics,
    ingest_csv,
    load_characteristics,
    pool_datasets,
    save_characteristics,
    write_csv,
)
from .cox import (
    CoxModel,
    RiskPrediction,
    absolute_risk,
    expected_events,
    fit_cox,
    linear_predictor,
    load_external_model,
    load_model,
    predict_risk,
    save_model,
    ten_year_risk,
)
from .metrics import (
    DecisionCurve,
    GroupedCalibration,
    MembershipC,
    MetricsReport,
    calibration_in_the_large,
    calibration_slope,
    concordance,
    decision_curve,
    grouped_km_calibration,
    kaplan_meier,
    membership_c,
    mse_lp,
    oe_ratio,
    poisson_offset_glm,
)
from .schema import MISSING, Dataset, PatientRecord, Schema, Variable
from .simulation import (
    ENRICHMENT_SIZES,
    MissingScenario,
    SimulationConfig,
    SimulationRow,
    Study,
    SyntheticCohortSpec,
    apply_missing_scenario,
    default_scenarios,
    default_schema,
    default_spec,
    evaluate,
    generate_synthetic_cohorts,
    run_external_model_simulation,
    run_loocv_simulation,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "MISSING",
    "Dataset",
    "PatientRecord",
    "Schema",
    "Variable",
    "PopulationCharacteristics",
    "estimate_characteristics",
    "pool_datasets",
    "draw_local_sample",
    "save_characteristics",
    "load_characteristics",
    "ingest_csv",
    "write_csv",
    "Method",
    "VariableSet",
    "ImputationResult",
    "conditional_normal",
    "impute_mean",
    "impute_joint",
    "impute_joint_multiple",
    "CoxModel",
    "RiskPrediction",
    "fit_cox",
    "linear_predictor",
    "expected_events",
    "ten_year_risk",
    "absolute_risk",
    "predict_risk",
    "save_model",
    "load_model",
    "load_external_model",
    "MetricsReport",
    "DecisionCurve",
    "GroupedCalibration",
    "MembershipC",
    "mse_lp",
    "concordance",
    "poisson_offset_glm",
    "calibration_in_the_large",
    "calibration_slope",
    "oe_ratio",
    "kaplan_meier",
    "grouped_km_calibration",
    "decision_curve",
    "membership_c",
    "Study",
    "MissingScenario",
    "SimulationConfig",
    "SimulationRow",
    "SyntheticCohortSpec",
    "ENRICHMENT_SIZES",
    "default_schema",
    "default_spec",
    "default_scenarios",
    "generate_synthetic_cohorts",
    "apply_missing_scenario",
    "run_loocv_simulation",
    "run_external_model_simulation",
    "evaluate",
]
