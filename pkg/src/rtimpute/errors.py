"""Exception taxonomy shared by all rtimpute modules."""


class RtImputeError(Exception):
    """Base class for all rtimpute errors."""


# --- population model ---------------------------------------------------


class ZeroVariance(RtImputeError):
    """A selected column is constant; its covariance row would be singular."""


class OutcomeIncluded(RtImputeError):
    """An outcome-role variable was requested for characteristic estimation."""


class SchemaMismatch(RtImputeError):
    """Datasets cannot be pooled (no common predictors or conflicting schemas)."""


class SampleTooLarge(RtImputeError):
    """Requested local sample size >= dataset size."""


class FormatError(RtImputeError):
    """A persisted document is malformed."""


class DimensionMismatch(RtImputeError):
    """Mean vector and covariance matrix sizes disagree."""


class MissingCell(RtImputeError):
    """Reference datasets must be complete; an empty cell was found."""


class ParseError(RtImputeError):
    """A CSV cell or header could not be parsed against the schema."""


class UnknownColumn(RtImputeError):
    """CSV header contains a column absent from the schema."""


# --- imputation ----------------------------------------------------------


class UnknownVariable(RtImputeError):
    """A variable is not known to the population characteristics / schema."""


class SingularGivenBlock(RtImputeError):
    """The observed-block covariance is numerically singular."""


class InvalidImputationCount(RtImputeError):
    """Multiple imputation requires either 1 or at least 1000 draws."""


# --- survival model ------------------------------------------------------


class NonConvergence(RtImputeError):
    """Model fitting failed to converge."""


class MonotoneLikelihood(RtImputeError):
    """Partial likelihood is monotone: a coefficient diverges to infinity."""


class NoEvents(RtImputeError):
    """Survival data contains no events."""


class MissingPredictor(RtImputeError):
    """A model predictor is absent from the supplied completed record."""


class EmptyBaseline(RtImputeError):
    """Model has no baseline hazard steps."""


class PredictorMismatch(RtImputeError):
    """Model predictors do not match the active schema."""


# --- validation metrics --------------------------------------------------


class LengthMismatch(RtImputeError):
    """Paired vectors have unequal lengths."""


class EmptyInput(RtImputeError):
    """An operation received an empty vector."""


class NoComparablePairs(RtImputeError):
    """Concordance is undefined: no comparable pairs exist."""


class AllZeroOutcomes(RtImputeError):
    """No events observed; the requested calibration quantity is undefined."""


class ZeroExpected(RtImputeError):
    """Expected event counts must be strictly positive."""


class DegenerateLP(RtImputeError):
    """Calibration slope is undefined for a zero-variance linear predictor."""


class TooFewSubjects(RtImputeError):
    """Fewer subjects than requested risk groups."""


class EmptyThresholds(RtImputeError):
    """Decision curve requires at least one threshold."""


# --- simulation / service ------------------------------------------------


class InvalidSpec(RtImputeError):
    """Synthetic cohort specification is invalid (e.g. non-PSD correlation)."""


class EmptySubset(RtImputeError):
    """No simulation rows match the requested (method, scenario) subset."""


class SimulationError(RtImputeError):
    """A per-patient failure, annotated with (rowref, scenario, method)."""
