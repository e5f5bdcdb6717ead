use thiserror::Error;

use crate::diffspace::PointId;
use crate::expr::ExprError;
use crate::groupoid::Arrow;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expression error: {0}")]
    Expr(#[from] ExprError),
    #[error("generator `{generator}` failed at point {point}: {source}")]
    Evaluation {
        generator: String,
        point: PointId,
        source: ExprError,
    },

    #[error("space has no points")]
    EmptySpace,
    #[error("duplicate point id {0}")]
    DuplicateId(PointId),
    #[error("point {id} has {found} coordinates, expected {expected}")]
    CoordsLength {
        id: PointId,
        expected: usize,
        found: usize,
    },
    #[error("point {id} has non-positive weight {weight}")]
    NonPositiveWeight { id: PointId, weight: f64 },
    #[error("generator list is empty but the space is not declared constants-only")]
    MissingGenerators,
    #[error("a constants-only space cannot carry user generators")]
    ConstantsOnlyWithGenerators,
    #[error("quantization step must be positive and finite, got {0}")]
    InvalidEps(f64),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("partition does not match the space: {0}")]
    PartitionMismatch(String),
    #[error("unknown point id {0}")]
    UnknownPoint(PointId),

    #[error("arrows {first} and {second} are not composable")]
    NonComposable { first: Arrow, second: Arrow },
    #[error("{0} is not an arrow of the groupoid")]
    NotAnArrow(Arrow),
    #[error("elements live on different groupoids")]
    GroupoidMismatch,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("missing jets: {0}")]
    MissingJets(String),
    #[error("missing gradient data: {0}")]
    MissingGradient(String),

    #[error("density at point {point} is not Hermitian (deviation {deviation:e})")]
    NonHermitian { point: PointId, deviation: f64 },
    #[error("density at point {point} has negative eigenvalue {eigenvalue:e}")]
    NegativeEigenvalue { point: PointId, eigenvalue: f64 },
    #[error("density is not normalized: total trace {total}")]
    Normalization { total: f64 },
    #[error("fiber at point {point} has dimension {found}, expected {expected}")]
    FiberDimension {
        point: PointId,
        expected: usize,
        found: usize,
    },
    #[error("direct-sum dimension {dim} exceeds the commutant guard {max}")]
    CommutantGuard { dim: usize, max: usize },

    #[error("level {level} out of range (chain has {levels} levels)")]
    LevelOutOfRange { level: usize, levels: usize },

    #[error("malformed element file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
