use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Variants split into two families: input/shape validation problems and
/// mathematical infeasibility (a witness, representation or price that does
/// not exist for the given data). [`Error::is_infeasibility`] tells them apart.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("filtration is empty: at least times 0 and 1 are required")]
    EmptyFiltration,
    #[error("partition at time 0 must be the single cell holding every outcome")]
    RootNotTrivial,
    #[error("empty cell in partition at time {time}")]
    EmptyCell { time: usize },
    #[error("partition at time {time} is not a partition of the outcomes: {detail}")]
    NotPartition { time: usize, detail: String },
    #[error("partition at time {time} does not refine time {}: cell {cell:?} straddles several parent cells", time - 1)]
    NotRefining { time: usize, cell: Vec<usize> },
    #[error("{what} index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("shape mismatch for {what}: expected {expected}, found {found}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
    #[error("process is not adapted: not constant on cell {cell} at time {time}")]
    NotAdapted { time: usize, cell: usize },
    #[error("process is not predictable: not constant on parent cell {cell} at time {time}")]
    NotPredictable { time: usize, cell: usize },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("measure set is empty: {0}")]
    EmptyMeasureSet(String),
    #[error("martingale polytope has {count} vertices, above the enumeration cap {cap}")]
    PolytopeTooLarge { count: usize, cap: usize },
    #[error("linear program is unbounded")]
    UnboundedObjective,
    #[error("claim is not a unit claim (nonnegative with expectation 1 under every measure)")]
    NotUnitClaim,
    #[error("conditional expectation of the unit claim depends on the measure at time {time}, cell {cell}")]
    MeasureDependent { time: usize, cell: usize },
    #[error("term {term} has a weight process that increases at time {time}")]
    NotNonincreasing { term: usize, time: usize },
    #[error("process is not a super-martingale: violation at time {time}, cell {cell}")]
    NotSupermartingale { time: usize, cell: usize },
    #[error("no local-regular witness exists at time {time}, cell {cell}")]
    Infeasible { time: usize, cell: usize },
    #[error("ratio bound fails at time {time}, atom {atom}: the measure set is not complete for this unit claim")]
    IncompletenessDetected { time: usize, atom: usize },
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("initial value of the process is zero")]
    ZeroInitialValue,
    #[error("pricing problem is infeasible: {0}")]
    InfeasiblePricing(String),
    #[error("martingale increment at time {time}, cell {cell} is not spanned by asset increments (residual {residual:.3e})")]
    NoRepresentation {
        time: usize,
        cell: usize,
        residual: f64,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for errors that report a mathematical non-existence result rather
    /// than malformed input.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            Error::UnboundedObjective
                | Error::MeasureDependent { .. }
                | Error::NotSupermartingale { .. }
                | Error::Infeasible { .. }
                | Error::IncompletenessDetected { .. }
                | Error::InfeasiblePricing(_)
                | Error::NoRepresentation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
