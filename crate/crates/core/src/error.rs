use thiserror::Error;

/// Errors raised by grid, stencil, mapping and evaluation routines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("rank {rank} out of range for grid of {size} processes")]
    RankOutOfRange { rank: usize, size: usize },

    #[error("coordinate component {index} = {value} out of range (extent {extent})")]
    CoordOutOfRange {
        index: usize,
        value: usize,
        extent: usize,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("empty stencil: {0}")]
    EmptyStencil(String),

    #[error("offset {index} is the zero vector")]
    ZeroOffset { index: usize },

    #[error("offset {index} duplicates offset {first}")]
    DuplicateOffset { index: usize, first: usize },

    #[error("offset {index} has length {got}, expected {expected}")]
    OffsetLength {
        index: usize,
        got: usize,
        expected: usize,
    },

    #[error("flattened stencil has {got} entries, expected k*ndims = {expected}")]
    FlatLength { got: usize, expected: usize },

    #[error("stencil has {stencil} dimensions but grid has {grid}")]
    DimensionMismatch { stencil: usize, grid: usize },

    #[error("unknown stencil '{0}' (expected nn, component or nn-hops)")]
    UnknownStencil(String),

    #[error("invalid stencil: {0}")]
    InvalidStencil(String),

    #[error("unknown algorithm '{0}'")]
    UnknownAlgorithm(String),

    #[error("invalid node configuration: {0}")]
    InvalidNodes(String),

    #[error("{p} processes are not a multiple of {n} processes per node")]
    NotDivisible { p: usize, n: usize },

    #[error("no dimension admits a split into multiples of {n} (dims {dims:?})")]
    NoSplit { dims: Vec<usize>, n: usize },

    #[error("cannot decompose grid {dims:?} into node boxes of {n}: prime factor {factor} divides no remaining extent")]
    DecompositionInfeasible {
        dims: Vec<usize>,
        n: usize,
        factor: usize,
    },

    #[error("mapping is not a bijection: {0}")]
    NotBijective(String),

    #[error("cost reports belong to different instances")]
    InstanceMismatch,

    #[error("invalid 3-way partition instance: {0}")]
    InvalidPartitionInstance(String),

    #[error("instance has {p} processes, above the exact solver limit of {limit} (raise the limit to at least {p})")]
    OracleLimit { p: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
