use thiserror::Error;

/// Failures raised while reading, validating or generating a mesh.
#[derive(Debug, Error)]
pub enum MeshError {
    #[error("i/o error on mesh file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed mesh json: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("cell {cell} references vertex {index}, but only {count} vertices exist")]
    VertexOutOfRange { cell: usize, index: usize, count: usize },
    #[error("cell {cell} does not describe a closed loop (fewer than 3 distinct vertices)")]
    NotClosed { cell: usize },
    #[error("cell {cell} repeats vertex {vertex}")]
    DuplicateVertex { cell: usize, vertex: usize },
    #[error("cell {cell} is not counter-clockwise (signed area {area:e})")]
    Clockwise { cell: usize, area: f64 },
    #[error("edge ({a}, {b}) is shared by more than two cells")]
    EdgeOverShared { a: usize, b: usize },
    #[error("edge ({a}, {b}) is traversed in the same direction by two cells")]
    OverlappingCells { a: usize, b: usize },
    #[error("unknown mesh family `{0}`")]
    UnknownFamily(String),
    #[error("mesh parameter n must be at least 1")]
    BadResolution,
}

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("cell {cell}: inner point produces an inverted fan triangle at edge {edge}")]
    InvertedFan { cell: usize, edge: usize },
    #[error("cell {cell}: singular local system in {what}")]
    SingularLocal { cell: usize, what: &'static str },
    #[error("edge {edge}: singular local system in {what}")]
    SingularEdge { edge: usize, what: &'static str },
    #[error("dense rank requested for {dofs} dofs, above the limit of {limit}")]
    TooLarge { dofs: usize, limit: usize },
    #[error("gram matrix is not positive definite ({0})")]
    NotPositiveDefinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
