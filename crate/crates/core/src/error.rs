use thiserror::Error;

/// Errors produced by the geometry, interpolation and experiment layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported dimension {0}; only d = 2 and d = 3 are handled")]
    InvalidDimension(usize),

    #[error("expected {expected} vertices of dimension {dim}, got {got}")]
    WrongVertexCount {
        dim: usize,
        expected: usize,
        got: usize,
    },

    #[error("degenerate simplex: volume {volume:e} below tolerance {tolerance:e}")]
    DegenerateSimplex { volume: f64, tolerance: f64 },

    #[error("no vertex labeling satisfies the canonical ordering conditions ({0})")]
    NoAdmissibleLabeling(String),

    #[error("derivative order {requested} requested but only {available} is available")]
    UnsupportedOrder { requested: usize, available: usize },

    #[error("no quadrature rule of degree {degree} (maximum {max})")]
    UnsupportedDegree { degree: usize, max: usize },

    #[error("face index {index} out of range for a simplex with {faces} faces")]
    BadFaceIndex { index: usize, faces: usize },

    #[error("moment matrix is numerically singular (condition number {condition:e})")]
    UnisolvenceFailure { condition: f64 },

    #[error("shear bound |s22| <= M alpha2 t1 / alpha3 violated: element needs M >= {required:.6e}, allowed M = {allowed}")]
    Assumption1Violated { required: f64, allowed: f64 },

    #[error("wrong element type: {0}")]
    WrongElementType(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("element {element} references node {node} but the mesh has {nodes} nodes")]
    IndexOutOfRange {
        element: usize,
        node: usize,
        nodes: usize,
    },

    #[error("element {element} is degenerate")]
    DegenerateElement { element: usize },

    #[error("bad family specification: {0}")]
    BadSpec(String),

    #[error("unknown field `{0}`")]
    UnknownField(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
