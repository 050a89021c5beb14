use thiserror::Error;

/// Errors raised while loading inputs, building, querying or maintaining an index.
///
/// Vertex ids carried by variants are 0-based; `Display` renders them 1-based
/// to match the external formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: vertex id {id} out of range 1..={n}")]
    VertexOutOfRange { line: usize, id: u64, n: usize },

    #[error("line {line}: edge weight must be a positive 32-bit integer, got {weight}")]
    InvalidWeight { line: usize, weight: String },

    #[error("graph must contain at least one vertex")]
    EmptyGraph,

    #[error("graph is disconnected: vertex {} cannot reach vertex {}", .a + 1, .b + 1)]
    Disconnected { a: u32, b: u32 },

    #[error("grid must have at least one row and one column")]
    EmptyGrid,

    #[error("weight range [{min}, {max}] is empty or contains zero")]
    InvalidWeightRange { min: u32, max: u32 },

    #[error("{requested} extra edges requested but only {available} non-tree pairs exist")]
    TooManyEdges { requested: usize, available: usize },

    #[error("object density must lie in (0, 1], got {0}")]
    InvalidDensity(f64),

    #[error("object set is empty")]
    EmptyObjectSet,

    #[error("unknown vertex {}", .0 + 1)]
    UnknownVertex(u32),

    #[error("k must be at least 1 and at most {max}, got {k}")]
    InvalidK { k: usize, max: usize },

    #[error("query asks for {requested} neighbours but the index was built with k = {built}; rebuild with a larger k")]
    KTooLarge { requested: usize, built: usize },

    #[error("vertex {} is already a candidate object", .0 + 1)]
    AlreadyObject(u32),

    #[error("vertex {} is not a candidate object", .0 + 1)]
    NotObject(u32),

    #[error("cannot delete the last remaining candidate object")]
    LastObject,

    #[error("not a bundle file (bad magic)")]
    BadMagic,

    #[error("bundle format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("checksum mismatch in section {section}")]
    Checksum { section: String },

    #[error("bundle file is truncated")]
    Truncated,

    #[error("bundle was built for a different graph (fingerprint {found:016x}, expected {expected:016x})")]
    FingerprintMismatch { expected: u64, found: u64 },

    #[error("malformed bundle: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
