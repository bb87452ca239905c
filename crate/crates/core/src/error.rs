use thiserror::Error;

/// Errors produced anywhere in the discretization pipeline.
#[derive(Debug, Error)]
pub enum VemError {
    #[error("topology error: {0}")]
    Topology(String),

    #[error("cell {cell} is degenerate (area {area:e})")]
    DegenerateCell { cell: usize, area: f64 },

    #[error("mesh generation failed: {0}")]
    Generation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature error: {0}")]
    Quadrature(String),

    #[error("degenerate element: {0}")]
    DegenerateElement(String),

    #[error("diagnostic not defined: {0}")]
    Domain(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("unknown edge index {0}")]
    UnknownEdge(usize),

    #[error("mesh size overflow: {0}")]
    SizeOverflow(String),

    #[error("tables do not describe the same levels: {0}")]
    MismatchedLevels(String),

    #[error("element {cell}: {source}")]
    Element {
        cell: usize,
        #[source]
        source: Box<VemError>,
    },

    #[error("level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<VemError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl VemError {
    pub(crate) fn at_cell(self, cell: usize) -> Self {
        match self {
            e @ VemError::Element { .. } => e,
            e => VemError::Element {
                cell,
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn at_level(self, level: usize) -> Self {
        VemError::Level {
            level,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = VemError> = std::result::Result<T, E>;
