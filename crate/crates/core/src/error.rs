use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}: {message}")]
    Format { file: PathBuf, message: String },

    #[error(
        "{file} at byte offset {offset}: label {label} out of range (num_classes = {num_classes})"
    )]
    LabelOutOfRange {
        file: PathBuf,
        offset: u64,
        label: u64,
        num_classes: usize,
    },

    #[error("{file} at byte offset {offset}: non-finite value {value}")]
    NonFinite {
        file: PathBuf,
        offset: u64,
        value: f32,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("label {label} out of range (num_classes = {num_classes})")]
    Label { label: usize, num_classes: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dataset '{dataset}' violates the benchmark contract: {message}")]
    Contract { dataset: String, message: String },

    #[error("class {class} has no samples")]
    EmptyClass { class: usize },

    #[error("module is frozen (task {task_id})")]
    Frozen { task_id: usize },

    #[error("task {task}: {source}")]
    Task {
        task: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn in_task(self, task: usize) -> Self {
        Error::Task {
            task,
            source: Box::new(self),
        }
    }
}
