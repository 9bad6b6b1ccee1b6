use std::io;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("input error: {0}")]
    Input(String),
    #[error("split error: {0}")]
    Split(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("scale error: {0}")]
    Scale(String),
    #[error("metric error: {0}")]
    Metric(String),
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("training error: {0}")]
    Training(String),
    #[error("training diverged at epoch {epoch}; last finite loss {last_loss}")]
    Diverged {
        epoch: usize,
        last_loss: f64,
        model: Box<crate::scorer::ScoreModel>,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
