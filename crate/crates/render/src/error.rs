use thiserror::Error;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("seeding failed: no path with nonzero contribution among {0} samples")]
    Seeding(usize),
    #[error("invalid parameter: {0}")]
    Invalid(String),
}
