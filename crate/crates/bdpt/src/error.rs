use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("cannot read scene {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("scene parse error: {0}")]
    Parse(String),
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error("scene has no emitter")]
    NoEmitter,
}
