//! Bidirectional path sampling on scenes of planar primitives.
//!
//! Every technique `(s,t)` maps `3 (s + t)` primary coordinates to a path
//! `x_0 .. x_k` with `k = s + t - 1`. Chart slot `i` always produces vertex
//! `x_i`, whether it belongs to the light or the eye subpath, which lets a
//! technique change re-invert only the vertices that switch sides.

pub mod chart;
pub mod error;
pub mod measure;
pub mod path;
pub mod reference;
pub mod sampling;
pub mod scene;

pub use chart::{chart_coordinates, family_atlas, inverse_density, invert_path, invert_slot, relabel, slot_r, TechniqueChart};
pub use error::SceneError;
pub use measure::{
    connect, evaluate, evaluation_count, forward, join_prefixes, measurement_contribution, mis_weight, target_eval, technique_pdf,
    technique_pdfs, Evaluation,
};
pub use path::{Path, Subpath, Technique, Vertex, CAMERA};
pub use reference::{bdpt_image, MAX_K};
pub use sampling::{sample_eye_subpath, sample_light_subpath, sample_subpath, Side};
pub use scene::{Camera, CameraDesc, Scene, DESK_SCENE};
