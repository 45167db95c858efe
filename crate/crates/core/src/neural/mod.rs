//! Dense networks, Adam and target-network blending.

mod adam;
pub mod checkpoint;
mod gradcheck;
mod mlp;

pub use adam::{soft_update, AdamConfig, AdamState};
pub use gradcheck::{gradient_check, relative_error, GradCheck};
pub use mlp::{Activation, ForwardCache, LayerShape, Mlp, MlpSpec};

/// Hidden widths used by every actor and critic unless overridden.
pub const DEFAULT_HIDDEN: [usize; 3] = [128, 64, 64];
