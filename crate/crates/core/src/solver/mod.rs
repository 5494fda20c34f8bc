//! Capped simplex projection, the augmented Lagrangian distribution solver, the weight
//! solver, and the outer alternation that ties them together.

mod admm;
mod fit;
mod projection;
mod weights;

pub use admm::{solve_d, update_d_inner, AdmmDiagnostics, AdmmExit, AdmmState, DInnerReport};
pub use fit::{fit, predict_unseen, uniform_over_positives, FitResult, OuterDiagnostics};
pub use projection::{capped_simplex_project, update_b};
pub use weights::{update_w, WDiagnostics};
