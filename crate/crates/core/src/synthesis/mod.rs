//! Mixed-sensitivity H∞ controller synthesis.

pub mod hinf;
pub mod plant;
pub mod weights;

pub use hinf::{
    close_loop, synthesize, verify, ControlMode, ControllerRealization, HinfSolution, Verification,
};
pub use plant::{
    build_generalized_plant, build_scaled_generalized_plant, GeneralizedPlant, InputScaling,
    PlantBlocks, Regularization,
};
pub use weights::{make_current_weight, make_tracking_weight, TransferWeight, WeightKind};
