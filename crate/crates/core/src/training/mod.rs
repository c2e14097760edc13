//! Loss, preprocessing, augmentation and the SGD training loop.

pub mod augment;
pub mod loss;
pub mod normalize;
pub mod sgd;
pub mod trainer;

pub use augment::{augment, Dihedral};
pub use loss::{compute_beta, weighted_bce, LossConfig, WeightPlacement};
pub use normalize::{normalize_min_max, normalize_to_mask};
pub use sgd::Sgd;
pub use trainer::{dataset_beta, fit, split_cases, train, validation_dice, TrainConfig, TrainHistory, TrainingCase};
