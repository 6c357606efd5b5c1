//! Evaluation and agreement statistics.

mod agreement;
mod classification;
mod segmentation;
mod ttest;

pub use agreement::{
    cohens_kappa, krippendorff_alpha_boundaries, krippendorff_alpha_nominal, per_class_kappa,
};
pub use classification::{accuracy_macro_f1, ClassScore, MetricsReport};
pub use segmentation::{joint_accuracy, segmentation_accuracy, SpanMatches};
pub use ttest::{ln_gamma, paired_t_test, regularized_incomplete_beta, student_t_cdf, TTest};
