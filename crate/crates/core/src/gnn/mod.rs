//! Dense GCN with negative-sample message passing, trained by Adam.

mod adam;
mod aggregate;
mod checkpoint;
mod layer;
mod model;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use aggregate::{
    aggregate_max, aggregate_mean, run_expressivity_cases, Aggregator, CaseCheck, ExpressivityReport, Relation,
    Structure, MU_GRID,
};
pub use checkpoint::Checkpoint;
pub use layer::{gcn_layer_forward, neg_gcn_layer_forward, negative_sum, norm_coeff, propagate, LayerNegatives};
pub use model::{backward, cross_entropy, forward, forward_with, predictions, ForwardCache, ModelParams};
pub use train::{init_params, 
    prepare_candidates, sample_once, train, train_plain_gcn, EpochRecord, Evaluation, SampleRecord, TrainConfig,
    TrainOutcome,
};
