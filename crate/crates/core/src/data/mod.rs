//! Record files, dataset balancing and splitting, and model checkpoints.

mod checkpoint;
mod dataset;
mod records;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use dataset::{balance, split, Dataset, SplitMode};
pub use records::{load_records, parse_records, records_to_string, save_records};
