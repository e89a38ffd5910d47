//! Datasets, normalization and neighboring-dataset enumeration.

mod csv_io;
mod dataset;
mod neighbors;
mod synth;

pub use csv_io::{load_csv, write_csv, CsvSchema, LabelCoding};
pub use dataset::{holdout_split, normalize_to_sqrt_d, Dataset, NormalizeMode};
pub use neighbors::{enumerate_neighbors, Neighbor, NeighborNotion, NeighborSet, DEFAULT_REPLACE_CAP};
pub use synth::{synth_sphere, LabelRule};
