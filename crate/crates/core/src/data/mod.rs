//! Field registration, sensor sampling, compression and dataset assembly.

mod array;
mod codec;
mod lagged;
mod manager;
mod sensors;

pub use array::FieldArray;
pub use codec::{Compression, Compressor, FieldCodec};
pub use lagged::{build_lagged_sequences, Sequences};
pub use manager::{
    DataManager, FieldMeta, ManagerConfig, PreparedDatasets, Preprocessing, SequenceDataset, Split,
    SplitPlan,
};
pub use sensors::{
    circular_trajectory, extract_measurements, random_locations, validate_location, SensorLocation,
    SensorSource, SensorSpec,
};
