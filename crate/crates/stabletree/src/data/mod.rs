//! CSV ingestion, preprocessing, fold assignment and the dataset registry.

pub mod folds;
pub mod preprocess;
pub mod registry;
pub mod table;

pub use folds::{half, k_folds, permutation, sample, split_folds};
pub use preprocess::{align_columns, encode_features, preprocess, select_columns, Encoding, Features, Preprocessing};
pub use registry::{Entry, Registry, DATA_DIR_ENV};
pub use table::{load_csv, Column, ColumnData, RawTable, SchemaHints};
