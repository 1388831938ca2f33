//! Feature files, spec files and result tables.

pub mod ffsb;
pub mod kv;
pub mod results;

pub use ffsb::{read_feature_file, read_header, write_feature_file, FeatureFileHeader};
pub use kv::{parse_gaussian_spec, KvConfig};
pub use results::{read_results_csv, write_results, Cell, Format, ResultsTable};
