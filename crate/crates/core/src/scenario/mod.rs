//! Configuration, forcing, output and run drivers.

pub mod config;
pub mod forcing;
pub mod output;
pub mod run;

pub use config::{MeshSpec, OutputSpec, RunConfig};
pub use forcing::{forcing_offset_circles, ForcingSpec, Manufactured, OffsetCircles};
pub use output::{read_stats_csv, write_field_vtk, StatsTable, StatsWriter};
pub use run::{compare, mms_study, run, verify, CompareOutcome, MmsConfig, MmsReport, RunOutcome, VerifyReport};
