//! File formats, exports and the command-line driver for
//! [`kaleidocycle_core`].
//!
//! - [`document`]: JSON state files with a schema version.
//! - [`export`]: trace CSV, OBJ tetrahedra and SVG nets.
//! - [`config`]: profiles and `key = value` config files.
//! - [`cli`]: the `kaleidocycle` binary.
//!
//! All writes go through a temporary file and a rename.

pub mod atomic;
pub mod cli;
pub mod config;
pub mod document;
pub mod error;
pub mod export;
pub mod provenance;

pub use document::{load_state, read_state, save_state, LoadReport, StateDocument, SCHEMA_VERSION};
pub use error::IoError;
pub use export::{export_mesh, export_net_svg, export_trace_csv, mesh_obj, net_svg, trace_csv, SvgOptions};
pub use provenance::Provenance;
