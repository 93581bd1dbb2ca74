//! File formats, the end-to-end run and heatmap rendering.

pub mod heatmap;
pub mod io;
mod panel;
pub mod run;

pub use heatmap::render_heatmap;
pub use io::{load_panel, write_panel, InputFormat};
pub use panel::{PanelHeader, TimeSeriesPanel};
pub use run::{analyze_panel, run_pipeline, Analysis, Edge, RunConfig, RunManifest};
