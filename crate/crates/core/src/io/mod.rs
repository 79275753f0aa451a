//! JSON and SVG output, and the on-disk beam cache.

mod cache;
mod json;
mod svg;

pub use cache::{BeamCache, CacheKey, CODE_VERSION};
pub use json::{
    decimal_enclosure, export_beams_json, import_beams_json, report_json, BeamRecord, BeamTable, CenterHitRecord,
    ExactEnds, SplitRecord, FORMAT_VERSION,
};
pub use svg::{render_beams_svg, render_empty_svg, render_trajectory_svg, SvgOptions};
