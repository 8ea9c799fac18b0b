//! Readers and writers for every external format: point CSV, a GeoJSON
//! subset, ESRI ASCII grids, partition JSON and result CSV tables.

mod ascii_grid;
mod features;
mod partitions;
mod table;

pub use ascii_grid::{load_raster, parse_raster, raster_to_string, write_raster};
pub use features::{
    load_features, parse_csv_features, parse_geojson_features, save_features_csv, save_features_geojson, AttrValue,
    Feature, FeatureFormat, FeatureSet,
};
pub use partitions::{load_partitions, parse_partitions, partitions_to_string, save_partitions};
pub use table::{format_float, save_table, Cell, ResultRow, ResultTable};
