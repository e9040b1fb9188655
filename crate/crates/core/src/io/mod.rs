//! Configuration loading, empirical-data ingestion and result
//! serialization.

mod config;
mod empirical;
mod format;
mod output;

pub use config::{
    default_emitter, load_config, parse_config, AnalysisConfig, Config, DiameterConfig,
    EmissionConfig, SpeedConfig,
};
pub use empirical::{load_empirical_csv, parse_empirical_csv, Unit};
pub use format::format_sig;
pub use output::{
    read_absorptions, read_depositions, write_outputs, AbsorptionRow, DepositionRow, OutputBundle,
    Summary, ABSORPTION_FILE, DEPOSITION_FILE, HEATMAP_FILE, LEDGER_FILE, SUMMARY_FILE,
    SYMBOL_FILE,
};
