//! Run-time reuse predictors: the L-RPT loaded from LERN models, and a
//! SHiP-style signature table.

mod hash;
mod lrpt;
mod ship;

pub use hash::{splitmix32, HashScheme};
pub use lrpt::{Lrpt, LrptConfig, Prediction, ENTRY_BITS};
pub use ship::{ShipEvent, ShipPrediction, ShipTable, SHIP_ENTRIES, SHIP_INIT, SHIP_MAX};
