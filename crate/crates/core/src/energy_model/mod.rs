//! Linear decoding-energy model.
//!
//! The decoder is described by a set of *specific energies* (joules per
//! execution of some decoder-side function) and a bitstream by its *feature
//! counts* (how often each function runs). The estimate is the offset plus
//! the dot product of the two, with the transform-skip term entering with a
//! negative sign.

mod counts;
mod estimate;
mod fit;
mod profile;
mod table;

pub use counts::FeatureCounts;
pub use estimate::{estimate_block_energy, estimate_decoding_energy};
pub use fit::{all_params_except, design_row, fit_profile, EnergyProfileFit, FitOptions, FitSample};
pub use profile::{ParamId, SpecificEnergyProfile, PARAM_COUNT};
pub use table::{BlockSize, Component, ModeClass, RowKey, SizeTable};
