//! Association and airtime control for virtualized multi-cell 802.11 WLANs.
//!
//! * [`analytics`]: closed-form EDCA chain, BSS fixed point, throughput and airtime.
//! * [`sim`]: slot-level EDCA simulator.
//! * [`gp`]: monomials, posynomials, condensation and a log-barrier GP solver.
//! * [`assoc`]: successive-GP association and airtime optimizer.
//! * [`control`]: EDCA parameters that realize a target transmission probability.
//! * [`scenario`]: topologies, channels, rate tables, Max-SNR baseline, Jain index.

pub mod analytics;
pub mod assoc;
pub mod control;
pub mod error;
pub mod gp;
pub mod params;
pub mod scenario;
pub mod sim;
pub mod timing;

pub use error::{Error, Result};
pub use params::{ControlDefaults, EdcaParams};
pub use timing::{derive_timing, RawTiming, TimingConstants};
