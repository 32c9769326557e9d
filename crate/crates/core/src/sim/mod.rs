//! Physics-based generator of wet-leaf transmission traces.
//!
//! Units: THz, ps, mm, mg, g/m^3. A pulse passes humid air, a droplet
//! pattern and a plastic–leaf–plastic sandwich; the droplet pattern enters
//! as an area-weighted incoherent mixture of per-thickness transfer
//! functions computed with the transfer-matrix method.

pub mod config;
pub mod dielectric;
pub mod generator;
pub mod pattern;
pub mod propagate;
pub mod pulse;
pub mod stats;
pub mod tmm;
pub mod vapor;

pub use config::{LeafConfig, PlasticConfig, SimConfig};
pub use dielectric::{permittivity, DielectricModel, DoubleDebye, C_MM_PER_PS};
pub use generator::{generate_dataset, trace_from_pattern, NoiseParams, Scene, ThicknessTable};
pub use pattern::{sample_pattern_step, Droplet, DropletParams, DropletPattern};
pub use propagate::{propagate, Propagator};
pub use pulse::{synth_reference_pulse, PulseParams};
pub use stats::{std_trace, xi_statistic};
pub use tmm::{single_slab_airy, stack_transmission, Layer, LayerStack, Roughness};
pub use vapor::{default_lines, vapor_transmission, VaporLine};
