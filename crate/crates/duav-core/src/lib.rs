//! Seeded Monte Carlo simulator for physical-layer secrecy rates in
//! D2D-enabled UAV networks under two spectrum sharing strategies.
//!
//! The pipeline per drop: Poisson point process placement, RSS-based mode
//! selection, overlay/underlay pattern assignment, orthogonal bandwidth
//! partition, decode-threshold idle detection, friendly-jammer selection
//! (new strategy), and clamped secrecy rates for the tagged overlay D2D
//! pair and cellular UE.

pub mod channel;
pub mod config;
pub mod deployment;
pub mod engine;
pub mod rng;
pub mod secrecy;
pub mod spectrum;

pub use channel::{ChannelRealization, Fading, LinkClass};
pub use config::{
    expand_sweep, load_config, parse_config, BetaInterpretation, ConfigError, Scenario, SimConfig,
    Strategy, SweepSpec,
};
pub use deployment::{
    distance3, place_nodes, sample_ppp, Deployment, Node, NodeId, Role, SpatialIndex,
};
pub use engine::{
    aggregate, emit_csv, paired_comparison, run_drop, run_drop_detailed, run_drops,
    run_monte_carlo, run_sweep, DropResult, EngineError, LinkKind, SecrecyStats, SweepResult,
    SweepRow, CSV_HEADER,
};
pub use secrecy::{secrecy_rate, tagged_link_secrecy, LinkBudget, TaggedSecrecy};
pub use spectrum::{
    build_plan, DegenerateDrop, JammerAssignment, Mode, Pattern, SpectrumPlan, Subchannel,
    SubchannelClass,
};
