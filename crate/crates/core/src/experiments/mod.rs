//! Experiment drivers: configurations, seeded field families, sweeps over
//! them, and the tables they produce.

pub mod axioms;
mod config;
pub mod families;
mod fields;
mod sweeps;
mod table;

pub use config::{config_digest, ExperimentConfig, FieldSpec, ManifoldName};
pub use fields::{bracket_table, qn_table, qstate_table, scheme_table};
pub use sweeps::{
    dn_lower, dn_sweep, dn_upper, expansion_table, extremal_demo, flow_order_table, inequality_sweep, khl_sweep,
    l1_sweep, remainder_table, scaling_sweep, slope_tolerance, Assertion, DemoReport, Outcome,
};
pub use table::{Cell, Metadata, ResultTable};
