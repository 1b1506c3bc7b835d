//! Command-line front end: single solves, random-start campaigns,
//! grid verification and the problem catalog.

pub mod app;
pub mod campaign;
pub mod output;
pub mod stats;

pub use app::{run, Cli};
pub use campaign::{run_campaign, run_random_campaign, summarize, CampaignStats, RunRecord};
pub use stats::StatsTuple;
