//! Cost-optimal-within-a-factor planning when action costs are only known
//! through interval estimators of increasing precision and latency.

pub mod bench;
pub mod estimation;
pub mod fixtures;
pub mod heuristics;
pub mod ingest;
pub mod oracle;
pub mod planner;
pub mod post_search;
pub mod search;
pub mod task;
