//! Scenario-driven verification runs over `rca-core`.
//!
//! A scenario file fixes the probability space, the conditioning algebra and
//! the objects under test; a command selects which module checks run on it.
//! Exit codes: 0 all checks pass, 1 some check fails (with witnesses in the
//! report), 2 bad input, 3 budget or convergence failure.

pub mod error;
pub mod output;
pub mod run;
pub mod scenario;

pub use error::CliError;
pub use output::Format;
pub use run::{run, Command, Flags, Outcome};
pub use scenario::{load_scenario, parse_scenario, Scenario};
