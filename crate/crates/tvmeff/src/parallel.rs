//! Worker pool for bootstrap replications. Each replication owns its RNG
//! stream and result slot, so output does not depend on the worker count.

use rayon::prelude::*;
use tvmeff_core::bootstrap::{BandResult, BootstrapPlan};

use crate::config::Choice;
use crate::error::{CliError, CliResult};

pub fn worker_count(workers: Choice) -> usize {
    match workers {
        Choice::Fixed(n) => n.max(1),
        Choice::Auto => std::thread::available_parallelism().map_or(1, |n| n.get()),
    }
}

pub fn run_plan(plan: &BootstrapPlan, workers: usize) -> CliResult<Vec<BandResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    let draws: Vec<_> = pool.install(|| (0..plan.replications()).into_par_iter().map(|b| plan.replicate(b)).collect());
    plan.finish(draws).map_err(CliError::core("bootstrap"))
}
