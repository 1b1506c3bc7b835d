//! Random-start campaigns.
//!
//! Run `i` of a campaign with seed `s` draws its start from ChaCha8 seeded
//! with `s` on stream `i`, so individual runs do not depend on the number of
//! starts or on the thread count. Results are returned in run order.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use robustmo_core::problem::Bounds;
use robustmo_core::{solve, Error, Result, SolveConfig, TerminalStatus, UncertainProblem};
use serde::{Deserialize, Serialize};

use crate::stats::StatsTuple;

pub const THREADS_ENV: &str = "ROBUSTMO_THREADS";

/// Start point of run `run`.
pub fn start_point(bounds: &Bounds, seed: u64, run: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    bounds.sample(&mut rng)
}

/// Worker cap from `ROBUSTMO_THREADS`; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(Error::Argument(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub x0: Vec<f64>,
    pub status: TerminalStatus,
    pub iterations: usize,
    pub x: Vec<f64>,
    /// `Υ(F_U(x))` at the last iterate.
    pub merit: f64,
    /// `φ(x)` at the last iterate.
    pub phi: f64,
    pub p_norm: f64,
    pub time: f64,
    pub error: Option<String>,
}

fn run_one(prob: &UncertainProblem, config: &SolveConfig, run: usize, x0: Vec<f64>) -> RunRecord {
    match solve(prob, &x0, config) {
        Ok(trace) => {
            let last = trace.last();
            RunRecord {
                run,
                status: trace.status,
                iterations: trace.iterations(),
                x: trace.final_x().to_vec(),
                merit: last.map_or(f64::NAN, |r| r.merit),
                phi: last.map_or(f64::NAN, |r| r.phi),
                p_norm: last.map_or(f64::NAN, |r| r.p_norm),
                time: trace.elapsed,
                error: trace.error.clone(),
                x0,
            }
        }
        Err(e) => RunRecord {
            run,
            status: TerminalStatus::Error,
            iterations: 0,
            x: x0.clone(),
            merit: f64::NAN,
            phi: f64::NAN,
            p_norm: f64::NAN,
            time: 0.0,
            error: Some(e.to_string()),
            x0,
        },
    }
}

/// Solves from every start in parallel; the result is ordered by run index.
pub fn run_campaign(
    prob: &UncertainProblem,
    config: &SolveConfig,
    starts: &[Vec<f64>],
    threads: Option<usize>,
) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Argument(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(|| {
        starts
            .par_iter()
            .enumerate()
            .map(|(run, x0)| run_one(prob, config, run, x0.clone()))
            .collect()
    }))
}

/// Convenience wrapper: `count` starts sampled from the problem's box.
pub fn run_random_campaign(
    prob: &UncertainProblem,
    config: &SolveConfig,
    count: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<RunRecord>> {
    if count == 0 {
        return Err(Error::Argument("a campaign needs at least one start".into()));
    }
    let bounds = prob
        .bounds()
        .ok_or_else(|| Error::Argument(format!("problem `{}` has no sampling box", prob.name())))?;
    let starts: Vec<Vec<f64>> = (0..count).map(|i| start_point(bounds, seed, i)).collect();
    run_campaign(prob, config, &starts, threads)
}

/// Contents of `stats.json`: everything deterministic about a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignStats {
    pub problem: String,
    pub starts: usize,
    pub seed: u64,
    pub config: SolveConfig,
    pub status_counts: BTreeMap<String, usize>,
    /// Runs that ended in `Error`; excluded from `iterations`.
    pub errors: usize,
    pub iterations: Option<StatsTuple>,
}

/// Contents of `timing.json`; wall times are machine-dependent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignTiming {
    pub time: Option<StatsTuple>,
    pub total: f64,
}

pub fn summarize(prob: &str, seed: u64, config: &SolveConfig, runs: &[RunRecord]) -> (CampaignStats, CampaignTiming) {
    let mut status_counts = BTreeMap::new();
    for r in runs {
        *status_counts.entry(r.status.to_string()).or_insert(0) += 1;
    }
    let ok: Vec<&RunRecord> = runs.iter().filter(|r| r.status != TerminalStatus::Error).collect();
    let iterations: Vec<usize> = ok.iter().map(|r| r.iterations).collect();
    let times: Vec<f64> = ok.iter().map(|r| r.time).collect();
    (
        CampaignStats {
            problem: prob.to_string(),
            starts: runs.len(),
            seed,
            config: config.clone(),
            status_counts,
            errors: runs.len() - ok.len(),
            iterations: StatsTuple::of_counts(&iterations),
        },
        CampaignTiming {
            time: StatsTuple::of_times(&times),
            total: runs.iter().map(|r| r.time).sum(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_independent_of_count() {
        let b = Bounds::uniform(2, -1.0, 1.0);
        let a: Vec<_> = (0..5).map(|i| start_point(&b, 9, i)).collect();
        assert_eq!(start_point(&b, 9, 3), a[3]);
        assert_ne!(a[0], a[1]);
        assert!(a.iter().all(|x| b.contains(x)));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let prob = robustmo_core::registry::get("EX2").unwrap();
        let cfg = SolveConfig::default();
        let one = run_random_campaign(&prob, &cfg, 6, 3, Some(1)).unwrap();
        let four = run_random_campaign(&prob, &cfg, 6, 3, Some(4)).unwrap();
        let strip = |v: Vec<RunRecord>| v.into_iter().map(|r| RunRecord { time: 0.0, ..r }).collect::<Vec<_>>();
        assert_eq!(strip(one), strip(four));
    }
}
