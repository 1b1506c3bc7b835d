//! Files written by `solve` and `bench`.
//!
//! | file          | producer | content |
//! |---------------|----------|---------|
//! | `trace.json`  | solve    | the full [`SolveTrace`], wall times omitted |
//! | `trace.csv`   | solve    | one row per iterate: `k, x_*, p_norm, phi, tau, merit, omega, partition_size, dual_gap` |
//! | `image.csv`   | solve    | one row per iterate and scenario: `k, scenario, role, maximal, f_*`; role is `black` (start), `blue` (intermediate) or `red` (final) |
//! | `timing.json` | both     | wall times |
//! | `runs.csv`    | bench    | one row per run: `run, status, iterations, merit, phi, p_norm, time, x0_*, x_*, error` |
//! | `stats.json`  | bench    | [`CampaignStats`]; contains no wall times so identical campaigns give identical bytes |

use std::fs;
use std::io;
use std::path::Path;

use robustmo_core::SolveTrace;
use serde::Serialize;

use crate::campaign::{CampaignStats, CampaignTiming, RunRecord};

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

fn num(v: f64) -> String {
    v.to_string()
}

fn indexed(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (1..=count).map(move |i| format!("{prefix}_{i}"))
}

#[derive(Serialize)]
struct TraceTiming {
    total: f64,
    per_iterate: Vec<f64>,
}

pub fn write_trace_files(dir: &Path, trace: &SolveTrace) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join("trace.json"), trace)?;
    write_json(
        &dir.join("timing.json"),
        &TraceTiming { total: trace.elapsed, per_iterate: trace.records.iter().map(|r| r.elapsed).collect() },
    )?;

    let n = trace.x0.len();
    let mut w = csv::Writer::from_path(dir.join("trace.csv")).map_err(csv_err)?;
    let mut header = vec!["k".to_string()];
    header.extend(indexed("x", n));
    header.extend(
        ["p_norm", "phi", "tau", "merit", "omega", "partition_size", "dual_gap"].map(String::from),
    );
    w.write_record(&header).map_err(csv_err)?;
    for r in &trace.records {
        let mut row = vec![r.k.to_string()];
        row.extend(r.x.iter().copied().map(num));
        row.extend([
            num(r.p_norm),
            num(r.phi),
            r.tau.map(num).unwrap_or_default(),
            num(r.merit),
            r.omega.to_string(),
            r.partition_size.to_string(),
            num(r.dual_gap),
        ]);
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;

    let m = trace.records.first().and_then(|r| r.image.first()).map_or(0, Vec::len);
    let mut w = csv::Writer::from_path(dir.join("image.csv")).map_err(csv_err)?;
    let mut header = ["k", "scenario", "role", "maximal"].map(String::from).to_vec();
    header.extend(indexed("f", m));
    w.write_record(&header).map_err(csv_err)?;
    let last = trace.records.len().saturating_sub(1);
    for (pos, r) in trace.records.iter().enumerate() {
        let role = if pos == last {
            "red"
        } else if pos == 0 {
            "black"
        } else {
            "blue"
        };
        for (i, value) in r.image.iter().enumerate() {
            let mut row = vec![r.k.to_string(), i.to_string(), role.to_string()];
            row.push(u8::from(r.maximal_ids.binary_search(&i).is_ok()).to_string());
            row.extend(value.iter().copied().map(num));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush()
}

pub fn write_runs_csv(path: &Path, runs: &[RunRecord]) -> io::Result<()> {
    let n = runs.first().map_or(0, |r| r.x0.len());
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = ["run", "status", "iterations", "merit", "phi", "p_norm", "time"].map(String::from).to_vec();
    header.extend(indexed("x0", n));
    header.extend(indexed("x", n));
    header.push("error".into());
    w.write_record(&header).map_err(csv_err)?;
    for r in runs {
        let mut row = vec![
            r.run.to_string(),
            r.status.to_string(),
            r.iterations.to_string(),
            num(r.merit),
            num(r.phi),
            num(r.p_norm),
            num(r.time),
        ];
        row.extend(r.x0.iter().copied().map(num));
        row.extend(r.x.iter().copied().map(num));
        row.push(r.error.clone().unwrap_or_default());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_campaign_files(
    dir: &Path,
    runs: &[RunRecord],
    stats: &CampaignStats,
    timing: &CampaignTiming,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    write_runs_csv(&dir.join("runs.csv"), runs)?;
    write_json(&dir.join("stats.json"), stats)?;
    write_json(&dir.join("timing.json"), timing)
}
