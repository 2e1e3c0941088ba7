//! Configuration, persistence and the subcommands behind the `dnf` binary.

pub mod config;
pub mod output;
pub mod snapshot;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::exec::{with_threads, Execution};
use crate::experiments::{nu_sweep, profile_experiment, ProfileConfig, ProfileRun, SweepResult};
use crate::model::estimate_kf;
use crate::stepper::{run, Trajectory};
use crate::validation::{run_all, CheckOutcome};

pub use config::{parse_config, parse_config_str, RunConfig, Scale};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotHeader};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_BLOW_UP: i32 = 2;

pub fn exit_code(err: &Error) -> i32 {
    if err.is_blow_up() {
        EXIT_BLOW_UP
    } else {
        EXIT_CONFIG
    }
}

pub fn snapshot_file_name(step: usize) -> String {
    format!("snapshot_{step:06}.dnf")
}

/// Single run: binary snapshots per the snapshot policy, the final state, and `norms.csv`.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<(Trajectory, Vec<PathBuf>)> {
    let study = cfg.study();
    let grid = study.build_grid()?;
    let tr = with_threads(cfg.threads, || {
        run(&cfg.model, &grid, &cfg.time, cfg.snapshot_policy(), Execution::Parallel)
    })?;
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    for s in &tr.snapshots {
        let p = out.join(snapshot_file_name(s.step));
        write_snapshot(&s.field, s.time, &p)?;
        written.push(p);
    }
    let last = cfg.time.n_steps();
    if !tr.snapshots.iter().any(|s| s.step == last) {
        let p = out.join(snapshot_file_name(last));
        write_snapshot(&tr.final_state, cfg.time.t_end(), &p)?;
        written.push(p);
    }
    let mut norms = String::from("t,l2\n");
    for (n, sq) in tr.norms_sq.iter().enumerate() {
        let _ = writeln!(norms, "{:.16e},{:.16e}", cfg.time.time(n), sq.sqrt());
    }
    let p = out.join("norms.csv");
    fs::write(&p, norms)?;
    written.push(p);
    Ok((tr, written))
}

pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<(SweepResult, Vec<PathBuf>)> {
    let result = with_threads(cfg.threads, || nu_sweep(&cfg.sweep(), Execution::Parallel))?;
    let written = output::emit_sweep(&result, out, cfg.plots)?;
    Ok((result, written))
}

/// Profile study at `t = 1` and `t = T`: slice CSVs plus binary snapshots of the full fields.
pub fn profiles(cfg: &RunConfig, out: &Path) -> Result<(Vec<ProfileRun>, Vec<PathBuf>)> {
    let mut times = vec![1.0, cfg.time.t_end()];
    times.retain(|&t| cfg.time.step_at(t).is_some());
    times.dedup();
    let pc = ProfileConfig {
        study: cfg.study(),
        nu: cfg.profile_nu,
        times,
    };
    let runs = with_threads(cfg.threads, || profile_experiment(&pc, Execution::Parallel))?;
    let mut written = output::emit_profiles(&runs, out, cfg.plots)?;
    for r in &runs {
        for (t, f) in &r.fields {
            let p = out.join(format!("field_nu{}_t{}.dnf", r.nu, t));
            write_snapshot(f, *t, &p)?;
            written.push(p);
        }
    }
    Ok((runs, written))
}

pub fn kf(cfg: &RunConfig) -> Result<f64> {
    let grid = cfg.study().build_grid()?;
    estimate_kf(&cfg.model, &grid)
}

pub fn validate(threads: Option<usize>) -> Vec<CheckOutcome> {
    with_threads(threads, run_all)
}
