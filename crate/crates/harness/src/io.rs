//! CSV and JSON artifacts.
//!
//! Profiles are written as `r,u` CSV with a JSON sidecar of the same stem.
//! Every JSON file carries `schema_version`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use thinfilm_core::dynamics::{Evolution, HypothesisCheck, OutcomeTag, TrajectorySample};
use thinfilm_core::RadialProfile;

use crate::config::SCHEMA_VERSION;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Versioned<T> {
    pub fn new(body: T) -> Self {
        Self { schema_version: SCHEMA_VERSION, body }
    }
}

pub fn write_json<T: Serialize>(path: &Path, body: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&Versioned::new(body))?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ProfileMeta<'a, T> {
    d: u32,
    n: usize,
    h: f64,
    r_max: f64,
    mass: f64,
    #[serde(flatten)]
    extra: &'a T,
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn write_profile<T: Serialize>(dir: &Path, stem: &str, u: &RadialProfile, extra: &T) -> Result<PathBuf> {
    let g = u.grid();
    let path = dir.join(format!("{stem}.csv"));
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["r", "u"])?;
    for (r, v) in g.nodes().zip(u.values()) {
        w.write_record([r.to_string(), v.to_string()])?;
    }
    w.flush()?;
    let meta = ProfileMeta { d: g.d(), n: g.n(), h: g.h(), r_max: g.r_max(), mass: u.mass(), extra };
    write_json(&dir.join(format!("{stem}.json")), &meta)?;
    Ok(path)
}

/// One trajectory CSV row; the column set is fixed.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub mass: f64,
    pub lp_m1: f64,
    pub grad_l2: f64,
    pub m2: f64,
    #[serde(rename = "F")]
    pub free_energy: f64,
    pub dissipation: f64,
    pub dt: f64,
}

impl From<&TrajectorySample> for TrajectoryRow {
    fn from(s: &TrajectorySample) -> Self {
        Self {
            t: s.t,
            mass: s.mass,
            lp_m1: s.lp_m1,
            grad_l2: s.grad_l2,
            m2: s.m2,
            free_energy: s.free_energy,
            dissipation: s.dissipation,
            dt: s.dt,
        }
    }
}

pub fn write_trajectory(path: &Path, samples: &[TrajectorySample]) -> Result<()> {
    let rows: Vec<TrajectoryRow> = samples.iter().map(TrajectoryRow::from).collect();
    write_csv(path, &rows)
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Contents of `outcome.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub tag: OutcomeTag,
    pub t_end: f64,
    pub reason: String,
    pub hypothesis_check: Option<HypothesisCheck>,
    /// What, if anything, the threshold theorems say about this run.
    pub claim: String,
    pub steps: usize,
    pub rejected: usize,
    pub regrids: usize,
    pub max_mass_drift: f64,
    pub max_energy_rise: f64,
    pub second_moment_audit: Option<f64>,
}

impl OutcomeRecord {
    pub fn new(ev: &Evolution, check: Option<HypothesisCheck>, claim: String, audit: Option<f64>) -> Self {
        Self {
            tag: ev.outcome.tag,
            t_end: ev.outcome.t_end,
            reason: ev.outcome.reason.clone(),
            hypothesis_check: check,
            claim,
            steps: ev.steps,
            rejected: ev.rejected,
            regrids: ev.regrids,
            max_mass_drift: ev.max_mass_drift,
            max_energy_rise: ev.max_energy_rise,
            second_moment_audit: audit,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use thinfilm_core::RadialGrid;

    #[test]
    fn profile_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let u = RadialProfile::from_fn(RadialGrid::new(3, 2.0, 21).unwrap(), |r| (1.0 - r).max(0.0)).unwrap();
        let path = write_profile(dir.path(), "bump", &u, &serde_json::json!({"kind": "test"})).unwrap();
        let text = fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("r,u"));
        assert_eq!(lines.count(), 21);
        let meta: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("bump.json")).unwrap()).unwrap();
        assert_eq!(meta["schema_version"], 1);
        assert_eq!(meta["n"], 21);
        assert_eq!(meta["kind"], "test");
    }

    #[test]
    fn trajectory_columns() {
        let dir = tempfile::tempdir().unwrap();
        let u = RadialProfile::from_fn(RadialGrid::new(3, 2.0, 21).unwrap(), |r| (1.0 - r * r).max(0.0)).unwrap();
        let s = TrajectorySample::of(&u, 2.0, 0.5, 0.1);
        let path = dir.path().join("t.csv");
        write_trajectory(&path, &[s, s]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next(), Some("t,mass,lp_m1,grad_l2,m2,F,dissipation,dt"));
        let back = read_trajectory(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].m2, s.m2);
    }
}
