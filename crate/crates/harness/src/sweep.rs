//! Cartesian parameter sweeps over a base scenario.
//!
//! Grid points are enumerated row-major (the last axis varies fastest) and
//! point `i` runs with seed `base_seed ^ i`.

use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::Value;

use crate::error::{HarnessError, Result};
use crate::output::fmt_real;
use crate::run::{run, RunRecord};
use crate::scenario::{load_scenario, Scenario};

pub const DEFAULT_CAP: usize = 10_000;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisFile {
    pub path: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    /// Base scenario path, relative to the sweep file.
    pub base: String,
    #[serde(default)]
    pub axes: Vec<AxisFile>,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_CAP
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: Scenario,
    pub axes: Vec<AxisFile>,
    pub cap: usize,
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub index: usize,
    pub seed: u64,
    pub values: Vec<Value>,
    pub record: RunRecord,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub paths: Vec<String>,
    pub points: Vec<SweepPoint>,
}

pub fn load_sweep(path: impl AsRef<Path>) -> Result<SweepSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let file: SweepFile = serde_path_to_error::deserialize(&mut de).map_err(|e| HarnessError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new(".")).join(&file.base);
    SweepSpec::new(load_scenario(base)?, file.axes, file.cap)
}

impl SweepSpec {
    pub fn new(base: Scenario, axes: Vec<AxisFile>, cap: usize) -> Result<Self> {
        for (i, a) in axes.iter().enumerate() {
            if a.values.is_empty() {
                return Err(HarnessError::invalid(format!("axes[{i}].values"), "must not be empty"));
            }
            // the path must name an existing parameter
            base.with_override(&a.path, a.values[0].clone())?;
        }
        let spec = Self { base, axes, cap };
        let size = spec.size();
        if size > cap {
            return Err(HarnessError::CapExceeded { size, cap });
        }
        Ok(spec)
    }

    pub fn size(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    /// Axis values of grid point `index`.
    pub fn values_at(&self, mut index: usize) -> Vec<Value> {
        let mut out = vec![Value::Null; self.axes.len()];
        for (slot, axis) in out.iter_mut().zip(&self.axes).rev() {
            *slot = axis.values[index % axis.values.len()].clone();
            index /= axis.values.len();
        }
        out
    }

    pub fn seed_at(&self, index: usize) -> u64 {
        self.base.sim.seed ^ index as u64
    }

    /// The standalone scenario of grid point `index`, seed included.
    pub fn scenario_at(&self, index: usize) -> Result<Scenario> {
        let mut source = self.base.source.clone();
        for (axis, v) in self.axes.iter().zip(self.values_at(index)) {
            crate::scenario::set_path(&mut source, &axis.path, v)?;
        }
        crate::scenario::set_path(&mut source, "sim.seed", Value::from(self.seed_at(index)))?;
        Scenario::from_value(source)
    }
}

pub fn sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let points = (0..spec.size())
        .into_par_iter()
        .map(|i| {
            Ok(SweepPoint {
                index: i,
                seed: spec.seed_at(i),
                values: spec.values_at(i),
                record: run(&spec.scenario_at(i)?)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        paths: spec.axes.iter().map(|a| a.path.clone()).collect(),
        points,
    })
}

fn fmt_value(v: &Value) -> String {
    match v.as_f64() {
        Some(x) if !v.is_u64() && !v.is_i64() => fmt_real(x),
        _ => match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        },
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

/// `index, seed, <axis paths...>, fixation_winner, t_crit, lever_first_true`.
pub fn summary_csv(result: &SweepResult) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    let mut header = vec!["index".to_string(), "seed".to_string()];
    header.extend(result.paths.iter().cloned());
    header.extend(["fixation_winner", "t_crit", "lever_first_true"].map(String::from));
    w.write_record(&header)?;
    for p in &result.points {
        let mut row = vec![p.index.to_string(), p.seed.to_string()];
        row.extend(p.values.iter().map(fmt_value));
        row.push(p.record.fixation_winner.clone().unwrap_or_default());
        row.push(fmt_opt(p.record.t_crit));
        row.push(fmt_opt(p.record.lever_first_true));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| HarnessError::Csv(e.into_error().into()))
}
