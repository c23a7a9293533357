//! Live parameter patches, restricted to institution and shaping fields.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use symbiont_core::mdp::{EvalMode, ShapingWeights};
use symbiont_core::population::{InstitutionPolicy, TariffPower};

pub const INSTITUTION_FIELDS: [&str; 5] = [
    "tariff_rate",
    "tariff_power",
    "subsidy_rate",
    "delta_inst_h",
    "delta_inst_m",
];
pub const SHAPING_FIELDS: [&str; 7] = [
    "alpha_env",
    "alpha_m",
    "alpha_as",
    "alpha_b",
    "alpha_h",
    "eta_couple",
    "eval_mode",
];
const STRUCTURAL: [&str; 14] = [
    "name",
    "moral_dimension",
    "context_dimension",
    "regions",
    "cultures",
    "reference_region",
    "agents",
    "frame",
    "actions",
    "lineages",
    "thresholds",
    "macro",
    "mdps",
    "sim",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatchError {
    #[error("structural field: {0}")]
    Structural(String),
    #[error("unknown field: {0}")]
    Unknown(String),
    #[error("invalid value for {field}: {reason}")]
    BadValue { field: String, reason: String },
}

/// One parameter change under its canonical dotted path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub path: String,
    pub value: Value,
}

/// Canonical `institution.*` / `shaping.*` path for a dotted or bare name.
pub fn canonical_path(name: &str) -> Result<String, PatchError> {
    let (head, rest) = match name.split_once('.') {
        Some((h, r)) => (h, Some(r)),
        None => (name, None),
    };
    match (head, rest) {
        ("institution", Some(f)) if INSTITUTION_FIELDS.contains(&f) => Ok(name.to_string()),
        ("shaping", Some(f)) if SHAPING_FIELDS.contains(&f) => Ok(name.to_string()),
        (h, _) if STRUCTURAL.contains(&h) => Err(PatchError::Structural(name.to_string())),
        (f, None) if INSTITUTION_FIELDS.contains(&f) => Ok(format!("institution.{f}")),
        (f, None) if SHAPING_FIELDS.contains(&f) => Ok(format!("shaping.{f}")),
        _ => Err(PatchError::Unknown(name.to_string())),
    }
}

fn number(field: &str, v: &Value) -> Result<f64, PatchError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| PatchError::BadValue {
            field: field.to_string(),
            reason: "expected a finite number".into(),
        })
}

/// Applies `patch` to copies of the parameters and returns them if they validate.
pub fn apply(
    inst: &InstitutionPolicy<f64>,
    shaping: &ShapingWeights<f64>,
    patch: &Patch,
) -> Result<(InstitutionPolicy<f64>, ShapingWeights<f64>), PatchError> {
    let path = canonical_path(&patch.path)?;
    let (mut i, mut w) = (*inst, *shaping);
    let v = &patch.value;
    let bad = |reason: String| PatchError::BadValue {
        field: path.clone(),
        reason,
    };
    match path.as_str() {
        "institution.tariff_rate" => i.tariff_rate = number(&path, v)?,
        "institution.subsidy_rate" => i.subsidy_rate = number(&path, v)?,
        "institution.delta_inst_h" => i.delta_inst_h = number(&path, v)?,
        "institution.delta_inst_m" => i.delta_inst_m = number(&path, v)?,
        "institution.tariff_power" => {
            let p = v.as_i64().ok_or_else(|| bad("expected 1 or 2".into()))?;
            i.tariff_power = TariffPower::from_exponent(p).map_err(|e| bad(e.to_string()))?;
        }
        "shaping.alpha_env" => w.alpha_env = number(&path, v)?,
        "shaping.alpha_m" => w.alpha_m = number(&path, v)?,
        "shaping.alpha_as" => w.alpha_as = number(&path, v)?,
        "shaping.alpha_b" => w.alpha_b = number(&path, v)?,
        "shaping.alpha_h" => w.alpha_h = number(&path, v)?,
        "shaping.eta_couple" => w.eta_couple = number(&path, v)?,
        "shaping.eval_mode" => {
            w.eval_mode = match v.as_str() {
                Some("neg_distance") => EvalMode::NegDistance,
                Some("raw_distance") => EvalMode::RawDistance,
                Some("exp_neg_distance") => EvalMode::ExpNegDistance,
                _ => return Err(bad("expected neg_distance, raw_distance or exp_neg_distance".into())),
            }
        }
        _ => unreachable!("canonical_path only returns whitelisted fields"),
    }
    i.validate().map_err(|e| bad(e.to_string()))?;
    w.validate().map_err(|e| bad(e.to_string()))?;
    Ok((i, w))
}
