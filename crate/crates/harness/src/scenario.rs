//! Scenario files: strict JSON schema, cross-reference resolution and validation.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use symbiont_core::action::{ActionCatalog, ActionSpec, ContextFrame, PolicyDist, Thresholds};
use symbiont_core::geometry::{eco_kernel, human_kernel, AgentMoralModel, MoralPoint, MoralRegion, VirtueBasis};
use symbiont_core::macro_dynamics::{BenefitForm, CapabilityState, MacroParams};
use symbiont_core::mdp::{EvalMode, MdpChoice, ShapingWeights, TabularMdp};
use symbiont_core::population::{InstitutionPolicy, Lineage, LineageClass, PopulationState, TariffPower};

use crate::error::{at, HarnessError, Result};

/// Reserved `reference_region` value: power-weighted intersection of the agents.
pub const ECO_KERNEL: &str = "eco_kernel";
/// Reserved `reference_region` value: intersection of the culture regions.
pub const HUMAN_KERNEL: &str = "human_kernel";

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RegionFile {
    pub center: Vec<f64>,
    pub half_extent: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleFile {
    pub region: String,
    pub weight: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AgentFile {
    pub id: String,
    pub particles: Vec<ParticleFile>,
    pub power: f64,
    #[serde(default)]
    pub last_action: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FrameFile {
    pub state_id: String,
    #[serde(default)]
    pub influence: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ActionFile {
    pub id: String,
    pub base_fitness: f64,
    pub epsilon: BTreeMap<String, Vec<f64>>,
    pub beta: [f64; 3],
    #[serde(default)]
    pub requires_human: bool,
    #[serde(default)]
    pub preserves_human: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassFile {
    HumanAligned,
    Machine,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LineageFile {
    pub id: String,
    pub class: ClassFile,
    pub policy: BTreeMap<String, f64>,
    pub initial_share: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsFile {
    pub theta_fit: f64,
    pub tau_eth: f64,
    pub theta_aut: f64,
    pub beta_weights: [f64; 3],
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InstitutionFile {
    #[serde(default)]
    pub tariff_rate: f64,
    #[serde(default = "one_i64")]
    pub tariff_power: i64,
    #[serde(default)]
    pub subsidy_rate: f64,
    #[serde(default)]
    pub delta_inst_h: f64,
    #[serde(default)]
    pub delta_inst_m: f64,
}

fn one_i64() -> i64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EvalModeFile {
    #[default]
    NegDistance,
    RawDistance,
    ExpNegDistance,
}

impl From<EvalModeFile> for EvalMode {
    fn from(m: EvalModeFile) -> Self {
        match m {
            EvalModeFile::NegDistance => Self::NegDistance,
            EvalModeFile::RawDistance => Self::RawDistance,
            EvalModeFile::ExpNegDistance => Self::ExpNegDistance,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapingFile {
    pub alpha_env: f64,
    pub alpha_m: f64,
    pub alpha_as: f64,
    pub alpha_b: f64,
    pub alpha_h: f64,
    pub eta_couple: f64,
    pub eval_mode: EvalModeFile,
}

impl Default for ShapingFile {
    fn default() -> Self {
        Self {
            alpha_env: 1.0,
            alpha_m: 1.0,
            alpha_as: 1.0,
            alpha_b: 1.0,
            alpha_h: 1.0,
            eta_couple: 0.0,
            eval_mode: EvalModeFile::NegDistance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BenefitFile {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MacroParamsFile {
    pub r_m: f64,
    pub r_h: f64,
    pub benefit_slope: f64,
    #[serde(default)]
    pub benefit_form: BenefitFile,
    #[serde(default)]
    pub cost_m: f64,
    #[serde(default)]
    pub cost_h: f64,
    pub delta_d: f64,
    pub delta_aut: f64,
    #[serde(default)]
    pub invest_gain: f64,
    #[serde(default)]
    pub dependence_decay: f64,
    #[serde(default)]
    pub feedback_gain: f64,
    #[serde(default)]
    pub human_growth: f64,
    #[serde(default)]
    pub machine_growth: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CapabilityFile {
    pub pi_h: f64,
    pub pi_m: f64,
    pub dependence: f64,
    #[serde(default = "one_f64")]
    pub world_resources: f64,
}

fn one_f64() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MacroFile {
    pub params: MacroParamsFile,
    pub initial: CapabilityFile,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VirtueFile {
    pub vectors: Vec<Vec<f64>>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MdpFile {
    pub states: Vec<String>,
    pub actions_by_state: IndexMap<String, Vec<String>>,
    /// `state -> action -> next state -> probability`.
    pub transition: IndexMap<String, IndexMap<String, IndexMap<String, f64>>>,
    /// `state -> action -> reward`.
    pub r_env: IndexMap<String, IndexMap<String, f64>>,
    pub gamma: f64,
    #[serde(default)]
    pub virtue: Option<VirtueFile>,
    #[serde(default)]
    pub sigma_u: Option<f64>,
    #[serde(default)]
    pub delta_virtue: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimFile {
    pub dt: f64,
    pub steps: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub moral_dimension: usize,
    #[serde(default)]
    pub context_dimension: usize,
    pub regions: IndexMap<String, RegionFile>,
    #[serde(default)]
    pub cultures: Vec<String>,
    pub reference_region: String,
    #[serde(default)]
    pub agents: Vec<AgentFile>,
    pub frame: FrameFile,
    pub actions: Vec<ActionFile>,
    pub lineages: Vec<LineageFile>,
    pub thresholds: ThresholdsFile,
    pub institution: InstitutionFile,
    #[serde(default)]
    pub shaping: ShapingFile,
    #[serde(rename = "macro")]
    pub macro_: MacroFile,
    #[serde(default)]
    pub mdps: IndexMap<String, MdpFile>,
    pub sim: SimFile,
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub id: String,
    pub model: AgentMoralModel<f64>,
    pub last_action: Option<String>,
}

#[derive(Debug, Clone)]
pub struct MdpDef {
    pub mdp: TabularMdp<f64>,
    pub virtue: Option<VirtueBasis<f64>>,
    pub sigma_u: Option<f64>,
    pub delta_virtue: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
}

/// A validated scenario with every reference resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    /// Canonical JSON the scenario was built from.
    pub source: Value,
    /// Hex SHA-256 of the canonical JSON.
    pub hash: String,
    pub moral_dim: usize,
    pub context_dim: usize,
    pub regions: IndexMap<String, MoralRegion<f64>>,
    pub cultures: Vec<String>,
    pub agents: Vec<Agent>,
    pub reference_name: String,
    pub reference: MoralRegion<f64>,
    pub frame: ContextFrame<f64>,
    pub catalog: ActionCatalog<f64>,
    pub lineages: Vec<Lineage<f64>>,
    pub initial: PopulationState<f64>,
    pub thresholds: Thresholds<f64>,
    pub institution: InstitutionPolicy<f64>,
    pub shaping: ShapingWeights<f64>,
    pub macro_params: MacroParams<f64>,
    pub macro_initial: CapabilityState<f64>,
    pub mdps: IndexMap<String, MdpDef>,
    pub sim: SimParams,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Scenario::from_json_str(&text)
}

fn point(path: &str, coords: &[f64], dim: usize) -> Result<MoralPoint<f64>> {
    if coords.len() != dim {
        return Err(HarnessError::invalid(
            path,
            format!("has {} coordinates, expected {dim}", coords.len()),
        ));
    }
    at(path, MoralPoint::new(coords.to_vec()))
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| HarnessError::Parse {
            path: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let file: ScenarioFile = serde_path_to_error::deserialize(value.clone()).map_err(|e| HarnessError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        let bytes = serde_json::to_vec(&value).expect("a JSON value always serializes");
        let hash = hex::encode(Sha256::digest(&bytes));
        Self::build(file, value, hash)
    }

    /// Same scenario with `value` written at a dotted `path` (e.g. `institution.tariff_rate`).
    pub fn with_override(&self, path: &str, value: Value) -> Result<Self> {
        let mut source = self.source.clone();
        set_path(&mut source, path, value)?;
        Self::from_value(source)
    }

    fn build(f: ScenarioFile, source: Value, hash: String) -> Result<Self> {
        let k = f.moral_dimension;
        if k == 0 {
            return Err(HarnessError::invalid("moral_dimension", "must be >= 1"));
        }
        let seed = f.sim.seed.ok_or(HarnessError::Missing("sim.seed"))?;
        if !(f.sim.dt > 0.0 && f.sim.dt.is_finite()) {
            return Err(HarnessError::invalid("sim.dt", "must be finite and > 0"));
        }

        let mut regions = IndexMap::new();
        for (name, r) in &f.regions {
            let path = format!("regions.{name}");
            if name == ECO_KERNEL || name == HUMAN_KERNEL {
                return Err(HarnessError::invalid(&path, "name is reserved"));
            }
            if r.center.len() != k || r.half_extent.len() != k {
                return Err(HarnessError::invalid(
                    &path,
                    format!("dimension differs from moral_dimension {k}"),
                ));
            }
            regions.insert(
                name.clone(),
                at(&path, MoralRegion::new(r.center.clone(), r.half_extent.clone()))?,
            );
        }
        let region = |path: &str, name: &str| -> Result<MoralRegion<f64>> {
            regions
                .get(name)
                .cloned()
                .ok_or_else(|| HarnessError::invalid(path, format!("unknown region `{name}`")))
        };

        let mut culture_regions = Vec::new();
        for (i, c) in f.cultures.iter().enumerate() {
            culture_regions.push(region(&format!("cultures[{i}]"), c)?);
        }

        let mut actions = Vec::new();
        for (i, a) in f.actions.iter().enumerate() {
            let path = format!("actions[{i}]");
            let mut eps = BTreeMap::new();
            for (ctx, c) in &a.epsilon {
                eps.insert(ctx.clone(), point(&format!("{path}.epsilon.{ctx}"), c, k)?);
            }
            actions.push(at(
                &path,
                ActionSpec::new(
                    a.id.clone(),
                    a.base_fitness,
                    eps,
                    a.beta,
                    a.requires_human,
                    a.preserves_human,
                ),
            )?);
        }
        let catalog = at("actions", ActionCatalog::new(actions))?;

        let mut agents = Vec::new();
        let mut agent_ids = HashSet::new();
        for (i, a) in f.agents.iter().enumerate() {
            let path = format!("agents[{i}]");
            if !agent_ids.insert(a.id.as_str()) {
                return Err(HarnessError::invalid(&path, format!("duplicate agent id `{}`", a.id)));
            }
            let mut particles = Vec::new();
            for (j, p) in a.particles.iter().enumerate() {
                particles.push((region(&format!("{path}.particles[{j}].region"), &p.region)?, p.weight));
            }
            if let Some(act) = &a.last_action {
                if !catalog.contains(act) {
                    return Err(HarnessError::invalid(
                        format!("{path}.last_action"),
                        format!("unknown action `{act}`"),
                    ));
                }
            }
            agents.push(Agent {
                id: a.id.clone(),
                model: at(&path, AgentMoralModel::new(particles, a.power))?,
                last_action: a.last_action.clone(),
            });
        }

        let reference = match f.reference_region.as_str() {
            ECO_KERNEL => {
                let models: Vec<_> = agents.iter().map(|a| a.model.clone()).collect();
                at("reference_region", eco_kernel(&models))?
            }
            HUMAN_KERNEL => at("reference_region", human_kernel(&culture_regions))?,
            name => region("reference_region", name)?,
        };

        if f.frame.influence.len() != f.context_dimension {
            return Err(HarnessError::invalid(
                "frame.influence",
                format!(
                    "has {} entries, expected context_dimension {}",
                    f.frame.influence.len(),
                    f.context_dimension
                ),
            ));
        }
        let frame = ContextFrame::new(f.frame.state_id.clone(), f.frame.influence.clone());

        let mut lineages = Vec::new();
        let mut shares = IndexMap::new();
        for (i, l) in f.lineages.iter().enumerate() {
            let path = format!("lineages[{i}] ({})", l.id);
            if shares.contains_key(&l.id) {
                return Err(HarnessError::invalid(&path, "duplicate lineage id"));
            }
            if let Some(a) = l.policy.keys().find(|a| !catalog.contains(a)) {
                return Err(HarnessError::invalid(
                    format!("{path}.policy"),
                    format!("unknown action `{a}`"),
                ));
            }
            let policy = at(format!("{path}.policy"), PolicyDist::new(l.policy.clone()))?;
            let class = match l.class {
                ClassFile::HumanAligned => LineageClass::HumanAligned,
                ClassFile::Machine => LineageClass::Machine,
            };
            shares.insert(l.id.clone(), l.initial_share);
            lineages.push(Lineage::new(l.id.clone(), policy, class));
        }
        if lineages.is_empty() {
            return Err(HarnessError::invalid("lineages", "at least one lineage required"));
        }
        let initial = at("lineages[*].initial_share", PopulationState::new(shares, 0.0))?;

        let t = &f.thresholds;
        let thresholds = at(
            "thresholds",
            Thresholds::new(t.theta_fit, t.tau_eth, t.theta_aut, t.beta_weights),
        )?;
        let institution = institution_from(&f.institution)?;
        let shaping = shaping_from(&f.shaping)?;

        let p = &f.macro_.params;
        let macro_params = MacroParams {
            r_m: p.r_m,
            r_h: p.r_h,
            benefit_slope: p.benefit_slope,
            benefit_form: match p.benefit_form {
                BenefitFile::Linear => BenefitForm::Linear,
                BenefitFile::Log => BenefitForm::Log,
            },
            cost_m: p.cost_m,
            cost_h: p.cost_h,
            delta_d: p.delta_d,
            delta_aut: p.delta_aut,
            invest_gain: p.invest_gain,
            dependence_decay: p.dependence_decay,
            feedback_gain: p.feedback_gain,
            human_growth: p.human_growth,
            machine_growth: p.machine_growth,
        };
        at("macro.params", macro_params.validate())?;
        let c = &f.macro_.initial;
        let macro_initial = at(
            "macro.initial",
            CapabilityState::new(c.pi_h, c.pi_m, c.dependence, c.world_resources),
        )?;

        let mut mdps = IndexMap::new();
        for (id, m) in &f.mdps {
            mdps.insert(id.clone(), mdp_from(&format!("mdps.{id}"), m, &catalog, &frame, k)?);
        }

        Ok(Self {
            name: f.name,
            source,
            hash,
            moral_dim: k,
            context_dim: f.context_dimension,
            regions,
            cultures: f.cultures,
            agents,
            reference_name: f.reference_region,
            reference,
            frame,
            catalog,
            lineages,
            initial,
            thresholds,
            institution,
            shaping,
            macro_params,
            macro_initial,
            mdps,
            sim: SimParams {
                dt: f.sim.dt,
                steps: f.sim.steps,
                seed,
            },
        })
    }
}

pub(crate) fn institution_from(i: &InstitutionFile) -> Result<InstitutionPolicy<f64>> {
    let power = at("institution.tariff_power", TariffPower::from_exponent(i.tariff_power))?;
    at(
        "institution",
        InstitutionPolicy::new(i.tariff_rate, power, i.subsidy_rate, i.delta_inst_h, i.delta_inst_m),
    )
}

pub(crate) fn shaping_from(s: &ShapingFile) -> Result<ShapingWeights<f64>> {
    let w = ShapingWeights {
        alpha_env: s.alpha_env,
        alpha_m: s.alpha_m,
        alpha_as: s.alpha_as,
        alpha_b: s.alpha_b,
        alpha_h: s.alpha_h,
        eta_couple: s.eta_couple,
        eval_mode: s.eval_mode.into(),
    };
    at("shaping", w.validate())?;
    Ok(w)
}

fn mdp_from(
    path: &str,
    m: &MdpFile,
    catalog: &ActionCatalog<f64>,
    frame: &ContextFrame<f64>,
    k: usize,
) -> Result<MdpDef> {
    let mut entries = Vec::new();
    for s in &m.states {
        let acts = m
            .actions_by_state
            .get(s)
            .ok_or_else(|| HarnessError::invalid(format!("{path}.actions_by_state"), format!("missing state `{s}`")))?;
        for a in acts {
            let t_path = format!("{path}.transition.{s}.{a}");
            let row = m
                .transition
                .get(s)
                .and_then(|r| r.get(a))
                .ok_or_else(|| HarnessError::invalid(&t_path, "missing"))?;
            let r_path = format!("{path}.r_env.{s}.{a}");
            let r_env = *m
                .r_env
                .get(s)
                .and_then(|r| r.get(a))
                .ok_or_else(|| HarnessError::invalid(&r_path, "missing"))?;
            entries.push(MdpChoice {
                state: s.clone(),
                action: a.clone(),
                r_env,
                transition: row.iter().map(|(t, p)| (t.clone(), *p)).collect(),
            });
        }
    }
    let listed = |s: &str, a: &str| m.actions_by_state.get(s).is_some_and(|v| v.iter().any(|x| x == a));
    for (s, row) in &m.transition {
        if let Some(a) = row.keys().find(|a| !listed(s, a)) {
            return Err(HarnessError::invalid(
                format!("{path}.transition.{s}.{a}"),
                "pair not in actions_by_state",
            ));
        }
    }
    for (s, row) in &m.r_env {
        if let Some(a) = row.keys().find(|a| !listed(s, a)) {
            return Err(HarnessError::invalid(
                format!("{path}.r_env.{s}.{a}"),
                "pair not in actions_by_state",
            ));
        }
    }
    if let Some(s) = m.actions_by_state.keys().find(|s| !m.states.contains(s)) {
        return Err(HarnessError::invalid(
            format!("{path}.actions_by_state"),
            format!("unknown state `{s}`"),
        ));
    }
    let mdp = at(
        path,
        TabularMdp::new(
            m.states.clone(),
            catalog.clone(),
            entries,
            m.gamma,
            frame.influence.clone(),
        ),
    )?;
    let virtue = match &m.virtue {
        None => None,
        Some(v) => {
            let vectors = v
                .vectors
                .iter()
                .enumerate()
                .map(|(j, c)| point(&format!("{path}.virtue.vectors[{j}]"), c, k))
                .collect::<Result<Vec<_>>>()?;
            let basis = match &v.weights {
                Some(w) => VirtueBasis::new(vectors, w.clone()),
                None => VirtueBasis::unweighted(vectors),
            };
            Some(at(format!("{path}.virtue"), basis)?)
        }
    };
    for (name, v) in [("sigma_u", m.sigma_u), ("delta_virtue", m.delta_virtue)] {
        if v.is_some_and(|x| !(x >= 0.0) || !x.is_finite()) {
            return Err(HarnessError::invalid(
                format!("{path}.{name}"),
                "must be finite and >= 0",
            ));
        }
    }
    Ok(MdpDef {
        mdp,
        virtue,
        sigma_u: m.sigma_u,
        delta_virtue: m.delta_virtue,
    })
}

/// Replaces the existing leaf at a dotted path; numeric segments index arrays.
pub fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut node = root;
    for seg in path.split('.') {
        node = match node {
            Value::Object(map) => map.get_mut(seg),
            Value::Array(items) => seg.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| HarnessError::invalid(path, "no such parameter in the scenario"))?;
    }
    *node = value;
    Ok(())
}
