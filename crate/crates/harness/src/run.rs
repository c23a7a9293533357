//! Step-by-step coupled runs of the population and macro layers.
//!
//! Each step evaluates effective fitness, applies one replicator update and
//! one macro update. The macro investment gain is scaled by the machine-class
//! share at the start of the step.

use serde::{Deserialize, Serialize};

use symbiont_core::action::Evaluation;
use symbiont_core::macro_dynamics::{
    autarky_advantage, critical_time, feedback_active, governance_lever_holds, macro_step, CapabilityState, MacroSample,
};
use symbiont_core::mdp::ShapingWeights;
use symbiont_core::population::{
    effective_fitness, replicator_step, FitnessReport, InstitutionPolicy, LineageClass, PopulationState,
};

use crate::error::{at, HarnessError, Result};
use crate::patch::{self, Patch, PatchError};
use crate::scenario::Scenario;

/// Share above which a lineage counts as fixated.
pub const FIXATION_THRESHOLD: f64 = 0.999;
pub const JOURNAL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationRow {
    pub t: f64,
    pub shares: Vec<f64>,
    pub f_bar: f64,
    pub rho_acs: Vec<f64>,
    pub rho_aut: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MacroRow {
    pub t: f64,
    pub pi_h: f64,
    pub pi_m: f64,
    pub gamma: f64,
    pub dependence: f64,
    pub delta_aut: f64,
    pub lever: bool,
    pub feedback_active: bool,
}

/// A patch as applied: before advancing from row `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub step: usize,
    pub path: String,
    pub value: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Journal {
    pub v: u32,
    pub scenario_hash: String,
    /// Steps taken by the recorded session.
    pub steps: usize,
    pub entries: Vec<JournalEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub scenario: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub dt: f64,
    pub lineages: Vec<String>,
    pub population: Vec<PopulationRow>,
    #[serde(rename = "macro")]
    pub macro_rows: Vec<MacroRow>,
    pub t_crit: Option<f64>,
    pub fixation_winner: Option<String>,
    pub lever_first_true: Option<f64>,
    pub journal: Vec<JournalEntry>,
}

/// Mutable run state; rows are recorded for every state reached.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    inst: InstitutionPolicy<f64>,
    shaping: ShapingWeights<f64>,
    pop: PopulationState<f64>,
    cap: CapabilityState<f64>,
    report: FitnessReport<f64>,
    step: usize,
    population: Vec<PopulationRow>,
    macro_rows: Vec<MacroRow>,
    samples: Vec<MacroSample<f64>>,
    pending: Vec<Patch>,
    journal: Vec<JournalEntry>,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self> {
        let inst = scenario.institution;
        let pop = scenario.initial.clone();
        let report = fitness(&scenario, &pop, &inst)?;
        let mut sim = Self {
            inst,
            shaping: scenario.shaping,
            cap: scenario.macro_initial,
            pop,
            report,
            step: 0,
            population: Vec::new(),
            macro_rows: Vec::new(),
            samples: Vec::new(),
            pending: Vec::new(),
            journal: Vec::new(),
            scenario,
        };
        sim.record_rows();
        Ok(sim)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn institution(&self) -> &InstitutionPolicy<f64> {
        &self.inst
    }

    pub fn shaping(&self) -> &ShapingWeights<f64> {
        &self.shaping
    }

    /// Index of the current row; also the number of steps taken.
    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.pop.time()
    }

    pub fn population_rows(&self) -> &[PopulationRow] {
        &self.population
    }

    pub fn macro_rows(&self) -> &[MacroRow] {
        &self.macro_rows
    }

    pub fn journal_entries(&self) -> &[JournalEntry] {
        &self.journal
    }

    pub fn pending(&self) -> &[Patch] {
        &self.pending
    }

    /// Parameters as they will be once queued patches apply.
    fn effective_params(&self) -> Result<(InstitutionPolicy<f64>, ShapingWeights<f64>), PatchError> {
        self.pending
            .iter()
            .try_fold((self.inst, self.shaping), |(i, w), p| patch::apply(&i, &w, p))
    }

    /// Validates and queues patches for the next step boundary; all or none are queued.
    pub fn queue_patches(&mut self, patches: Vec<Patch>) -> Result<Vec<Patch>, PatchError> {
        let (mut i, mut w) = self.effective_params()?;
        let mut canonical = Vec::with_capacity(patches.len());
        for p in patches {
            let p = Patch {
                path: patch::canonical_path(&p.path)?,
                value: p.value,
            };
            (i, w) = patch::apply(&i, &w, &p)?;
            canonical.push(p);
        }
        self.pending.extend(canonical.iter().cloned());
        Ok(canonical)
    }

    pub fn t_crit(&self) -> Option<f64> {
        critical_time(&self.samples, &self.scenario.macro_params).expect("samples are recorded in time order")
    }

    pub fn step(&mut self) -> Result<()> {
        if !self.pending.is_empty() {
            for p in std::mem::take(&mut self.pending) {
                let (i, w) = patch::apply(&self.inst, &self.shaping, &p)
                    .map_err(|e| HarnessError::invalid(&p.path, e.to_string()))?;
                self.inst = i;
                self.shaping = w;
                self.journal.push(JournalEntry {
                    step: self.step,
                    path: p.path,
                    value: p.value,
                });
            }
            self.report = fitness(&self.scenario, &self.pop, &self.inst)?;
        }
        let dt = self.scenario.sim.dt;
        let machine: f64 = self
            .scenario
            .lineages
            .iter()
            .filter(|l| l.class == LineageClass::Machine)
            .map(|l| self.pop.share(&l.id).expect("lineage ids match the population"))
            .sum();
        let mp = self.scenario.macro_params.with_invest_scale(machine);
        let next_pop = at("replicator_step", replicator_step(&self.pop, &self.report, dt))?;
        let next_cap = at("macro_step", macro_step(&self.cap, &mp, &self.inst, dt))?;
        self.pop = next_pop;
        self.cap = next_cap;
        self.report = fitness(&self.scenario, &self.pop, &self.inst)?;
        self.step += 1;
        self.record_rows();
        Ok(())
    }

    pub fn advance(&mut self, n: usize) -> Result<()> {
        for _ in 0..n {
            self.step()?;
        }
        Ok(())
    }

    fn record_rows(&mut self) {
        let rho = &self.report.rho;
        let row = PopulationRow {
            t: self.pop.time(),
            shares: self.pop.shares().values().copied().collect(),
            f_bar: self.report.mean,
            rho_acs: self.pop.shares().keys().map(|id| rho[id].rho_acs).collect(),
            rho_aut: self.pop.shares().keys().map(|id| rho[id].rho_aut).collect(),
        };
        self.population.push(row);
        let mp = &self.scenario.macro_params;
        self.macro_rows.push(MacroRow {
            t: self.cap.time,
            pi_h: self.cap.pi_h,
            pi_m: self.cap.pi_m,
            gamma: self.cap.gap(),
            dependence: self.cap.dependence,
            delta_aut: autarky_advantage(&self.cap, mp, &self.inst),
            lever: governance_lever_holds(&self.cap, mp, &self.inst),
            feedback_active: feedback_active(&self.cap, mp),
        });
        self.samples.push(MacroSample::of(&self.cap, mp, &self.inst));
    }

    pub fn journal(&self) -> Journal {
        Journal {
            v: JOURNAL_VERSION,
            scenario_hash: self.scenario.hash.clone(),
            steps: self.step,
            entries: self.journal.clone(),
        }
    }

    pub fn record(&self) -> RunRecord {
        RunRecord {
            scenario: self.scenario.name.clone(),
            scenario_hash: self.scenario.hash.clone(),
            seed: self.scenario.sim.seed,
            dt: self.scenario.sim.dt,
            lineages: self.pop.shares().keys().cloned().collect(),
            population: self.population.clone(),
            macro_rows: self.macro_rows.clone(),
            t_crit: self.t_crit(),
            fixation_winner: self.pop.fixated(FIXATION_THRESHOLD).map(String::from),
            lever_first_true: self.macro_rows.iter().find(|r| r.lever).map(|r| r.t),
            journal: self.journal.clone(),
        }
    }
}

fn fitness(s: &Scenario, pop: &PopulationState<f64>, inst: &InstitutionPolicy<f64>) -> Result<FitnessReport<f64>> {
    let ev = Evaluation::new(&s.catalog, &s.frame, &s.reference, &s.thresholds);
    at("effective_fitness", effective_fitness(pop, &s.lineages, inst, &ev))
}

/// Runs `sim.steps` steps with the scenario's fixed parameters.
pub fn run(scenario: &Scenario) -> Result<RunRecord> {
    let mut sim = Simulation::new(scenario.clone())?;
    sim.advance(scenario.sim.steps)?;
    Ok(sim.record())
}

/// Re-runs a steered session, applying each journaled patch at its step.
pub fn replay(scenario: &Scenario, journal: &Journal) -> Result<RunRecord> {
    if journal.v != JOURNAL_VERSION {
        return Err(HarnessError::invalid(
            "journal.v",
            format!("unsupported version {}", journal.v),
        ));
    }
    if journal.scenario_hash != scenario.hash {
        return Err(HarnessError::invalid(
            "journal.scenario_hash",
            "does not match the scenario",
        ));
    }
    if let Some(i) = journal.entries.windows(2).position(|w| w[1].step < w[0].step) {
        return Err(HarnessError::invalid(
            format!("journal.entries[{}]", i + 1),
            "steps out of order",
        ));
    }
    if let Some(e) = journal.entries.iter().find(|e| e.step >= journal.steps) {
        return Err(HarnessError::invalid(
            "journal.entries",
            format!("patch at step {} beyond the session", e.step),
        ));
    }
    let mut sim = Simulation::new(scenario.clone())?;
    let mut entries = journal.entries.iter().peekable();
    for step in 0..journal.steps {
        let mut due = Vec::new();
        while let Some(e) = entries.next_if(|e| e.step == step) {
            due.push(Patch {
                path: e.path.clone(),
                value: e.value.clone(),
            });
        }
        if !due.is_empty() {
            sim.queue_patches(due)
                .map_err(|e| HarnessError::invalid(format!("journal step {step}"), e.to_string()))?;
        }
        sim.step()?;
    }
    Ok(sim.record())
}
