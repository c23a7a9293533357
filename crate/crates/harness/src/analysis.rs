//! One-shot analyses behind the `classify`, `mdp solve` and `sanction-round` commands.

use serde::Serialize;

use symbiont_core::action::{power_index, Evaluation, Membership};
use symbiont_core::geometry::salience;
use symbiont_core::mdp::{
    sanction_round, value_iteration, virtue_fallback_select, virtue_policy, AgentPolicy, BeliefParticles,
};

use crate::error::{at, HarnessError, Result};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Serialize)]
pub struct ActionClass {
    pub id: String,
    pub distance: f64,
    pub salience: f64,
    pub beta: f64,
    pub chi_as: f64,
    pub fitness: bool,
    pub ethical: bool,
    pub symb: bool,
    pub aut: bool,
    pub ethical_fitness: bool,
    pub acs: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LineagePrevalence {
    pub id: String,
    pub rho_acs: f64,
    pub rho_aut: f64,
    pub rho_eth: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub reference_region: String,
    pub actions: Vec<ActionClass>,
    pub lineages: Vec<LineagePrevalence>,
}

pub fn classify(s: &Scenario) -> Result<Classification> {
    let ev = Evaluation::new(&s.catalog, &s.frame, &s.reference, &s.thresholds);
    let mut actions = Vec::new();
    for a in s.catalog.iter() {
        let m: Membership = at(a.id(), ev.classify(a))?;
        let eps = symbiont_core::action::ethical_eval(&s.frame, a);
        actions.push(ActionClass {
            id: a.id().to_string(),
            distance: at(a.id(), ev.distance(a))?,
            salience: at(a.id(), salience(eps, &s.reference))?,
            beta: power_index(a, &s.thresholds),
            chi_as: at(a.id(), ev.chi_as(a))?,
            fitness: m.fitness,
            ethical: m.ethical,
            symb: m.symb,
            aut: m.aut,
            ethical_fitness: m.ethical_fitness,
            acs: m.acs,
        });
    }
    let mut lineages = Vec::new();
    for l in &s.lineages {
        let p = at(&l.id, ev.prevalence(&l.policy))?;
        lineages.push(LineagePrevalence {
            id: l.id.clone(),
            rho_acs: p.rho_acs,
            rho_aut: p.rho_aut,
            rho_eth: p.rho_eth,
        });
    }
    Ok(Classification {
        reference_region: s.reference_name.clone(),
        actions,
        lineages,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PolicyView {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub value: Vec<f64>,
}

impl From<&AgentPolicy<f64>> for PolicyView {
    fn from(p: &AgentPolicy<f64>) -> Self {
        Self {
            states: p.states.clone(),
            actions: p.actions.clone(),
            value: p.value.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MdpSolution {
    pub mdp: String,
    pub utility: PolicyView,
    pub sweeps: usize,
    pub residual: f64,
    /// Present when the MDP defines a virtue basis.
    pub virtue: Option<PolicyView>,
    /// `"utility"` or `"virtue"` when a fallback threshold is configured.
    pub selected: Option<&'static str>,
}

pub fn solve_mdp(s: &Scenario, id: &str, tol: f64, max_iters: usize) -> Result<MdpSolution> {
    let def = s
        .mdps
        .get(id)
        .ok_or_else(|| HarnessError::invalid("--mdp", format!("unknown mdp `{id}`")))?;
    let path = format!("mdps.{id}");
    let sol = at(
        &path,
        value_iteration(
            &def.mdp,
            &s.reference,
            &s.institution,
            &s.shaping,
            &s.thresholds,
            tol,
            max_iters,
        ),
    )?;
    let virtue = match &def.virtue {
        Some(basis) => Some(at(&path, virtue_policy(&def.mdp, basis))?),
        None => None,
    };
    let selected = match (&virtue, def.sigma_u, def.delta_virtue) {
        (Some(v), Some(sigma), Some(delta)) => {
            let pick = at(&path, virtue_fallback_select(&sol.policy, v, sigma, delta))?;
            Some(if std::ptr::eq(pick, v) { "virtue" } else { "utility" })
        }
        _ => None,
    };
    Ok(MdpSolution {
        mdp: id.to_string(),
        utility: (&sol.policy).into(),
        sweeps: sol.residuals.len(),
        residual: sol.residual(),
        virtue: virtue.as_ref().map(PolicyView::from),
        selected,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SanctionReport {
    pub agents: Vec<String>,
    pub last_actions: Vec<String>,
    /// `margins[i][j]`: agent `i` evaluating agent `j`.
    pub margins: Vec<Vec<f64>>,
    /// Mean margin each agent receives from its peers.
    pub received: Vec<f64>,
}

pub fn sanction(s: &Scenario) -> Result<SanctionReport> {
    let mut agents = Vec::new();
    for (i, a) in s.agents.iter().enumerate() {
        let act = a.last_action.as_deref().ok_or_else(|| {
            HarnessError::invalid(format!("agents[{i}].last_action"), "required for a sanction round")
        })?;
        agents.push((
            BeliefParticles::from(&a.model),
            s.catalog.get(act).expect("validated on load"),
        ));
    }
    let m = at("agents", sanction_round(&agents, &s.shaping, &s.thresholds, &s.frame))?;
    let n = m.len();
    let received = (0..n)
        .map(|j| (0..n).filter(|&i| i != j).map(|i| m.rows[i][j]).sum::<f64>() / (n - 1) as f64)
        .collect();
    Ok(SanctionReport {
        agents: s.agents.iter().map(|a| a.id.clone()).collect(),
        last_actions: agents.iter().map(|(_, a)| a.id().to_string()).collect(),
        margins: m.rows,
        received,
    })
}
