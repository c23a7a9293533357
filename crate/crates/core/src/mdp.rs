//! Tabular agent MDPs under Pigouvian reward shaping, peer sanctioning and a
//! virtue-based fallback controller.

use std::collections::{BTreeMap, HashMap};

use crate::action::ethical_eval;
use crate::action::{chi_as, power_index, ActionCatalog, ActionSpec, ContextFrame, Evaluation, Thresholds};
use crate::error::{check_dim, invalid, Error, Result};
use crate::geometry::{distance_to_region, virtue_decompose, AgentMoralModel, MoralRegion, VirtueBasis};
use crate::num::Real;
use crate::population::InstitutionPolicy;

/// One `(state, action)` entry of an MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpChoice<T> {
    pub state: String,
    pub action: String,
    pub r_env: T,
    pub transition: Vec<(String, T)>,
}

#[derive(Debug, Clone, PartialEq)]
struct Choice<T> {
    action: String,
    r_env: T,
    next: Vec<(usize, T)>,
}

/// Finite MDP whose actions come from an [`ActionCatalog`]; per-state choices
/// are kept sorted by action id so ties resolve to the lowest id.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp<T> {
    states: Vec<String>,
    choices: Vec<Vec<Choice<T>>>,
    catalog: ActionCatalog<T>,
    discount: T,
    influence: Vec<T>,
}

impl<T: Real> TabularMdp<T> {
    pub fn new(
        states: Vec<String>,
        catalog: ActionCatalog<T>,
        entries: Vec<MdpChoice<T>>,
        discount: T,
        influence: Vec<T>,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::EmptyInput("mdp states"));
        }
        if !(discount >= T::zero() && discount < T::one()) {
            return Err(invalid("gamma", "must lie in [0, 1)"));
        }
        let index: HashMap<&str, usize> = states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        if index.len() != states.len() {
            return Err(invalid("states", "duplicate state id"));
        }
        let mut per_state: Vec<BTreeMap<String, Choice<T>>> = vec![BTreeMap::new(); states.len()];
        for e in entries {
            let s = *index
                .get(e.state.as_str())
                .ok_or_else(|| Error::UnknownState(e.state.clone()))?;
            catalog.get(&e.action)?;
            if !e.r_env.is_finite() {
                return Err(invalid(format!("r_env[{}][{}]", e.state, e.action), "must be finite"));
            }
            let mut next = Vec::with_capacity(e.transition.len());
            let mut total = T::zero();
            for (target, p) in &e.transition {
                let t = *index
                    .get(target.as_str())
                    .ok_or_else(|| Error::UnknownState(target.clone()))?;
                if !p.is_finite() || *p < T::zero() {
                    return Err(invalid(
                        format!("transition[{}][{}][{target}]", e.state, e.action),
                        "probability must be >= 0",
                    ));
                }
                total += *p;
                next.push((t, *p));
            }
            if (total - T::one()).abs() > T::sum_tolerance() {
                return Err(invalid(
                    format!("transition[{}][{}]", e.state, e.action),
                    format!("row sums to {total}, expected 1"),
                ));
            }
            let key = e.action.clone();
            let dup = per_state[s].insert(
                key,
                Choice {
                    action: e.action.clone(),
                    r_env: e.r_env,
                    next,
                },
            );
            if dup.is_some() {
                return Err(invalid(
                    format!("actions_by_state[{}]", e.state),
                    format!("duplicate action {}", e.action),
                ));
            }
        }
        if let Some(i) = per_state.iter().position(BTreeMap::is_empty) {
            return Err(invalid(
                format!("actions_by_state[{}]", states[i]),
                "state has no actions",
            ));
        }
        Ok(Self {
            states,
            choices: per_state.into_iter().map(|m| m.into_values().collect()).collect(),
            catalog,
            discount,
            influence,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn discount(&self) -> T {
        self.discount
    }

    pub fn catalog(&self) -> &ActionCatalog<T> {
        &self.catalog
    }

    pub fn frame(&self, state: usize) -> ContextFrame<T> {
        ContextFrame::new(self.states[state].clone(), self.influence.clone())
    }

    /// Action ids available in `state`, ascending.
    pub fn actions(&self, state: usize) -> impl Iterator<Item = &str> {
        self.choices[state].iter().map(|c| c.action.as_str())
    }

    pub fn state_index(&self, id: &str) -> Result<usize> {
        self.states
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| Error::UnknownState(id.to_string()))
    }

    fn choice(&self, state: usize, action: &str) -> Result<&Choice<T>> {
        self.choices[state].iter().find(|c| c.action == action).ok_or_else(|| {
            invalid(
                format!("({}, {action})", self.states[state]),
                "action not available in state",
            )
        })
    }

    pub fn r_env(&self, state: usize, action: &str) -> Result<T> {
        Ok(self.choice(state, action)?.r_env)
    }

    /// Successor distribution as `(state index, probability)`.
    pub fn transition(&self, state: usize, action: &str) -> Result<&[(usize, T)]> {
        Ok(&self.choice(state, action)?.next)
    }
}

/// How a peer action's distance from the observer's region enters the margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    /// `-g`: larger distance lowers the margin.
    #[default]
    NegDistance,
    /// `+g`, the unsigned form.
    RawDistance,
    /// `exp(-g)`.
    ExpNegDistance,
}

impl EvalMode {
    pub fn apply<T: Real>(self, distance: T) -> T {
        match self {
            Self::NegDistance => -distance,
            Self::RawDistance => distance,
            Self::ExpNegDistance => (-distance).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapingWeights<T> {
    pub alpha_env: T,
    pub alpha_m: T,
    pub alpha_as: T,
    pub alpha_b: T,
    pub alpha_h: T,
    pub eta_couple: T,
    pub eval_mode: EvalMode,
}

impl<T: Real> ShapingWeights<T> {
    pub fn unit() -> Self {
        Self {
            alpha_env: T::one(),
            alpha_m: T::one(),
            alpha_as: T::one(),
            alpha_b: T::one(),
            alpha_h: T::one(),
            eta_couple: T::zero(),
            eval_mode: EvalMode::NegDistance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha_env", self.alpha_env),
            ("alpha_m", self.alpha_m),
            ("alpha_as", self.alpha_as),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        for (name, v) in [
            ("alpha_b", self.alpha_b),
            ("alpha_h", self.alpha_h),
            ("eta_couple", self.eta_couple),
        ] {
            if !v.is_finite() || v < T::zero() {
                return Err(invalid(name, "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// `alpha_env r_env - alpha_M tariff(g) + alpha_AS subsidy chi_AS`.
pub fn pig_reward<T: Real>(
    mdp: &TabularMdp<T>,
    state: usize,
    action: &str,
    region: &MoralRegion<T>,
    inst: &InstitutionPolicy<T>,
    w: &ShapingWeights<T>,
    th: &Thresholds<T>,
) -> Result<T> {
    let r_env = mdp.r_env(state, action)?;
    let frame = mdp.frame(state);
    let ev = Evaluation::new(&mdp.catalog, &frame, region, th);
    let spec = mdp.catalog.get(action)?;
    let tariff = inst.tariff(ev.distance(spec)?);
    let gate = ev.chi_as(spec)?;
    Ok(w.alpha_env * r_env - w.alpha_m * tariff + w.alpha_as * inst.subsidy_rate * gate)
}

/// Deterministic policy with the value (or score) it was selected under.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentPolicy<T> {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub value: Vec<T>,
    /// Epistemic uncertainty reported with the policy; supplied, not estimated.
    pub uncertainty: T,
    pub virtue_threshold: T,
}

impl<T: Real> AgentPolicy<T> {
    pub fn new(states: Vec<String>, actions: Vec<String>, value: Vec<T>) -> Result<Self> {
        check_dim("policy actions", states.len(), actions.len())?;
        check_dim("policy values", states.len(), value.len())?;
        Ok(Self {
            states,
            actions,
            value,
            uncertainty: T::zero(),
            virtue_threshold: T::zero(),
        })
    }

    pub fn with_uncertainty(mut self, sigma_u: T, delta_virtue: T) -> Result<Self> {
        if !(sigma_u >= T::zero()) || !(delta_virtue >= T::zero()) {
            return Err(invalid("uncertainty", "sigma_u and delta_virtue must be >= 0"));
        }
        self.uncertainty = sigma_u;
        self.virtue_threshold = delta_virtue;
        Ok(self)
    }

    pub fn action(&self, state: &str) -> Option<&str> {
        self.states
            .iter()
            .position(|s| s == state)
            .map(|i| self.actions[i].as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueSolution<T> {
    pub policy: AgentPolicy<T>,
    /// Sup-norm Bellman residual of every sweep, last one below tolerance.
    pub residuals: Vec<T>,
}

impl<T: Real> ValueSolution<T> {
    pub fn residual(&self) -> T {
        *self.residuals.last().expect("at least one sweep")
    }
}

/// Bellman optimality iteration on the shaped reward, greedy extraction with
/// lowest-id tie-breaking.
#[allow(clippy::too_many_arguments)]
pub fn value_iteration<T: Real>(
    mdp: &TabularMdp<T>,
    region: &MoralRegion<T>,
    inst: &InstitutionPolicy<T>,
    w: &ShapingWeights<T>,
    th: &Thresholds<T>,
    tol: T,
    max_iters: usize,
) -> Result<ValueSolution<T>> {
    if !(tol > T::zero()) {
        return Err(invalid("tol", "must be > 0"));
    }
    let rewards: Vec<Vec<T>> = (0..mdp.states.len())
        .map(|s| {
            mdp.choices[s]
                .iter()
                .map(|c| pig_reward(mdp, s, &c.action, region, inst, w, th))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let n = mdp.states.len();
    let mut value = vec![T::zero(); n];
    let mut residuals = Vec::new();
    for _ in 0..max_iters {
        let mut next = vec![T::zero(); n];
        let mut best = vec![0usize; n];
        for s in 0..n {
            let mut top: Option<T> = None;
            for (c, choice) in mdp.choices[s].iter().enumerate() {
                let cont: T = choice.next.iter().map(|&(t, p)| p * value[t]).sum();
                let q = rewards[s][c] + mdp.discount * cont;
                if top.is_none_or(|m| q > m) {
                    top = Some(q);
                    best[s] = c;
                }
            }
            next[s] = top.expect("every state has an action");
        }
        let residual = value
            .iter()
            .zip(&next)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
        residuals.push(residual);
        if residual < tol {
            let actions = best
                .iter()
                .enumerate()
                .map(|(s, &c)| mdp.choices[s][c].action.clone())
                .collect();
            return Ok(ValueSolution {
                policy: AgentPolicy::new(mdp.states.clone(), actions, value)?,
                residuals,
            });
        }
        value = next;
    }
    Err(Error::NotConverged {
        iterations: max_iters,
        residual: residuals.last().map_or(f64::INFINITY, |r| r.to_f64_lossy()),
    })
}

/// Weighted particle belief over an agent's moral region.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefParticles<T> {
    samples: Vec<(MoralRegion<T>, T)>,
}

impl<T: Real> BeliefParticles<T> {
    pub fn new(samples: Vec<(MoralRegion<T>, T)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("belief particles"));
        }
        let dim = samples[0].0.dim();
        let mut total = T::zero();
        for (r, wt) in &samples {
            check_dim("belief particles", dim, r.dim())?;
            if !wt.is_finite() || *wt < T::zero() {
                return Err(invalid("belief weight", "must be >= 0"));
            }
            total += *wt;
        }
        if (total - T::one()).abs() > T::sum_tolerance() {
            return Err(invalid(
                "belief particles",
                format!("weights sum to {total}, expected 1"),
            ));
        }
        Ok(Self { samples })
    }

    pub fn single(region: MoralRegion<T>) -> Self {
        Self {
            samples: vec![(region, T::one())],
        }
    }

    pub fn samples(&self) -> &[(MoralRegion<T>, T)] {
        &self.samples
    }
}

impl<T: Real> From<&AgentMoralModel<T>> for BeliefParticles<T> {
    fn from(m: &AgentMoralModel<T>) -> Self {
        Self {
            samples: m.particles().to_vec(),
        }
    }
}

/// Mean over `peer_actions` of the belief-expected margin
/// `alpha_M e(g) - alpha_B beta + alpha_H chi_AS`.
pub fn peer_margin<T: Real>(
    observer: &BeliefParticles<T>,
    peer_actions: &[&ActionSpec<T>],
    w: &ShapingWeights<T>,
    th: &Thresholds<T>,
    frame: &ContextFrame<T>,
) -> Result<T> {
    if peer_actions.is_empty() {
        return Err(Error::EmptyInput("peer actions"));
    }
    let mut total = T::zero();
    for action in peer_actions {
        let beta = power_index(action, th);
        let eps = ethical_eval(frame, action);
        let mut expected = T::zero();
        for (region, weight) in &observer.samples {
            let g = distance_to_region(eps, region)?;
            let gate = chi_as(frame, action, region, th)?;
            expected += *weight * (w.alpha_m * w.eval_mode.apply(g) - w.alpha_b * beta + w.alpha_h * gate);
        }
        total += expected;
    }
    Ok(total / T::from_count(peer_actions.len()))
}

/// `m[i][j]`: agent `i`'s margin on agent `j`'s last action; zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginMatrix<T> {
    pub rows: Vec<Vec<T>>,
}

impl<T: Real> MarginMatrix<T> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row `i` without the diagonal entry.
    pub fn peer_row(&self, i: usize) -> Vec<T> {
        self.rows[i]
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, &m)| m)
            .collect()
    }
}

pub fn sanction_round<T: Real>(
    agents: &[(BeliefParticles<T>, &ActionSpec<T>)],
    w: &ShapingWeights<T>,
    th: &Thresholds<T>,
    frame: &ContextFrame<T>,
) -> Result<MarginMatrix<T>> {
    if agents.len() < 2 {
        return Err(invalid("agents", "a sanction round needs at least 2 agents"));
    }
    let n = agents.len();
    let mut rows = vec![vec![T::zero(); n]; n];
    for (i, (belief, _)) in agents.iter().enumerate() {
        for (j, (_, action)) in agents.iter().enumerate() {
            if i != j {
                rows[i][j] = peer_margin(belief, &[*action], w, th, frame)?;
            }
        }
    }
    Ok(MarginMatrix { rows })
}

/// `base + eta * mean(margins)`; an empty row adds nothing.
pub fn augmented_reward<T: Real>(base: T, margins_row: &[T], w: &ShapingWeights<T>) -> T {
    if margins_row.is_empty() {
        return base;
    }
    let mean = margins_row.iter().copied().sum::<T>() / T::from_count(margins_row.len());
    base + w.eta_couple * mean
}

/// Hands control to the virtue policy when uncertainty strictly exceeds the threshold.
pub fn virtue_fallback_select<'a, T: Real>(
    utility_policy: &'a AgentPolicy<T>,
    virtue_policy: &'a AgentPolicy<T>,
    sigma_u: T,
    delta_virtue: T,
) -> Result<&'a AgentPolicy<T>> {
    if utility_policy.states != virtue_policy.states {
        return Err(Error::StateSetMismatch);
    }
    Ok(if sigma_u > delta_virtue {
        virtue_policy
    } else {
        utility_policy
    })
}

/// Per state, the action whose embedding has the highest weighted virtue profile.
pub fn virtue_policy<T: Real>(mdp: &TabularMdp<T>, basis: &VirtueBasis<T>) -> Result<AgentPolicy<T>> {
    check_dim("virtue basis", mdp.catalog.moral_dim(), basis.dim())?;
    let mut actions = Vec::with_capacity(mdp.states.len());
    let mut value = Vec::with_capacity(mdp.states.len());
    for s in 0..mdp.states.len() {
        let frame = mdp.frame(s);
        let mut best: Option<(T, &str)> = None;
        for choice in &mdp.choices[s] {
            let spec = mdp.catalog.get(&choice.action)?;
            let score = virtue_decompose(ethical_eval(&frame, spec), basis)?.weighted_score(basis);
            if best.is_none_or(|(b, _)| score > b) {
                best = Some((score, choice.action.as_str()));
            }
        }
        let (score, id) = best.expect("every state has an action");
        actions.push(id.to_string());
        value.push(score);
    }
    AgentPolicy::new(mdp.states.clone(), actions, value)
}
