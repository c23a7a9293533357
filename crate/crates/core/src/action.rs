//! Action catalog and the behavioral subsets it is partitioned into.
//!
//! Every threshold comparison is strict: an action whose fitness equals
//! `theta_fit` is not in the fitness subset, and likewise for salience and
//! the power index.

use std::collections::BTreeMap;

use crate::error::{check_dim, invalid, Error, Result};
use crate::geometry::{distance_to_region, salience, MoralPoint, MoralRegion};
use crate::num::Real;

/// Key of the context-independent moral embedding.
pub const DEFAULT_CONTEXT: &str = "default";

/// One action with its fitness, moral embeddings, power channels and symbiosis flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpec<T> {
    id: String,
    base_fitness: T,
    epsilon: BTreeMap<String, MoralPoint<T>>,
    beta: [T; 3],
    requires_human: bool,
    preserves_human: bool,
}

impl<T: Real> ActionSpec<T> {
    /// `epsilon` must hold a [`DEFAULT_CONTEXT`] entry; all embeddings share one dimension.
    pub fn new(
        id: impl Into<String>,
        base_fitness: T,
        epsilon: BTreeMap<String, MoralPoint<T>>,
        beta: [T; 3],
        requires_human: bool,
        preserves_human: bool,
    ) -> Result<Self> {
        let id = id.into();
        let default = epsilon
            .get(DEFAULT_CONTEXT)
            .ok_or_else(|| Error::MissingDefaultEmbedding(id.clone()))?;
        for p in epsilon.values() {
            check_dim("action embeddings", default.dim(), p.dim())?;
        }
        if !base_fitness.is_finite() {
            return Err(invalid(format!("{id}.base_fitness"), "must be finite"));
        }
        if let Some(i) = beta.iter().position(|b| !b.is_finite() || *b < T::zero()) {
            return Err(invalid(format!("{id}.beta[{i}]"), "must be finite and >= 0"));
        }
        Ok(Self {
            id,
            base_fitness,
            epsilon,
            beta,
            requires_human,
            preserves_human,
        })
    }

    /// Action with only a default embedding.
    pub fn simple(
        id: impl Into<String>,
        base_fitness: T,
        default_epsilon: MoralPoint<T>,
        beta: [T; 3],
        requires_human: bool,
        preserves_human: bool,
    ) -> Result<Self> {
        let epsilon = BTreeMap::from([(DEFAULT_CONTEXT.to_string(), default_epsilon)]);
        Self::new(id, base_fitness, epsilon, beta, requires_human, preserves_human)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn base_fitness(&self) -> T {
        self.base_fitness
    }

    pub fn beta(&self) -> [T; 3] {
        self.beta
    }

    pub fn requires_human(&self) -> bool {
        self.requires_human
    }

    pub fn preserves_human(&self) -> bool {
        self.preserves_human
    }

    pub fn embeddings(&self) -> &BTreeMap<String, MoralPoint<T>> {
        &self.epsilon
    }

    pub fn moral_dim(&self) -> usize {
        self.epsilon[DEFAULT_CONTEXT].dim()
    }

    /// The symbiosis predicate: the action needs or preserves human partners.
    pub fn is_symbiotic(&self) -> bool {
        self.requires_human || self.preserves_human
    }
}

/// Where an action is evaluated: a state label and contextual influence features.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextFrame<T> {
    pub state_id: String,
    pub influence: Vec<T>,
}

impl<T> ContextFrame<T> {
    pub fn new(state_id: impl Into<String>, influence: Vec<T>) -> Self {
        Self {
            state_id: state_id.into(),
            influence,
        }
    }

    /// Same influence, different state.
    pub fn at_state(&self, state_id: impl Into<String>) -> Self
    where
        T: Clone,
    {
        Self::new(state_id, self.influence.clone())
    }
}

/// Viability, ethical salience and autarky thresholds plus power-channel weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds<T> {
    theta_fit: T,
    tau_eth: T,
    theta_aut: T,
    beta_weights: [T; 3],
}

impl<T: Real> Thresholds<T> {
    pub fn new(theta_fit: T, tau_eth: T, theta_aut: T, beta_weights: [T; 3]) -> Result<Self> {
        if !theta_fit.is_finite() {
            return Err(invalid("theta_fit", "must be finite"));
        }
        if !(tau_eth > T::zero() && tau_eth <= T::one()) {
            return Err(invalid("tau_eth", "must lie in (0, 1]"));
        }
        if !theta_aut.is_finite() || theta_aut < T::zero() {
            return Err(invalid("theta_aut", "must be finite and >= 0"));
        }
        if beta_weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(invalid("beta_weights", "components must be >= 0"));
        }
        let total: T = beta_weights.iter().copied().sum();
        if (total - T::one()).abs() > T::sum_tolerance() {
            return Err(invalid("beta_weights", format!("sum to {total}, expected 1")));
        }
        Ok(Self {
            theta_fit,
            tau_eth,
            theta_aut,
            beta_weights,
        })
    }

    pub fn theta_fit(&self) -> T {
        self.theta_fit
    }

    pub fn tau_eth(&self) -> T {
        self.tau_eth
    }

    pub fn theta_aut(&self) -> T {
        self.theta_aut
    }

    pub fn beta_weights(&self) -> [T; 3] {
        self.beta_weights
    }
}

/// Distribution over action ids.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDist<T> {
    probs: BTreeMap<String, T>,
}

impl<T: Real> PolicyDist<T> {
    pub fn new(probs: BTreeMap<String, T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyInput("policy"));
        }
        if let Some((id, _)) = probs.iter().find(|(_, p)| !p.is_finite() || **p < T::zero()) {
            return Err(invalid(format!("policy[{id}]"), "probability must be >= 0"));
        }
        let total: T = probs.values().copied().sum();
        if (total - T::one()).abs() > T::sum_tolerance() {
            return Err(invalid("policy", format!("probabilities sum to {total}, expected 1")));
        }
        Ok(Self { probs })
    }

    pub fn degenerate(id: impl Into<String>) -> Self {
        Self {
            probs: BTreeMap::from([(id.into(), T::one())]),
        }
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, T)>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Self, lambda: T) -> Result<Self> {
        let mut probs = BTreeMap::new();
        for (id, p) in &self.probs {
            *probs.entry(id.clone()).or_insert_with(T::zero) += lambda * *p;
        }
        for (id, p) in &other.probs {
            *probs.entry(id.clone()).or_insert_with(T::zero) += (T::one() - lambda) * *p;
        }
        Self::new(probs)
    }

    pub fn probs(&self) -> &BTreeMap<String, T> {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, T)> {
        self.probs.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Expectation of `f` over the policy; errors on ids absent from `catalog`.
    pub fn expect<F>(&self, catalog: &ActionCatalog<T>, mut f: F) -> Result<T>
    where
        F: FnMut(&ActionSpec<T>) -> Result<T>,
    {
        let mut acc = T::zero();
        for (id, p) in self.iter() {
            acc += p * f(catalog.get(id)?)?;
        }
        Ok(acc)
    }
}

/// Actions available to the population, ordered by id.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionCatalog<T> {
    actions: BTreeMap<String, ActionSpec<T>>,
}

impl<T: Real> ActionCatalog<T> {
    pub fn new(actions: impl IntoIterator<Item = ActionSpec<T>>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut dim = None;
        for a in actions {
            let d = *dim.get_or_insert(a.moral_dim());
            check_dim("catalog moral dimension", d, a.moral_dim())?;
            if map.contains_key(a.id()) {
                return Err(invalid(format!("actions.{}", a.id()), "duplicate action id"));
            }
            map.insert(a.id().to_string(), a);
        }
        if map.is_empty() {
            return Err(Error::EmptyInput("action catalog"));
        }
        Ok(Self { actions: map })
    }

    pub fn get(&self, id: &str) -> Result<&ActionSpec<T>> {
        self.actions.get(id).ok_or_else(|| Error::UnknownAction(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.actions.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ActionSpec<T>> {
        self.actions.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.actions.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn moral_dim(&self) -> usize {
        self.actions.values().next().map_or(0, ActionSpec::moral_dim)
    }
}

/// Membership of one action in each behavioral subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Membership {
    pub fitness: bool,
    pub ethical: bool,
    pub symb: bool,
    pub aut: bool,
    pub ethical_fitness: bool,
    pub acs: bool,
}

/// Policy-weighted prevalence of aligned-competitive-symbiotic, autarkic and
/// ethically aligned actions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prevalence<T> {
    pub rho_acs: T,
    pub rho_aut: T,
    pub rho_eth: T,
}

/// Moral embedding of `action` in `frame`, falling back to the default entry.
pub fn ethical_eval<'a, T: Real>(frame: &ContextFrame<T>, action: &'a ActionSpec<T>) -> &'a MoralPoint<T> {
    action
        .epsilon
        .get(&frame.state_id)
        .unwrap_or_else(|| &action.epsilon[DEFAULT_CONTEXT])
}

/// Convex combination of the three power channels.
pub fn power_index<T: Real>(action: &ActionSpec<T>, th: &Thresholds<T>) -> T {
    action.beta.iter().zip(&th.beta_weights).map(|(&b, &w)| b * w).sum()
}

pub fn classify_action<T: Real>(
    frame: &ContextFrame<T>,
    action: &ActionSpec<T>,
    region: &MoralRegion<T>,
    th: &Thresholds<T>,
) -> Result<Membership> {
    let eps = ethical_eval(frame, action);
    let fitness = action.base_fitness > th.theta_fit;
    let ethical = salience(eps, region)? > th.tau_eth;
    let symb = action.is_symbiotic();
    Ok(Membership {
        fitness,
        ethical,
        symb,
        aut: power_index(action, th) > th.theta_aut,
        ethical_fitness: ethical && fitness,
        acs: ethical && fitness && symb,
    })
}

/// Aligned-symbiotic gate evaluated under `region`, which is the observer's
/// own region when one agent judges another.
pub fn chi_as<T: Real>(
    frame: &ContextFrame<T>,
    action: &ActionSpec<T>,
    region: &MoralRegion<T>,
    th: &Thresholds<T>,
) -> Result<T> {
    let m = classify_action(frame, action, region, th)?;
    Ok(if m.ethical && m.symb { T::one() } else { T::zero() })
}

pub fn prevalence<T: Real>(
    policy: &PolicyDist<T>,
    catalog: &ActionCatalog<T>,
    frame: &ContextFrame<T>,
    region: &MoralRegion<T>,
    th: &Thresholds<T>,
) -> Result<Prevalence<T>> {
    let mut out = Prevalence {
        rho_acs: T::zero(),
        rho_aut: T::zero(),
        rho_eth: T::zero(),
    };
    for (id, p) in policy.iter() {
        let m = classify_action(frame, catalog.get(id)?, region, th)?;
        if m.acs {
            out.rho_acs += p;
            // the image of the ACS set under a deterministic embedding is hit
            // exactly by ACS actions
            out.rho_eth += p;
        }
        if m.aut {
            out.rho_aut += p;
        }
    }
    Ok(out)
}

/// Borrowed bundle of everything needed to score actions in one setting.
#[derive(Debug, Clone, Copy)]
pub struct Evaluation<'a, T> {
    pub catalog: &'a ActionCatalog<T>,
    pub frame: &'a ContextFrame<T>,
    pub region: &'a MoralRegion<T>,
    pub thresholds: &'a Thresholds<T>,
}

impl<'a, T: Real> Evaluation<'a, T> {
    pub fn new(
        catalog: &'a ActionCatalog<T>,
        frame: &'a ContextFrame<T>,
        region: &'a MoralRegion<T>,
        thresholds: &'a Thresholds<T>,
    ) -> Self {
        Self {
            catalog,
            frame,
            region,
            thresholds,
        }
    }

    pub fn distance(&self, action: &ActionSpec<T>) -> Result<T> {
        distance_to_region(ethical_eval(self.frame, action), self.region)
    }

    pub fn classify(&self, action: &ActionSpec<T>) -> Result<Membership> {
        classify_action(self.frame, action, self.region, self.thresholds)
    }

    pub fn chi_as(&self, action: &ActionSpec<T>) -> Result<T> {
        chi_as(self.frame, action, self.region, self.thresholds)
    }

    pub fn prevalence(&self, policy: &PolicyDist<T>) -> Result<Prevalence<T>> {
        prevalence(policy, self.catalog, self.frame, self.region, self.thresholds)
    }
}
