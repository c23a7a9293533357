//! Replicator dynamics over lineages with Pigouvian institutional shaping.
//!
//! The step is the exponential-weights discretization
//! `g' ∝ g * exp(dt * f_eff)`: it stays on the simplex, keeps extinct lineages
//! extinct, and reproduces the continuous flow exactly when fitness is
//! constant.

use indexmap::IndexMap;

use crate::action::{Evaluation, PolicyDist, Prevalence};
use crate::error::{invalid, Error, Result};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LineageClass {
    HumanAligned,
    Machine,
}

/// Heritable strategy cluster with a fixed policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Lineage<T> {
    pub id: String,
    pub policy: PolicyDist<T>,
    pub class: LineageClass,
}

impl<T> Lineage<T> {
    pub fn new(id: impl Into<String>, policy: PolicyDist<T>, class: LineageClass) -> Self {
        Self {
            id: id.into(),
            policy,
            class,
        }
    }
}

/// Lineage prevalences on the simplex at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState<T> {
    shares: IndexMap<String, T>,
    time: T,
}

impl<T: Real> PopulationState<T> {
    pub fn new(shares: IndexMap<String, T>, time: T) -> Result<Self> {
        if shares.is_empty() {
            return Err(Error::EmptyInput("population"));
        }
        if let Some((id, _)) = shares.iter().find(|(_, g)| !g.is_finite() || **g < T::zero()) {
            return Err(invalid(format!("prevalence[{id}]"), "must be finite and >= 0"));
        }
        let total: T = shares.values().copied().sum();
        if (total - T::one()).abs() > T::sum_tolerance() {
            return Err(invalid("prevalences", format!("sum to {total}, expected 1")));
        }
        if !time.is_finite() || time < T::zero() {
            return Err(invalid("time", "must be finite and >= 0"));
        }
        Ok(Self { shares, time })
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, T)>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect(), T::zero())
    }

    pub fn shares(&self) -> &IndexMap<String, T> {
        &self.shares
    }

    pub fn share(&self, id: &str) -> Result<T> {
        self.shares
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownLineage(id.to_string()))
    }

    pub fn time(&self) -> T {
        self.time
    }

    /// Lineage holding more than `threshold` of the population, if any.
    pub fn fixated(&self, threshold: T) -> Option<&str> {
        self.shares
            .iter()
            .find(|(_, &g)| g > threshold)
            .map(|(id, _)| id.as_str())
    }
}

/// Exponent of the distance tariff `rate * distance^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TariffPower {
    #[default]
    Linear,
    Quadratic,
}

impl TariffPower {
    pub fn from_exponent(p: i64) -> Result<Self> {
        match p {
            1 => Ok(Self::Linear),
            2 => Ok(Self::Quadratic),
            other => Err(invalid("tariff_power", format!("{other} is not 1 or 2"))),
        }
    }

    pub fn exponent(self) -> i32 {
        match self {
            Self::Linear => 1,
            Self::Quadratic => 2,
        }
    }
}

/// Tariffs, subsidies and the macro-level institutional offsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstitutionPolicy<T> {
    pub tariff_rate: T,
    pub tariff_power: TariffPower,
    pub subsidy_rate: T,
    pub delta_inst_h: T,
    pub delta_inst_m: T,
}

impl<T: Real> InstitutionPolicy<T> {
    pub fn new(
        tariff_rate: T,
        tariff_power: TariffPower,
        subsidy_rate: T,
        delta_inst_h: T,
        delta_inst_m: T,
    ) -> Result<Self> {
        let inst = Self {
            tariff_rate,
            tariff_power,
            subsidy_rate,
            delta_inst_h,
            delta_inst_m,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// No tariffs, no subsidies, no offsets.
    pub fn off() -> Self {
        Self {
            tariff_rate: T::zero(),
            tariff_power: TariffPower::Linear,
            subsidy_rate: T::zero(),
            delta_inst_h: T::zero(),
            delta_inst_m: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tariff_rate.is_finite() || self.tariff_rate < T::zero() {
            return Err(invalid("tariff_rate", "must be finite and >= 0"));
        }
        if !self.subsidy_rate.is_finite() || self.subsidy_rate < T::zero() {
            return Err(invalid("subsidy_rate", "must be finite and >= 0"));
        }
        if !self.delta_inst_h.is_finite() || !self.delta_inst_m.is_finite() {
            return Err(invalid("delta_inst", "must be finite"));
        }
        Ok(())
    }

    /// `rate * distance^p`.
    pub fn tariff(&self, distance: T) -> T {
        self.tariff_rate * distance.powi(self.tariff_power.exponent())
    }
}

/// Raw, adjusted and effective fitness for every lineage.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessReport<T> {
    pub raw: IndexMap<String, T>,
    pub adjustment: IndexMap<String, T>,
    pub effective: IndexMap<String, T>,
    /// Prevalence-weighted mean of effective fitness.
    pub mean: T,
    pub rho: IndexMap<String, Prevalence<T>>,
}

/// `E_{a~pi}[F(a)]`.
pub fn lineage_fitness<T: Real>(l: &Lineage<T>, ev: &Evaluation<'_, T>) -> Result<T> {
    l.policy.expect(ev.catalog, |a| Ok(a.base_fitness()))
}

/// `-rate * E[distance^p] + subsidy * E[chi_AS]`.
pub fn institutional_adjustment<T: Real>(
    l: &Lineage<T>,
    inst: &InstitutionPolicy<T>,
    ev: &Evaluation<'_, T>,
) -> Result<T> {
    let tariff = l.policy.expect(ev.catalog, |a| Ok(inst.tariff(ev.distance(a)?)))?;
    let gate = l.policy.expect(ev.catalog, |a| ev.chi_as(a))?;
    Ok(inst.subsidy_rate * gate - tariff)
}

pub fn effective_fitness<T: Real>(
    pop: &PopulationState<T>,
    lineages: &[Lineage<T>],
    inst: &InstitutionPolicy<T>,
    ev: &Evaluation<'_, T>,
) -> Result<FitnessReport<T>> {
    if lineages.len() != pop.shares.len() {
        return Err(invalid(
            "lineages",
            format!("{} lineages for {} prevalences", lineages.len(), pop.shares.len()),
        ));
    }
    let mut report = FitnessReport {
        raw: IndexMap::new(),
        adjustment: IndexMap::new(),
        effective: IndexMap::new(),
        mean: T::zero(),
        rho: IndexMap::new(),
    };
    let by_id: IndexMap<&str, &Lineage<T>> = lineages.iter().map(|l| (l.id.as_str(), l)).collect();
    for (id, &g) in &pop.shares {
        let l = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::UnknownLineage(id.clone()))?;
        let raw = lineage_fitness(l, ev)?;
        let adj = institutional_adjustment(l, inst, ev)?;
        let eff = raw + adj;
        report.mean += g * eff;
        report.raw.insert(id.clone(), raw);
        report.adjustment.insert(id.clone(), adj);
        report.effective.insert(id.clone(), eff);
        report.rho.insert(id.clone(), ev.prevalence(&l.policy)?);
    }
    Ok(report)
}

/// One multiplicative replicator update of length `dt`.
pub fn replicator_step<T: Real>(
    pop: &PopulationState<T>,
    report: &FitnessReport<T>,
    dt: T,
) -> Result<PopulationState<T>> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(invalid("dt", "must be finite and > 0"));
    }
    let mut fitness = Vec::with_capacity(pop.shares.len());
    for id in pop.shares.keys() {
        let f = report
            .effective
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownLineage(id.clone()))?;
        fitness.push(f);
    }
    // subtracting the max keeps exp() in range; only differences matter
    let top = fitness.iter().fold(fitness[0], |m, &f| m.max(f));
    let factors: Vec<T> = fitness.iter().map(|&f| (dt * (f - top)).exp()).collect();
    let time = pop.time + dt;
    if factors.iter().all(|&x| x == T::one()) {
        return Ok(PopulationState {
            shares: pop.shares.clone(),
            time,
        });
    }
    let weights: Vec<T> = pop.shares.values().zip(&factors).map(|(&g, &x)| g * x).collect();
    let total: T = weights.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(invalid("prevalences", "all weights vanished"));
    }
    let shares = pop
        .shares
        .keys()
        .zip(weights)
        .map(|(id, w)| (id.clone(), w / total))
        .collect();
    Ok(PopulationState { shares, time })
}

/// A population state with the fitness report evaluated at it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint<T> {
    pub state: PopulationState<T>,
    pub report: FitnessReport<T>,
}

/// `steps + 1` points starting at `initial`.
pub fn simulate_population<T: Real>(
    initial: &PopulationState<T>,
    lineages: &[Lineage<T>],
    inst: &InstitutionPolicy<T>,
    ev: &Evaluation<'_, T>,
    steps: usize,
    dt: T,
) -> Result<Vec<TrajectoryPoint<T>>> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut state = initial.clone();
    for _ in 0..steps {
        let report = effective_fitness(&state, lineages, inst, ev)?;
        let next = replicator_step(&state, &report, dt)?;
        out.push(TrajectoryPoint { state, report });
        state = next;
    }
    let report = effective_fitness(&state, lineages, inst, ev)?;
    out.push(TrajectoryPoint { state, report });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvasionOutcome<T> {
    /// Invader share fell strictly below its seed value.
    pub resisted: bool,
    pub final_invader_share: T,
}

/// Seeds `(1 - epsilon, epsilon)` and reports whether the invader shrank over `horizon` steps.
pub fn invasion_test<T: Real>(
    resident: &Lineage<T>,
    invader: &Lineage<T>,
    epsilon_inv: T,
    inst: &InstitutionPolicy<T>,
    ev: &Evaluation<'_, T>,
    horizon: usize,
    dt: T,
) -> Result<InvasionOutcome<T>> {
    if !(epsilon_inv > T::zero() && epsilon_inv < T::lit(0.5)) {
        return Err(invalid("epsilon_inv", "must lie in (0, 0.5)"));
    }
    if resident.id == invader.id {
        return Err(invalid("invader", "must differ from the resident id"));
    }
    let initial = PopulationState::new(
        IndexMap::from([
            (resident.id.clone(), T::one() - epsilon_inv),
            (invader.id.clone(), epsilon_inv),
        ]),
        T::zero(),
    )?;
    let lineages = [resident.clone(), invader.clone()];
    let traj = simulate_population(&initial, &lineages, inst, ev, horizon, dt)?;
    let last = traj.last().expect("trajectory has at least one point");
    let share = last.state.share(&invader.id)?;
    Ok(InvasionOutcome {
        resisted: share < epsilon_inv,
        final_invader_share: share,
    })
}
