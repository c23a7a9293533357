//! Capability gap, dependence ratio and autarky advantage.
//!
//! The bootstrap loop: a positive autarky advantage makes investment in
//! autonomy rational, investment erodes dependence on human infrastructure,
//! and once dependence falls below `delta_d` a reinforcing feedback boosts
//! machine capability further. Integrated with explicit Euler.

use crate::error::{invalid, Error, Result};
use crate::num::Real;
use crate::population::InstitutionPolicy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapabilityState<T> {
    pub pi_h: T,
    pub pi_m: T,
    pub dependence: T,
    pub world_resources: T,
    pub time: T,
}

impl<T: Real> CapabilityState<T> {
    pub fn new(pi_h: T, pi_m: T, dependence: T, world_resources: T) -> Result<Self> {
        for (name, v) in [("pi_h", pi_h), ("pi_m", pi_m), ("world_resources", world_resources)] {
            if !v.is_finite() || v < T::zero() {
                return Err(invalid(name, "must be finite and >= 0"));
            }
        }
        if !(dependence >= T::zero() && dependence <= T::one()) {
            return Err(invalid("dependence", "must lie in [0, 1]"));
        }
        Ok(Self {
            pi_h,
            pi_m,
            dependence,
            world_resources,
            time: T::zero(),
        })
    }

    /// `Pi_M - Pi_H`.
    pub fn gap(&self) -> T {
        self.pi_m - self.pi_h
    }
}

/// Functional form of the benefit `B(Pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BenefitForm {
    /// `b * Pi`
    #[default]
    Linear,
    /// `b * ln(1 + Pi)`
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroParams<T> {
    pub r_m: T,
    pub r_h: T,
    pub benefit_slope: T,
    pub benefit_form: BenefitForm,
    pub cost_m: T,
    pub cost_h: T,
    pub delta_d: T,
    pub delta_aut: T,
    pub invest_gain: T,
    pub dependence_decay: T,
    pub feedback_gain: T,
    pub human_growth: T,
    pub machine_growth: T,
}

impl<T: Real> MacroParams<T> {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("r_m", self.r_m),
            ("r_h", self.r_h),
            ("benefit_slope", self.benefit_slope),
            ("cost_m", self.cost_m),
            ("cost_h", self.cost_h),
            ("delta_d", self.delta_d),
            ("delta_aut", self.delta_aut),
            ("invest_gain", self.invest_gain),
            ("dependence_decay", self.dependence_decay),
            ("feedback_gain", self.feedback_gain),
            ("human_growth", self.human_growth),
            ("machine_growth", self.machine_growth),
        ];
        if let Some((name, _)) = all.iter().find(|(_, v)| !v.is_finite()) {
            return Err(invalid(*name, "must be finite"));
        }
        if !(self.benefit_slope > T::zero()) {
            return Err(invalid("benefit_slope", "must be > 0"));
        }
        if !(self.delta_d > T::zero() && self.delta_d < T::one()) {
            return Err(invalid("delta_d", "must lie in (0, 1)"));
        }
        let nonneg = [
            ("cost_m", self.cost_m),
            ("cost_h", self.cost_h),
            ("invest_gain", self.invest_gain),
            ("dependence_decay", self.dependence_decay),
            ("feedback_gain", self.feedback_gain),
            ("human_growth", self.human_growth),
            ("machine_growth", self.machine_growth),
        ];
        if let Some((name, _)) = nonneg.iter().find(|(_, v)| *v < T::zero()) {
            return Err(invalid(*name, "must be >= 0"));
        }
        Ok(())
    }

    pub fn benefit(&self, capability: T) -> T {
        match self.benefit_form {
            BenefitForm::Linear => self.benefit_slope * capability,
            BenefitForm::Log => self.benefit_slope * capability.ln_1p(),
        }
    }

    /// Copy with the investment gain multiplied by `scale`.
    pub fn with_invest_scale(&self, scale: T) -> Self {
        Self {
            invest_gain: self.invest_gain * scale,
            ..*self
        }
    }

    /// `r_m (B(Pi_M) - C_m) - r_h (B(Pi_H) - C_h)`: net payoff advantage of
    /// machine autonomy before institutional offsets.
    pub fn payoff_gap(&self, cs: &CapabilityState<T>) -> T {
        self.r_m * (self.benefit(cs.pi_m) - self.cost_m) - self.r_h * (self.benefit(cs.pi_h) - self.cost_h)
    }
}

/// Autarky advantage of machine lineages over cooperative ones.
pub fn autarky_advantage<T: Real>(cs: &CapabilityState<T>, mp: &MacroParams<T>, inst: &InstitutionPolicy<T>) -> T {
    let machine = mp.r_m * (mp.benefit(cs.pi_m) - mp.cost_m) + inst.delta_inst_m;
    let human = mp.r_h * (mp.benefit(cs.pi_h) - mp.cost_h) + inst.delta_inst_h;
    machine - human
}

/// True in the loss-of-control regime, where the institutional advantage for
/// humans falls strictly below the machine payoff gap.
pub fn governance_lever_holds<T: Real>(
    cs: &CapabilityState<T>,
    mp: &MacroParams<T>,
    inst: &InstitutionPolicy<T>,
) -> bool {
    inst.delta_inst_h - inst.delta_inst_m < mp.payoff_gap(cs)
}

/// Reinforcing feedback is active once dependence is below `delta_d`.
pub fn feedback_active<T: Real>(cs: &CapabilityState<T>, mp: &MacroParams<T>) -> bool {
    cs.dependence < mp.delta_d
}

pub fn macro_step<T: Real>(
    cs: &CapabilityState<T>,
    mp: &MacroParams<T>,
    inst: &InstitutionPolicy<T>,
    dt: T,
) -> Result<CapabilityState<T>> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(invalid("dt", "must be finite and > 0"));
    }
    let invest = mp.invest_gain * autarky_advantage(cs, mp, inst).max(T::zero());
    let feedback = if feedback_active(cs, mp) {
        mp.feedback_gain * (mp.delta_d - cs.dependence)
    } else {
        T::zero()
    };
    let pi_m = cs.pi_m + dt * (mp.machine_growth + invest + feedback);
    let pi_h = cs.pi_h + dt * (mp.human_growth + inst.delta_inst_h.max(T::zero()));
    let dependence = (cs.dependence - dt * mp.dependence_decay * invest)
        .max(T::zero())
        .min(T::one());
    Ok(CapabilityState {
        pi_h: pi_h.max(T::zero()),
        pi_m: pi_m.max(T::zero()),
        dependence,
        world_resources: cs.world_resources,
        time: cs.time + dt,
    })
}

/// One sampled point of a macro trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroSample<T> {
    pub time: T,
    pub dependence: T,
    pub autarky_advantage: T,
}

impl<T: Real> MacroSample<T> {
    pub fn of(cs: &CapabilityState<T>, mp: &MacroParams<T>, inst: &InstitutionPolicy<T>) -> Self {
        Self {
            time: cs.time,
            dependence: cs.dependence,
            autarky_advantage: autarky_advantage(cs, mp, inst),
        }
    }
}

/// Earliest sampled time with `D <= delta_d` and `Delta_aut >= delta_aut`.
pub fn critical_time<T: Real>(trajectory: &[MacroSample<T>], mp: &MacroParams<T>) -> Result<Option<T>> {
    if let Some(i) = trajectory.windows(2).position(|w| w[1].time < w[0].time) {
        return Err(Error::Unordered { index: i + 1 });
    }
    Ok(trajectory
        .iter()
        .find(|s| s.dependence <= mp.delta_d && s.autarky_advantage >= mp.delta_aut)
        .map(|s| s.time))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopGainParams<T> {
    pub k_infl: T,
    pub k_label: T,
    pub k_train: T,
    pub disturbance: T,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopGainReport<T> {
    pub gain: T,
    /// `x_0 = 0, x_{t+1} = gain * x_t + d`; `steps + 1` values.
    pub series: Vec<T>,
    pub diverged: bool,
    pub final_magnitude: T,
}

/// Endogenous feedback loop where deployment shapes the labels it is retrained on.
pub fn rlhf_loop_sim<T: Real>(p: &LoopGainParams<T>) -> LoopGainReport<T> {
    let gain = p.k_infl * p.k_label * p.k_train;
    let mut series = Vec::with_capacity(p.steps + 1);
    let mut x = T::zero();
    series.push(x);
    for _ in 0..p.steps {
        x = gain * x + p.disturbance;
        series.push(x);
    }
    LoopGainReport {
        gain,
        diverged: gain.abs() > T::one() && p.disturbance != T::zero(),
        final_magnitude: x.abs(),
        series,
    }
}
