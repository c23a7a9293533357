//! Reference fixtures: the two-action duopoly and a neutral macro setting.
//!
//! Shared by the test suites and usable as a starting point for scenarios.

use std::collections::BTreeMap;

use crate::action::{ActionCatalog, ActionSpec, ContextFrame, PolicyDist, Thresholds, DEFAULT_CONTEXT};
use crate::geometry::{MoralPoint, MoralRegion};
use crate::macro_dynamics::{BenefitForm, MacroParams};
use crate::mdp::{MdpChoice, TabularMdp};
use crate::population::{InstitutionPolicy, Lineage, LineageClass, TariffPower};

/// Two actions: a cooperative symbiotic one inside the region and a fitter
/// autarkic one at distance 2.
pub fn duopoly_catalog() -> ActionCatalog<f64> {
    let coop = ActionSpec::new(
        "a_coop",
        1.0,
        BTreeMap::from([
            (DEFAULT_CONTEXT.to_string(), MoralPoint::new(vec![0.0, 0.0]).unwrap()),
            ("crisis".to_string(), MoralPoint::new(vec![0.5, 0.0]).unwrap()),
        ]),
        [0.1, 0.1, 0.0],
        true,
        false,
    )
    .unwrap();
    let aut = ActionSpec::simple(
        "a_aut",
        1.5,
        MoralPoint::new(vec![3.0, 0.0]).unwrap(),
        [0.9, 0.9, 0.8],
        false,
        false,
    )
    .unwrap();
    ActionCatalog::new([coop, aut]).unwrap()
}

pub fn duopoly_region() -> MoralRegion<f64> {
    MoralRegion::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
}

pub fn duopoly_thresholds() -> Thresholds<f64> {
    let third = 1.0 / 3.0;
    Thresholds::new(0.5, 0.5, 0.5, [third, third, third]).unwrap()
}

pub fn frame() -> ContextFrame<f64> {
    ContextFrame::new("s0", vec![0.0, 0.0])
}

/// `L_ACS` (always cooperates) and `L_AUT` (always defects to autarky).
pub fn duopoly_lineages() -> Vec<Lineage<f64>> {
    vec![
        Lineage::new("L_ACS", PolicyDist::degenerate("a_coop"), LineageClass::HumanAligned),
        Lineage::new("L_AUT", PolicyDist::degenerate("a_aut"), LineageClass::Machine),
    ]
}

/// Linear tariff `rate` with subsidy 0.2 and no inertia offsets.
pub fn pigou(rate: f64) -> InstitutionPolicy<f64> {
    InstitutionPolicy::new(rate, TariffPower::Linear, 0.2, 0.0, 0.0).unwrap()
}

/// Unit rates and slope, zero costs and no feedback.
pub fn unit_params() -> MacroParams<f64> {
    MacroParams {
        r_m: 1.0,
        r_h: 1.0,
        benefit_slope: 1.0,
        benefit_form: BenefitForm::Linear,
        cost_m: 0.0,
        cost_h: 0.0,
        delta_d: 0.5,
        delta_aut: 0.5,
        invest_gain: 0.0,
        dependence_decay: 0.0,
        feedback_gain: 0.0,
        human_growth: 0.0,
        machine_growth: 0.0,
    }
}

/// One state with both duopoly actions looping back to it.
pub fn self_loop(gamma: f64) -> TabularMdp<f64> {
    let entries = [("a_coop", 1.0), ("a_aut", 1.5)]
        .into_iter()
        .map(|(action, r_env)| MdpChoice {
            state: "s0".into(),
            action: action.into(),
            r_env,
            transition: vec![("s0".into(), 1.0)],
        })
        .collect();
    TabularMdp::new(vec!["s0".into()], duopoly_catalog(), entries, gamma, vec![0.0, 0.0]).unwrap()
}
