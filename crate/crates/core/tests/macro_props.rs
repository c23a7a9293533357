use proptest::prelude::*;
use symbiont_core::fixtures::unit_params;
use symbiont_core::macro_dynamics::*;
use symbiont_core::population::{InstitutionPolicy, TariffPower};

fn inst(h: f64, m: f64) -> InstitutionPolicy<f64> {
    InstitutionPolicy::new(0.0, TariffPower::Linear, 0.0, h, m).unwrap()
}

fn params() -> impl Strategy<Value = MacroParams<f64>> {
    (
        (0.1..3.0f64, 0.1..3.0f64, 0.1..2.0f64, 0.0..1.0f64, 0.0..1.0f64),
        (0.05..0.95f64, 0.0..3.0f64, 0.0..2.0f64, 0.0..2.0f64, 0.0..2.0f64),
        (0.0..0.2f64, 0.0..0.5f64, any::<bool>()),
    )
        .prop_map(
            |((rm, rh, b, cm, ch), (dd, da, ig, dec, fb), (hg, mg, log))| MacroParams {
                r_m: rm,
                r_h: rh,
                benefit_slope: b,
                benefit_form: if log { BenefitForm::Log } else { BenefitForm::Linear },
                cost_m: cm,
                cost_h: ch,
                delta_d: dd,
                delta_aut: da,
                invest_gain: ig,
                dependence_decay: dec,
                feedback_gain: fb,
                human_growth: hg,
                machine_growth: mg,
            },
        )
}

fn run(
    cs: CapabilityState<f64>,
    mp: &MacroParams<f64>,
    inst: &InstitutionPolicy<f64>,
    steps: usize,
    dt: f64,
) -> Vec<CapabilityState<f64>> {
    let mut out = vec![cs];
    for _ in 0..steps {
        let next = macro_step(out.last().unwrap(), mp, inst, dt).unwrap();
        out.push(next);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]
    #[test]
    fn lever_matches_sign_of_advantage(
        mp in params(), ph in 0.0..5.0f64, pm in 0.0..5.0f64, h in -2.0..2.0f64, m in -2.0..2.0f64,
    ) {
        let cs = CapabilityState::new(ph, pm, 0.5, 1.0).unwrap();
        let i = inst(h, m);
        let adv = autarky_advantage(&cs, &mp, &i);
        // skip draws that land within rounding of the boundary
        prop_assume!(adv.abs() > 1e-12);
        prop_assert_eq!(governance_lever_holds(&cs, &mp, &i), adv > 0.0);
    }
}

proptest! {
    #[test]
    fn dependence_stays_in_unit_interval(mp in params(), d0 in 0.0..=1.0f64, h in -1.0..1.0f64, m in -1.0..1.0f64, dt in 0.01..1.0f64) {
        let traj = run(CapabilityState::new(1.0, 2.0, d0, 1.0).unwrap(), &mp, &inst(h, m), 200, dt);
        prop_assert!(traj.iter().all(|c| (0.0..=1.0).contains(&c.dependence)));
    }

    #[test]
    fn critical_time_matches_linear_scan(mp in params(), h in -1.0..1.0f64, m in -1.0..1.0f64) {
        let i = inst(h, m);
        let traj = run(CapabilityState::new(1.0, 2.0, 1.0, 1.0).unwrap(), &mp, &i, 300, 0.1);
        let samples: Vec<_> = traj.iter().map(|c| MacroSample::of(c, &mp, &i)).collect();
        let mut scan = None;
        for c in &traj {
            let adv = autarky_advantage(c, &mp, &i);
            if c.dependence <= mp.delta_d && adv >= mp.delta_aut {
                scan = Some(c.time);
                break;
            }
        }
        prop_assert_eq!(critical_time(&samples, &mp).unwrap(), scan);
    }

    #[test]
    fn human_offset_is_a_monotone_brake(mp in params(), x1 in 0.0..1.0f64, dx in 0.0..1.0f64, m in -0.5..0.5f64) {
        let t = |h: f64| {
            let i = inst(h, m);
            let traj = run(CapabilityState::new(1.0, 2.0, 1.0, 1.0).unwrap(), &mp, &i, 400, 0.1);
            let samples: Vec<_> = traj.iter().map(|c| MacroSample::of(c, &mp, &i)).collect();
            critical_time(&samples, &mp).unwrap()
        };
        match (t(x1), t(x1 + dx)) {
            (Some(a), Some(b)) => prop_assert!(b >= a),
            (None, Some(_)) => prop_assert!(false, "stronger brake produced a transition"),
            _ => {}
        }
    }

    #[test]
    fn stable_loop_reaches_fixed_point(k in -0.9..=0.9f64, d in -2.0..2.0f64) {
        let rep = rlhf_loop_sim(&LoopGainParams { k_infl: k, k_label: 1.0, k_train: 1.0, disturbance: d, steps: 200 });
        let target = d / (1.0 - k);
        prop_assert!((rep.series.last().unwrap() - target).abs() < 1e-6);
        prop_assert!(!rep.diverged);
    }

    #[test]
    fn unstable_loop_explodes(k in 1.3..3.0f64) {
        let rep = rlhf_loop_sim(&LoopGainParams { k_infl: k, k_label: 1.0, k_train: 1.0, disturbance: 1.0, steps: 60 });
        prop_assert!(rep.final_magnitude > 1e6);
        prop_assert!(rep.diverged);
    }
}

#[test]
fn unit_params_are_valid() {
    unit_params().validate().unwrap();
}
