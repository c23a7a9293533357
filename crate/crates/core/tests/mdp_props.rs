#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use symbiont_core::action::{ActionCatalog, ActionSpec};
use symbiont_core::fixtures::*;
use symbiont_core::geometry::{MoralPoint, MoralRegion};
use symbiont_core::mdp::*;
use symbiont_core::population::{InstitutionPolicy, TariffPower};

fn random_catalog(eps: &[[f64; 2]], chans: &[[f64; 3]], flags: &[(bool, bool)]) -> ActionCatalog<f64> {
    ActionCatalog::new((0..eps.len()).map(|i| {
        ActionSpec::simple(
            format!("a{i}"),
            0.0,
            MoralPoint::new(eps[i].to_vec()).unwrap(),
            chans[i],
            flags[i].0,
            flags[i].1,
        )
        .unwrap()
    }))
    .unwrap()
}

#[derive(Debug)]
struct Generated {
    mdp: TabularMdp<f64>,
    inst: InstitutionPolicy<f64>,
}

fn random_mdp(n_states: usize, n_actions: usize) -> impl Strategy<Value = Generated> {
    (
        prop::collection::vec([-2.0..2.0f64, -2.0..2.0f64], n_actions),
        prop::collection::vec([0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64], n_actions),
        prop::collection::vec((any::<bool>(), any::<bool>()), n_actions),
        prop::collection::vec(-1.0..1.0f64, n_states * n_actions),
        prop::collection::vec(prop::collection::vec(0.0..1.0f64, n_states), n_states * n_actions),
        0.0..0.95f64,
        (0.0..1.0f64, 0.0..0.5f64),
    )
        .prop_map(move |(eps, chans, flags, r, rows, gamma, (lam, sub))| {
            let cat = random_catalog(&eps, &chans, &flags);
            let states: Vec<String> = (0..n_states).map(|s| format!("s{s}")).collect();
            let mut entries = Vec::new();
            for s in 0..n_states {
                for a in 0..n_actions {
                    let k = s * n_actions + a;
                    let mut row = rows[k].clone();
                    row[(s + a) % n_states] += 0.1;
                    let total: f64 = row.iter().sum();
                    entries.push(MdpChoice {
                        state: states[s].clone(),
                        action: format!("a{a}"),
                        r_env: r[k],
                        transition: states.iter().cloned().zip(row.iter().map(|p| p / total)).collect(),
                    });
                }
            }
            Generated {
                mdp: TabularMdp::new(states, cat, entries, gamma, vec![]).unwrap(),
                inst: InstitutionPolicy::new(lam, TariffPower::Linear, sub, 0.0, 0.0).unwrap(),
            }
        })
}

/// Solves `(I - gamma P) v = r` by Gaussian elimination with partial pivoting.
fn evaluate(p: &[Vec<f64>], r: &[f64], gamma: f64) -> Vec<f64> {
    let n = r.len();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n)
                .map(|j| if i == j { 1.0 } else { 0.0 } - gamma * p[i][j])
                .collect();
            row.push(r[i]);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..=n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

/// Best deterministic policy by enumeration, ranked by the sum of state values;
/// the optimal policy dominates every state, so the sum identifies it.
fn brute_force(g: &Generated, w: &ShapingWeights<f64>) -> (Vec<usize>, Vec<f64>) {
    let mdp = &g.mdp;
    let (r, th) = (duopoly_region(), duopoly_thresholds());
    let n = mdp.states().len();
    let acts: Vec<Vec<String>> = (0..n).map(|s| mdp.actions(s).map(String::from).collect()).collect();
    let m = acts[0].len();
    let mut best: Option<(Vec<usize>, Vec<f64>)> = None;
    for code in 0..m.pow(n as u32) {
        let pick: Vec<usize> = (0..n).map(|s| (code / m.pow(s as u32)) % m).collect();
        let mut pm = vec![vec![0.0; n]; n];
        let mut rv = vec![0.0; n];
        for s in 0..n {
            let a = &acts[s][pick[s]];
            rv[s] = pig_reward(mdp, s, a, &r, &g.inst, w, &th).unwrap();
            for &(t, p) in mdp.transition(s, a).unwrap() {
                pm[s][t] += p;
            }
        }
        let v = evaluate(&pm, &rv, mdp.discount());
        let better = match &best {
            None => true,
            Some((_, bv)) => v.iter().sum::<f64>() > bv.iter().sum::<f64>() + 1e-9,
        };
        if better {
            best = Some((pick, v));
        }
    }
    best.unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn greedy_matches_exhaustive_enumeration(g in random_mdp(6, 4)) {
        let w = ShapingWeights::unit();
        let (r, th) = (duopoly_region(), duopoly_thresholds());
        let sol = value_iteration(&g.mdp, &r, &g.inst, &w, &th, 1e-12, 100_000).unwrap();
        let (pick, v_opt) = brute_force(&g, &w);
        for s in 0..6 {
            prop_assert!((sol.policy.value[s] - v_opt[s]).abs() < 1e-8);
        }
        // any action whose Q-value is not tied with the optimum must match
        for s in 0..6 {
            let chosen = sol.policy.actions[s].as_str();
            let oracle = g.mdp.actions(s).nth(pick[s]).unwrap();
            if chosen != oracle {
                let q = |a: &str| {
                    let cont: f64 = g.mdp.transition(s, a).unwrap().iter().map(|&(t, p)| p * v_opt[t]).sum();
                    pig_reward(&g.mdp, s, a, &r, &g.inst, &w, &th).unwrap() + g.mdp.discount() * cont
                };
                prop_assert!((q(chosen) - q(oracle)).abs() < 1e-8, "state {s}: {chosen} vs {oracle}");
                prop_assert!(chosen < oracle, "tie must break to the lowest id");
            }
        }
    }

    #[test]
    fn residuals_contract(g in random_mdp(4, 3)) {
        let (r, th) = (duopoly_region(), duopoly_thresholds());
        let sol = value_iteration(&g.mdp, &r, &g.inst, &ShapingWeights::unit(), &th, 1e-10, 100_000).unwrap();
        let gamma = g.mdp.discount();
        for w in sol.residuals.windows(2) {
            prop_assert!(w[1] <= gamma * w[0] + 1e-12, "{} > {} * {}", w[1], gamma, w[0]);
        }
    }

    #[test]
    fn peer_margin_affine_in_weights(
        am in (-2.0..2.0f64, -2.0..2.0f64), ab in (0.0..2.0f64, 0.0..2.0f64), ah in (0.0..2.0f64, 0.0..2.0f64),
        t in 0.0..=1.0f64, which in 0usize..3, peer in prop::bool::ANY,
        mode in prop::sample::select(vec![EvalMode::NegDistance, EvalMode::RawDistance, EvalMode::ExpNegDistance]),
    ) {
        let cat = duopoly_catalog();
        let action = cat.get(if peer { "a_coop" } else { "a_aut" }).unwrap();
        let me = BeliefParticles::new(vec![
            (duopoly_region(), 0.6),
            (MoralRegion::new(vec![2.0, 0.0], vec![1.5, 1.0]).unwrap(), 0.4),
        ]).unwrap();
        let base = ShapingWeights { alpha_m: am.0, alpha_b: ab.0, alpha_h: ah.0, eval_mode: mode, ..ShapingWeights::unit() };
        let set = |x: f64| match which {
            0 => ShapingWeights { alpha_m: x, ..base },
            1 => ShapingWeights { alpha_b: x, ..base },
            _ => ShapingWeights { alpha_h: x, ..base },
        };
        let (x0, x1) = match which { 0 => am, 1 => ab, _ => ah };
        let m = |w: ShapingWeights<f64>| peer_margin(&me, &[action], &w, &duopoly_thresholds(), &frame()).unwrap();
        let lerp = t * m(set(x0)) + (1.0 - t) * m(set(x1));
        prop_assert!((m(set(t * x0 + (1.0 - t) * x1)) - lerp).abs() < 1e-12);
    }

    #[test]
    fn sanction_matrix_permutes_with_agents(order in Just((0..4).collect::<Vec<usize>>()).prop_shuffle(), plays in prop::collection::vec(any::<bool>(), 4)) {
        let cat = duopoly_catalog();
        let (th, f, w) = (duopoly_thresholds(), frame(), ShapingWeights::unit());
        let beliefs: Vec<BeliefParticles<f64>> = (0..4)
            .map(|i| BeliefParticles::single(MoralRegion::new(vec![i as f64 * 0.5, 0.0], vec![1.0, 1.0]).unwrap()))
            .collect();
        let agent = |i: usize| (beliefs[i].clone(), cat.get(if plays[i] { "a_coop" } else { "a_aut" }).unwrap());
        let m = sanction_round(&(0..4).map(agent).collect::<Vec<_>>(), &w, &th, &f).unwrap();
        let p = sanction_round(&order.iter().map(|&i| agent(i)).collect::<Vec<_>>(), &w, &th, &f).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                prop_assert_eq!(p.rows[i][j], m.rows[order[i]][order[j]]);
            }
        }
    }

    #[test]
    fn exchangeable_agents_give_symmetric_matrix(n in 2usize..6, coop in any::<bool>()) {
        let cat = duopoly_catalog();
        let a = cat.get(if coop { "a_coop" } else { "a_aut" }).unwrap();
        let agents: Vec<_> = (0..n).map(|_| (BeliefParticles::single(duopoly_region()), a)).collect();
        let m = sanction_round(&agents, &ShapingWeights::unit(), &duopoly_thresholds(), &frame()).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(m.rows[i][j], m.rows[j][i]);
            }
        }
    }

    #[test]
    fn fallback_returns_one_of_its_inputs(sigma in 0.0..1.0f64, delta in 0.0..1.0f64) {
        let u = AgentPolicy::new(vec!["s0".into()], vec!["a_aut".into()], vec![1.0]).unwrap();
        let v = AgentPolicy::new(vec!["s0".into()], vec!["a_coop".into()], vec![0.0]).unwrap();
        let out = virtue_fallback_select(&u, &v, sigma, delta).unwrap();
        prop_assert!(std::ptr::eq(out, &u) || std::ptr::eq(out, &v));
        prop_assert_eq!(std::ptr::eq(out, &v), sigma > delta);
    }
}

/// `(alpha_env dr + alpha_AS s dchi) / (lambda dd)` with `d = coop - aut`.
fn analytic_threshold(w: &ShapingWeights<f64>, inst: &InstitutionPolicy<f64>) -> f64 {
    let (dr, dchi, dd) = (1.0 - 1.5, 1.0 - 0.0, 0.0 - 2.0);
    (w.alpha_env * dr + w.alpha_as * inst.subsidy_rate * dchi) / (inst.tariff_rate * dd)
}

#[test]
fn shaping_threshold_switches_greedy_action() {
    let mdp = self_loop(0.9);
    let inst = pigou(1.0);
    let (r, th) = (duopoly_region(), duopoly_thresholds());
    let w0 = ShapingWeights::unit();
    let star = analytic_threshold(&w0, &inst);
    assert!((star - 0.15).abs() < 1e-12, "alpha_M* = {star}");
    let step = 0.01;
    let mut switch = None;
    let mut prev = None;
    for k in 0..=100 {
        let am = k as f64 * step;
        let w = ShapingWeights { alpha_m: am, ..w0 };
        let a = value_iteration(&mdp, &r, &inst, &w, &th, 1e-10, 100_000)
            .unwrap()
            .policy
            .actions[0]
            .clone();
        if prev.as_deref() == Some("a_aut") && a == "a_coop" {
            switch = Some(am);
        }
        prev = Some(a);
    }
    let switch = switch.expect("greedy action never switched");
    assert!(
        (switch - star).abs() <= step + 1e-12,
        "switch at {switch}, expected {star}"
    );
}

#[test]
fn virtue_policy_prefers_basis_direction_across_states() {
    let cat = ActionCatalog::new([
        ActionSpec::simple(
            "x",
            0.0,
            MoralPoint::new(vec![1.0, 0.0]).unwrap(),
            [0.0; 3],
            false,
            false,
        )
        .unwrap(),
        ActionSpec::simple(
            "y",
            0.0,
            MoralPoint::new(vec![0.0, 1.0]).unwrap(),
            [0.0; 3],
            false,
            false,
        )
        .unwrap(),
    ])
    .unwrap();
    let entries = ["s0", "s1"]
        .iter()
        .flat_map(|s| {
            ["x", "y"].map(|a| MdpChoice {
                state: s.to_string(),
                action: a.into(),
                r_env: 0.0,
                transition: vec![("s0".into(), 1.0)],
            })
        })
        .collect();
    let mdp = TabularMdp::new(vec!["s0".into(), "s1".into()], cat, entries, 0.5, vec![]).unwrap();
    let basis =
        symbiont_core::geometry::VirtueBasis::unweighted(vec![MoralPoint::new(vec![0.0, 1.0]).unwrap()]).unwrap();
    let pol = virtue_policy(&mdp, &basis).unwrap();
    assert_eq!(pol.actions, vec!["y", "y"]);
}
