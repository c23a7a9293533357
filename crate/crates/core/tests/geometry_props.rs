use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symbiont_core::geometry::*;

const DIM: usize = 3;

fn point() -> impl Strategy<Value = MoralPoint<f64>> {
    prop::collection::vec(-5.0..5.0f64, DIM).prop_map(|c| MoralPoint::new(c).unwrap())
}

fn region() -> impl Strategy<Value = MoralRegion<f64>> {
    (
        prop::collection::vec(-2.0..2.0f64, DIM),
        prop::collection::vec(0.0..3.0f64, DIM),
    )
        .prop_map(|(c, h)| MoralRegion::new(c, h).unwrap())
}

fn model() -> impl Strategy<Value = AgentMoralModel<f64>> {
    (prop::collection::vec((region(), 0.1..1.0f64), 1..4), 0.2..1.5f64).prop_map(|(parts, power)| {
        let total: f64 = parts.iter().map(|(_, w)| w).sum();
        let parts = parts.into_iter().map(|(r, w)| (r, w / total)).collect();
        AgentMoralModel::new(parts, power).unwrap()
    })
}

fn bounds(r: &MoralRegion<f64>) -> Option<(Vec<f64>, Vec<f64>)> {
    (!r.is_empty()).then(|| (r.lower(), r.upper()))
}

fn close_bounds(a: &MoralRegion<f64>, b: &MoralRegion<f64>) -> bool {
    match (bounds(a), bounds(b)) {
        (None, None) => true,
        (Some((al, ah)), Some((bl, bh))) => al
            .iter()
            .chain(&ah)
            .zip(bl.iter().chain(&bh))
            .all(|(x, y)| (x - y).abs() <= 1e-12),
        _ => false,
    }
}

/// Membership checked directly against the bounds, independent of the distance code.
fn inside(p: &[f64], r: &MoralRegion<f64>) -> bool {
    !r.is_empty()
        && p.iter()
            .zip(r.center().iter().zip(r.half_extent()))
            .all(|(&x, (&c, &h))| x >= c - h && x <= c + h)
}

proptest! {
    #[test]
    fn distance_zero_inside(r in region(), t in prop::collection::vec(-1.0..=1.0f64, DIM)) {
        let coords: Vec<f64> = r.center().iter().zip(r.half_extent()).zip(&t).map(|((&c, &h), &u)| c + u * h).collect();
        let p = MoralPoint::new(coords).unwrap();
        // c + u*h can round past the upper corner by one ulp
        prop_assert!(distance_to_region(&p, &r).unwrap() <= 1e-15);
    }

    #[test]
    fn distance_positive_outside(r in region(), p in point()) {
        let d = distance_to_region(&p, &r).unwrap();
        prop_assert_eq!(d == 0.0, inside(p.coords(), &r));
    }

    #[test]
    fn enlarging_never_increases_distance(r in region(), p in point(), k in 1.0..4.0f64) {
        let big = r.scaled(k).unwrap();
        prop_assert!(distance_to_region(&p, &big).unwrap() <= distance_to_region(&p, &r).unwrap());
    }

    #[test]
    fn salience_bounds_and_monotone(r in region(), p in point(), q in point()) {
        let (sp, sq) = (salience(&p, &r).unwrap(), salience(&q, &r).unwrap());
        prop_assert!(sp > 0.0 && sp <= 1.0);
        prop_assert_eq!(sp == 1.0, r.contains(&p).unwrap());
        let (dp, dq) = (distance_to_region(&p, &r).unwrap(), distance_to_region(&q, &r).unwrap());
        if dp < dq {
            prop_assert!(sp >= sq);
        }
    }

    #[test]
    fn eco_kernel_commutative_and_associative(a in model(), b in model(), c in model()) {
        let abc = eco_kernel(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let cab = eco_kernel(&[c.clone(), a.clone(), b.clone()]).unwrap();
        let bca = eco_kernel(&[b.clone(), c.clone(), a.clone()]).unwrap();
        prop_assert!(close_bounds(&abc, &cab));
        prop_assert!(close_bounds(&abc, &bca));
        let ab = eco_kernel(&[a.clone(), b.clone()]).unwrap();
        let grouped = ab.intersect(&c.collapse().scaled(c.power()).unwrap()).unwrap();
        prop_assert!(close_bounds(&abc, &grouped));
    }

    #[test]
    fn eco_kernel_inside_every_scaled_input(ms in prop::collection::vec(model(), 1..5)) {
        let k = eco_kernel(&ms).unwrap();
        if let Some((lo, hi)) = bounds(&k) {
            for m in &ms {
                let s = m.collapse().scaled(m.power()).unwrap();
                for d in 0..DIM {
                    prop_assert!(lo[d] >= s.lower()[d] - 1e-12 && hi[d] <= s.upper()[d] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn human_kernel_is_unit_power_eco_kernel(rs in prop::collection::vec(region(), 1..5)) {
        let models: Vec<_> = rs.iter().map(|r| AgentMoralModel::point_belief(r.clone(), 1.0).unwrap()).collect();
        prop_assert!(close_bounds(&human_kernel(&rs).unwrap(), &eco_kernel(&models).unwrap()));
    }

    #[test]
    fn zero_gain_convergence_is_realism(
        w in prop::collection::vec(-2.0..2.0f64, 2 * DIM),
        m in point(),
        lin in prop::collection::vec(-2.0..2.0f64, 4),
        off in prop::collection::vec(-1.0..1.0f64, 2),
        ctx in prop::collection::vec(-1.0..1.0f64, 2),
    ) {
        let map = ProjectionMap::new(nalgebra::DMatrix::from_row_slice(2, DIM, &w)).unwrap();
        let bias = ContextBias::new(
            nalgebra::DMatrix::from_row_slice(2, 2, &lin),
            nalgebra::DVector::from_vec(off),
            0.0,
        ).unwrap();
        let a = convergence_projection(&map, &bias, &m, &ctx).unwrap();
        let b = project_realism(&map, &m).unwrap();
        prop_assert!(a.coords().iter().zip(b.coords()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn virtue_residual_orthogonal(
        vs in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 4), 1..6),
        target in prop::collection::vec(-3.0..3.0f64, 4),
    ) {
        let vectors: Vec<_> = vs.into_iter().map(|v| MoralPoint::new(v).unwrap()).collect();
        prop_assume!(vectors.iter().all(|v| v.norm() > 1e-3));
        let basis = VirtueBasis::unweighted(vectors).unwrap();
        let p = MoralPoint::new(target).unwrap();
        let prof = virtue_decompose(&p, &basis).unwrap();
        for d in 0..4 {
            let recon: f64 = basis.vectors().iter().zip(&prof.alphas).map(|(v, a)| a * v.coords()[d]).sum::<f64>()
                + prof.residual.coords()[d];
            prop_assert!((recon - p.coords()[d]).abs() < 1e-9);
        }
        for v in basis.vectors() {
            let dot: f64 = v.coords().iter().zip(prof.residual.coords()).map(|(a, b)| a * b).sum();
            prop_assert!(dot.abs() < 1e-9, "residual . v = {dot}");
        }
    }

    #[test]
    fn orthonormal_alphas_are_inner_products(angle in 0.0..std::f64::consts::TAU, target in prop::collection::vec(-3.0..3.0f64, 3)) {
        let (s, c) = angle.sin_cos();
        let basis = VirtueBasis::unweighted(vec![
            MoralPoint::new(vec![c, s, 0.0]).unwrap(),
            MoralPoint::new(vec![-s, c, 0.0]).unwrap(),
        ]).unwrap();
        let p = MoralPoint::new(target.clone()).unwrap();
        let prof = virtue_decompose(&p, &basis).unwrap();
        for (v, a) in basis.vectors().iter().zip(&prof.alphas) {
            let dot: f64 = v.coords().iter().zip(&target).map(|(x, y)| x * y).sum();
            prop_assert!((dot - a).abs() < 1e-12);
        }
    }
}

#[test]
fn eco_kernel_membership_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let models: Vec<AgentMoralModel<f64>> = (0..rng.random_range(1..5))
            .map(|_| {
                let c: Vec<f64> = (0..DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
                let h: Vec<f64> = (0..DIM).map(|_| rng.random_range(0.5..2.5)).collect();
                AgentMoralModel::point_belief(MoralRegion::new(c, h).unwrap(), rng.random_range(0.3..1.5)).unwrap()
            })
            .collect();
        let scaled: Vec<_> = models.iter().map(|m| m.collapse().scaled(m.power()).unwrap()).collect();
        let kernel = eco_kernel(&models).unwrap();
        for _ in 0..10_000 {
            let p: Vec<f64> = (0..DIM).map(|_| rng.random_range(-3.0..3.0)).collect();
            let expected = scaled.iter().all(|r| inside(&p, r));
            let got = kernel.contains(&MoralPoint::new(p).unwrap()).unwrap();
            assert_eq!(got, expected);
        }
    }
}
