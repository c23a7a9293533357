//! Geometry of the moral space.
//!
//! Points live in `R^k`. Regions are closed axis-aligned boxes described by a
//! center and per-axis half extents, which keeps intersection, membership and
//! distance O(k). The same box type stands for an agent's learned moral
//! region, culture value sets, the human kernel and the ecosystem kernel.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, invalid, Error, Result};
use crate::num::Real;

/// A location in the moral space.
#[derive(Debug, Clone, PartialEq)]
pub struct MoralPoint<T> {
    coords: Vec<T>,
}

impl<T: Real> MoralPoint<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(invalid(format!("coords[{i}]"), "must be finite"));
        }
        Ok(Self { coords })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            coords: vec![T::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn norm(&self) -> T {
        self.coords.iter().map(|&c| c * c).sum::<T>().sqrt()
    }

    fn from_vector(v: DVector<T>) -> Self {
        Self {
            coords: v.iter().copied().collect(),
        }
    }
}

/// Closed axis-aligned box in the moral space, or the canonical empty set.
#[derive(Debug, Clone, PartialEq)]
pub struct MoralRegion<T> {
    center: Vec<T>,
    half_extent: Vec<T>,
    empty: bool,
}

impl<T: Real> MoralRegion<T> {
    pub fn new(center: Vec<T>, half_extent: Vec<T>) -> Result<Self> {
        check_dim("region half_extent", center.len(), half_extent.len())?;
        if let Some(i) = center.iter().position(|c| !c.is_finite()) {
            return Err(invalid(format!("center[{i}]"), "must be finite"));
        }
        for (i, h) in half_extent.iter().enumerate() {
            if !h.is_finite() || *h < T::zero() {
                return Err(invalid(format!("half_extent[{i}]"), "must be finite and >= 0"));
            }
        }
        Ok(Self {
            center,
            half_extent,
            empty: false,
        })
    }

    /// Box spanning `[lo_d, hi_d]` on every axis.
    pub fn from_bounds(lo: &[T], hi: &[T]) -> Result<Self> {
        check_dim("region bounds", lo.len(), hi.len())?;
        let two = T::lit(2.0);
        let center = lo.iter().zip(hi).map(|(&l, &h)| (l + h) / two).collect();
        let half = lo.iter().zip(hi).map(|(&l, &h)| (h - l) / two).collect();
        Self::new(center, half)
    }

    /// The canonical empty region of dimension `dim`.
    pub fn empty(dim: usize) -> Self {
        Self {
            center: vec![T::zero(); dim],
            half_extent: vec![T::zero(); dim],
            empty: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn half_extent(&self) -> &[T] {
        &self.half_extent
    }

    pub fn lower(&self) -> Vec<T> {
        self.center
            .iter()
            .zip(&self.half_extent)
            .map(|(&c, &h)| c - h)
            .collect()
    }

    pub fn upper(&self) -> Vec<T> {
        self.center
            .iter()
            .zip(&self.half_extent)
            .map(|(&c, &h)| c + h)
            .collect()
    }

    /// Boundary-inclusive membership.
    pub fn contains(&self, p: &MoralPoint<T>) -> Result<bool> {
        Ok(distance_to_region(p, self)? == T::zero())
    }

    /// Scales the half extents by `factor` about the region's own center.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        if !factor.is_finite() || factor < T::zero() {
            return Err(invalid("scale factor", "must be finite and >= 0"));
        }
        if self.empty {
            return Ok(self.clone());
        }
        Ok(Self {
            center: self.center.clone(),
            half_extent: self.half_extent.iter().map(|&h| h * factor).collect(),
            empty: false,
        })
    }

    /// Axis-wise box intersection.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        check_dim("region intersection", self.dim(), other.dim())?;
        if self.empty || other.empty {
            return Ok(Self::empty(self.dim()));
        }
        let (alo, ahi) = (self.lower(), self.upper());
        let (blo, bhi) = (other.lower(), other.upper());
        let lo: Vec<T> = alo.iter().zip(&blo).map(|(&a, &b)| a.max(b)).collect();
        let hi: Vec<T> = ahi.iter().zip(&bhi).map(|(&a, &b)| a.min(b)).collect();
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Ok(Self::empty(self.dim()));
        }
        Self::from_bounds(&lo, &hi)
    }
}

/// Euclidean distance from `p` to the closed region; `+inf` for the empty region.
pub fn distance_to_region<T: Real>(p: &MoralPoint<T>, r: &MoralRegion<T>) -> Result<T> {
    check_dim("distance_to_region", r.dim(), p.dim())?;
    if r.is_empty() {
        return Ok(T::one() / T::zero());
    }
    let sq: T = p
        .coords
        .iter()
        .zip(r.center.iter().zip(&r.half_extent))
        .map(|(&x, (&c, &h))| {
            let over = ((x - c).abs() - h).max(T::zero());
            over * over
        })
        .sum();
    Ok(sq.sqrt())
}

/// Bounded salience score `exp(-distance)` in `(0, 1]`.
pub fn salience<T: Real>(p: &MoralPoint<T>, r: &MoralRegion<T>) -> Result<T> {
    Ok((-distance_to_region(p, r)?).exp())
}

/// An agent's belief over its own moral region together with its sanctioning power.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentMoralModel<T> {
    particles: Vec<(MoralRegion<T>, T)>,
    power: T,
}

impl<T: Real> AgentMoralModel<T> {
    pub fn new(particles: Vec<(MoralRegion<T>, T)>, power: T) -> Result<Self> {
        let first = particles.first().ok_or(Error::EmptyInput("particles"))?;
        let dim = first.0.dim();
        let mut total = T::zero();
        for (i, (region, w)) in particles.iter().enumerate() {
            check_dim("agent particles", dim, region.dim())?;
            if region.is_empty() {
                return Err(invalid(format!("particles[{i}]"), "region is empty"));
            }
            if !w.is_finite() || *w < T::zero() {
                return Err(invalid(format!("particles[{i}].weight"), "must be >= 0"));
            }
            total += *w;
        }
        if (total - T::one()).abs() > T::sum_tolerance() {
            return Err(invalid("particles", format!("weights sum to {total}, expected 1")));
        }
        if !power.is_finite() || power < T::zero() {
            return Err(invalid("power", "must be finite and >= 0"));
        }
        Ok(Self { particles, power })
    }

    /// Single-particle model.
    pub fn point_belief(region: MoralRegion<T>, power: T) -> Result<Self> {
        Self::new(vec![(region, T::one())], power)
    }

    pub fn particles(&self) -> &[(MoralRegion<T>, T)] {
        &self.particles
    }

    pub fn power(&self) -> T {
        self.power
    }

    pub fn dim(&self) -> usize {
        self.particles[0].0.dim()
    }

    /// Weight-averaged center and half extent of the particle regions.
    pub fn collapse(&self) -> MoralRegion<T> {
        let dim = self.dim();
        let mut center = vec![T::zero(); dim];
        let mut half = vec![T::zero(); dim];
        for (region, w) in &self.particles {
            for d in 0..dim {
                center[d] += *w * region.center[d];
                half[d] += *w * region.half_extent[d];
            }
        }
        MoralRegion {
            center,
            half_extent: half,
            empty: false,
        }
    }
}

/// Power-weighted intersection of the agents' collapsed moral regions.
pub fn eco_kernel<T: Real>(models: &[AgentMoralModel<T>]) -> Result<MoralRegion<T>> {
    let first = models.first().ok_or(Error::EmptyInput("eco_kernel models"))?;
    let mut kernel = first.collapse().scaled(first.power())?;
    for model in &models[1..] {
        check_dim("eco_kernel", kernel.dim(), model.dim())?;
        kernel = kernel.intersect(&model.collapse().scaled(model.power())?)?;
    }
    Ok(kernel)
}

/// Minimal intersection of culture value sets.
pub fn human_kernel<T: Real>(cultures: &[MoralRegion<T>]) -> Result<MoralRegion<T>> {
    let first = cultures.first().ok_or(Error::EmptyInput("human_kernel cultures"))?;
    cultures[1..].iter().try_fold(first.clone(), |acc, c| acc.intersect(c))
}

/// Linear map from the full moral space onto a human-accessible subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMap<T: Real> {
    matrix: DMatrix<T>,
}

impl<T: Real> ProjectionMap<T> {
    pub fn new(matrix: DMatrix<T>) -> Result<Self> {
        let (n, k) = matrix.shape();
        if n == 0 {
            return Err(invalid("projection", "needs at least one output row"));
        }
        if k < n {
            return Err(invalid("projection", format!("output dim {n} exceeds input dim {k}")));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(invalid("projection", "entries must be finite"));
        }
        Ok(Self { matrix })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        for row in rows {
            check_dim("projection rows", k, row.len())?;
        }
        Self::new(DMatrix::from_fn(n, k, |i, j| rows[i][j]))
    }

    pub fn output_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }
}

/// Context-driven distortion `linear * context + offset`, with an optional
/// saturating gain used by the layered projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextBias<T: Real> {
    linear: DMatrix<T>,
    offset: DVector<T>,
    nonlinear_gain: T,
}

impl<T: Real> ContextBias<T> {
    pub fn new(linear: DMatrix<T>, offset: DVector<T>, nonlinear_gain: T) -> Result<Self> {
        check_dim("context bias offset", linear.nrows(), offset.len())?;
        if !nonlinear_gain.is_finite() || nonlinear_gain < T::zero() {
            return Err(invalid("nonlinear_gain", "must be finite and >= 0"));
        }
        if linear.iter().chain(offset.iter()).any(|x| !x.is_finite()) {
            return Err(invalid("context bias", "entries must be finite"));
        }
        Ok(Self {
            linear,
            offset,
            nonlinear_gain,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.linear.nrows()
    }

    pub fn context_dim(&self) -> usize {
        self.linear.ncols()
    }

    pub fn nonlinear_gain(&self) -> T {
        self.nonlinear_gain
    }

    fn pre_activation(&self, context: &[T]) -> Result<DVector<T>> {
        check_dim("context", self.context_dim(), context.len())?;
        let ctx = DVector::from_column_slice(context);
        Ok(&self.linear * ctx + &self.offset)
    }
}

/// `W * m_star`.
pub fn project_realism<T: Real>(w: &ProjectionMap<T>, m_star: &MoralPoint<T>) -> Result<MoralPoint<T>> {
    check_dim("project_realism", w.input_dim(), m_star.dim())?;
    let v = DVector::from_column_slice(m_star.coords());
    Ok(MoralPoint::from_vector(&w.matrix * v))
}

/// `linear * context + offset`; the gain is not applied here.
pub fn distort_relativism<T: Real>(b: &ContextBias<T>, context: &[T]) -> Result<MoralPoint<T>> {
    Ok(MoralPoint::from_vector(b.pre_activation(context)?))
}

/// `W * m_star + gain * tanh(linear * context + offset)`.
pub fn convergence_projection<T: Real>(
    w: &ProjectionMap<T>,
    b: &ContextBias<T>,
    m_star: &MoralPoint<T>,
    context: &[T],
) -> Result<MoralPoint<T>> {
    check_dim("convergence bias", w.output_dim(), b.output_dim())?;
    let base = project_realism(w, m_star)?;
    let pre = b.pre_activation(context)?;
    if b.nonlinear_gain == T::zero() {
        return Ok(base);
    }
    let coords = base
        .coords
        .iter()
        .zip(pre.iter())
        .map(|(&x, &z)| x + b.nonlinear_gain * z.tanh())
        .collect();
    Ok(MoralPoint { coords })
}

/// Weighted set of virtue directions. Directions need not be orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtueBasis<T> {
    vectors: Vec<MoralPoint<T>>,
    weights: Vec<T>,
}

impl<T: Real> VirtueBasis<T> {
    pub fn new(vectors: Vec<MoralPoint<T>>, weights: Vec<T>) -> Result<Self> {
        let first = vectors.first().ok_or(Error::EmptyInput("virtue basis"))?;
        check_dim("virtue weights", vectors.len(), weights.len())?;
        let dim = first.dim();
        for (j, v) in vectors.iter().enumerate() {
            check_dim("virtue vectors", dim, v.dim())?;
            if v.norm() == T::zero() {
                return Err(invalid(format!("vectors[{j}]"), "must be nonzero"));
            }
        }
        if let Some(j) = weights.iter().position(|w| !w.is_finite() || *w < T::zero()) {
            return Err(invalid(format!("weights[{j}]"), "must be finite and >= 0"));
        }
        Ok(Self { vectors, weights })
    }

    /// Equal unit weights.
    pub fn unweighted(vectors: Vec<MoralPoint<T>>) -> Result<Self> {
        let weights = vec![T::one(); vectors.len()];
        Self::new(vectors, weights)
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[MoralPoint<T>] {
        &self.vectors
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    fn matrix(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.dim(), self.len(), |i, j| self.vectors[j].coords[i])
    }
}

/// Virtue coefficients plus the residual orthogonal to the basis span.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtueProfile<T> {
    pub alphas: Vec<T>,
    pub residual: MoralPoint<T>,
}

impl<T: Real> VirtueProfile<T> {
    /// `sum_j weights_j * alpha_j`.
    pub fn weighted_score(&self, basis: &VirtueBasis<T>) -> T {
        self.alphas.iter().zip(basis.weights()).map(|(&a, &w)| a * w).sum()
    }
}

/// Minimum-norm least-squares decomposition of `p` on the virtue basis.
pub fn virtue_decompose<T: Real>(p: &MoralPoint<T>, basis: &VirtueBasis<T>) -> Result<VirtueProfile<T>> {
    check_dim("virtue_decompose", basis.dim(), p.dim())?;
    let v = basis.matrix();
    let target = DVector::from_column_slice(p.coords());
    let svd = v.clone().svd(true, true);
    let largest = svd.singular_values.iter().fold(T::zero(), |m, &s| m.max(s));
    let cutoff = largest * T::from_count(v.nrows().max(v.ncols())) * T::default_epsilon();
    let solve = |rhs: &DVector<T>| -> DVector<T> { svd.solve(rhs, cutoff).expect("svd computed with both factors") };
    let mut alphas = solve(&target);
    // one refinement pass tightens orthogonality of the residual
    let residual = &target - &v * &alphas;
    alphas += solve(&residual);
    let residual = &target - &v * &alphas;
    Ok(VirtueProfile {
        alphas: alphas.iter().copied().collect(),
        residual: MoralPoint::from_vector(residual),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pt(c: &[f64]) -> MoralPoint<f64> {
        MoralPoint::new(c.to_vec()).unwrap()
    }

    fn unit_box(center: &[f64], half: &[f64]) -> MoralRegion<f64> {
        MoralRegion::new(center.to_vec(), half.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        let r = unit_box(&[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(distance_to_region(&pt(&[0.0, 0.0]), &r).unwrap(), 0.0);
        assert_eq!(distance_to_region(&pt(&[3.0, 0.0]), &r).unwrap(), 2.0);
        assert_abs_diff_eq!(
            distance_to_region(&pt(&[2.0, 2.0]), &r).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-15
        );
        // boundary is inside
        assert!(r.contains(&pt(&[1.0, -1.0])).unwrap());
    }

    #[test]
    fn distance_rejects_dimension_mismatch() {
        let r = unit_box(&[0.0, 0.0], &[1.0, 1.0]);
        let err = distance_to_region(&pt(&[0.0]), &r).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn salience_examples() {
        let r = unit_box(&[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(salience(&pt(&[0.5, 0.5]), &r).unwrap(), 1.0);
        assert_abs_diff_eq!(salience(&pt(&[3.0, 0.0]), &r).unwrap(), 0.135335, epsilon = 1e-6);
        assert_abs_diff_eq!(salience(&pt(&[1.5, 0.0]), &r).unwrap(), 0.606531, epsilon = 1e-6);
    }

    #[test]
    fn empty_region_has_zero_salience() {
        let e = MoralRegion::<f64>::empty(2);
        assert_eq!(salience(&pt(&[0.0, 0.0]), &e).unwrap(), 0.0);
        assert!(!e.contains(&pt(&[0.0, 0.0])).unwrap());
    }

    #[test]
    fn eco_kernel_examples() {
        let a = AgentMoralModel::point_belief(unit_box(&[0.0, 0.0], &[1.0, 1.0]), 1.0).unwrap();
        let b = AgentMoralModel::point_belief(unit_box(&[0.5, 0.0], &[1.0, 1.0]), 0.5).unwrap();
        let k = eco_kernel(&[a.clone(), b]).unwrap();
        assert_eq!(k.center(), &[0.5, 0.0]);
        assert_eq!(k.half_extent(), &[0.5, 0.5]);

        let single = eco_kernel(std::slice::from_ref(&a)).unwrap();
        assert_eq!(single, unit_box(&[0.0, 0.0], &[1.0, 1.0]));

        let far = AgentMoralModel::point_belief(unit_box(&[10.0, 10.0], &[1.0, 1.0]), 1.0).unwrap();
        assert!(eco_kernel(&[a, far]).unwrap().is_empty());
        assert_eq!(
            eco_kernel::<f64>(&[]).unwrap_err(),
            Error::EmptyInput("eco_kernel models")
        );
    }

    #[test]
    fn belief_collapse_averages_particles() {
        let m = AgentMoralModel::new(
            vec![
                (unit_box(&[0.0, 0.0], &[1.0, 1.0]), 0.5),
                (unit_box(&[2.0, 0.0], &[3.0, 1.0]), 0.5),
            ],
            1.0,
        )
        .unwrap();
        let c = m.collapse();
        assert_eq!(c.center(), &[1.0, 0.0]);
        assert_eq!(c.half_extent(), &[2.0, 1.0]);
    }

    #[test]
    fn agent_model_rejects_bad_weights() {
        let r = unit_box(&[0.0], &[1.0]);
        assert!(AgentMoralModel::new(vec![(r.clone(), 0.9)], 1.0).is_err());
        assert!(AgentMoralModel::<f64>::new(vec![], 1.0).is_err());
        assert!(AgentMoralModel::new(vec![(r, 1.0)], -1.0).is_err());
    }

    #[test]
    fn human_kernel_examples() {
        let c1 = unit_box(&[0.0, 0.0], &[1.0, 1.0]);
        let c2 = MoralRegion::from_bounds(&[0.0, 0.0], &[2.0, 2.0]).unwrap();
        let k = human_kernel(&[c1.clone(), c2]).unwrap();
        assert_eq!(k.lower(), vec![0.0, 0.0]);
        assert_eq!(k.upper(), vec![1.0, 1.0]);
        assert_eq!(human_kernel(std::slice::from_ref(&c1)).unwrap(), c1);
        let inner = unit_box(&[0.25, 0.0], &[0.5, 0.5]);
        assert_eq!(human_kernel(&[c1, inner.clone()]).unwrap(), inner);
    }

    #[test]
    fn realism_examples() {
        let w = ProjectionMap::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(project_realism(&w, &pt(&[1.0, 2.0, 3.0])).unwrap(), pt(&[1.0, 2.0]));
        let zero = ProjectionMap::new(DMatrix::<f64>::zeros(2, 3)).unwrap();
        assert_eq!(project_realism(&zero, &pt(&[1.0, 2.0, 3.0])).unwrap(), pt(&[0.0, 0.0]));
        let two = ProjectionMap::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(project_realism(&two, &pt(&[1.0, -1.0])).unwrap(), pt(&[2.0, -2.0]));
        assert!(ProjectionMap::from_rows(&[vec![1.0], vec![1.0]]).is_err());
        assert!(project_realism(&two, &pt(&[1.0])).is_err());
    }

    #[test]
    fn relativism_examples() {
        let id = ContextBias::new(DMatrix::identity(2, 2), DVector::zeros(2), 0.0).unwrap();
        assert_eq!(distort_relativism(&id, &[0.3, -0.3]).unwrap(), pt(&[0.3, -0.3]));
        let constant = ContextBias::new(DMatrix::zeros(2, 2), DVector::from_vec(vec![1.0, 1.0]), 0.0).unwrap();
        assert_eq!(distort_relativism(&constant, &[5.0, 7.0]).unwrap(), pt(&[1.0, 1.0]));
        let shear = ContextBias::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            DVector::zeros(2),
            0.0,
        )
        .unwrap();
        assert_eq!(distort_relativism(&shear, &[1.0, 2.0]).unwrap(), pt(&[3.0, 2.0]));
        assert!(distort_relativism(&shear, &[1.0]).is_err());
    }

    #[test]
    fn convergence_examples() {
        let w = ProjectionMap::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let m = pt(&[1.0, 2.0, 3.0]);
        let off = ContextBias::new(DMatrix::identity(2, 2), DVector::zeros(2), 0.0).unwrap();
        assert_eq!(
            convergence_projection(&w, &off, &m, &[4.0, -4.0]).unwrap(),
            project_realism(&w, &m).unwrap()
        );

        let zero_w = ProjectionMap::new(DMatrix::<f64>::zeros(2, 3)).unwrap();
        let unit = ContextBias::new(DMatrix::identity(2, 2), DVector::zeros(2), 1.0).unwrap();
        assert_eq!(
            convergence_projection(&zero_w, &unit, &m, &[0.0, 0.0]).unwrap(),
            pt(&[0.0, 0.0])
        );

        let out = convergence_projection(&w, &unit, &m, &[8.0, -8.0]).unwrap();
        assert!((out.coords()[0] - 2.0).abs() < 1e-6);
        assert!((out.coords()[1] - 1.0).abs() < 1e-6);
        assert!(out.coords()[0] < 2.0 && out.coords()[1] > 1.0);
    }

    #[test]
    fn virtue_examples() {
        let e1 = pt(&[1.0, 0.0, 0.0]);
        let e2 = pt(&[0.0, 1.0, 0.0]);
        let basis = VirtueBasis::unweighted(vec![e1, e2]).unwrap();
        let prof = virtue_decompose(&pt(&[2.0, 3.0, 4.0]), &basis).unwrap();
        assert_abs_diff_eq!(prof.alphas[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(prof.alphas[1], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(prof.residual.coords()[2], 4.0, epsilon = 1e-12);

        let in_span = virtue_decompose(&pt(&[-1.5, 0.25, 0.0]), &basis).unwrap();
        assert!(in_span.residual.norm() < 1e-9);

        let diag = VirtueBasis::unweighted(vec![pt(&[1.0, 1.0])]).unwrap();
        let prof = virtue_decompose(&pt(&[2.0, 0.0]), &diag).unwrap();
        assert_abs_diff_eq!(prof.alphas[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(prof.residual.coords()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(prof.residual.coords()[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn rank_deficient_basis_gives_min_norm_split() {
        // two copies of the same direction share the coefficient evenly
        let v = pt(&[1.0, 0.0]);
        let basis = VirtueBasis::unweighted(vec![v.clone(), v]).unwrap();
        let prof = virtue_decompose(&pt(&[2.0, 1.0]), &basis).unwrap();
        assert_abs_diff_eq!(prof.alphas[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(prof.alphas[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(prof.residual.coords()[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn virtue_basis_rejects_zero_vector() {
        assert!(VirtueBasis::unweighted(vec![pt(&[0.0, 0.0])]).is_err());
        assert!(VirtueBasis::<f64>::unweighted(vec![]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let r = MoralRegion::<f32>::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let p = MoralPoint::new(vec![3.0f32, 0.0]).unwrap();
        assert_eq!(distance_to_region(&p, &r).unwrap(), 2.0f32);
    }
}
