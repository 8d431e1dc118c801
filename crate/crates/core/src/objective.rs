//! The randomized objective `U = u_I` and its expectation `u`.
//!
//! Component losses are `u_0(f) = ½‖f‖²_H` and `u_i(f) = ½‖f(x_i) − y_i‖²`
//! for `i = 1..=n`. Gradients are returned through their Riesz images in `H`:
//! `R_H Du_0(f) = f` and `R_H Du_i(f) = Φ(x_i, f(x_i) − y_i)`, so the dual
//! space never needs its own representation.
//!
//! Component indices are 1-based for data terms, matching the law of `I`;
//! component `i ≥ 1` refers to `data.point(i − 1)`.

use crate::error::{check_dim, Error, Result};
use crate::function_space::KernelExpansion;
use crate::kernel::KernelSpec;

/// Training pairs `(x_i, y_i)` with uniform input and output dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<Vec<f64>>,
    labels: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("dataset must contain at least one pair".into()));
        }
        if points.len() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        let d = points[0].len();
        let m = labels[0].len();
        if d == 0 || m == 0 {
            return Err(Error::InvalidInput("input and output dimensions must be at least 1".into()));
        }
        for (x, y) in points.iter().zip(&labels) {
            check_dim("dataset point", d, x.len())?;
            check_dim("dataset label", m, y.len())?;
            if x.iter().chain(y).any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("dataset contains a non-finite value".into()));
            }
        }
        Ok(Dataset { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn output_dim(&self) -> usize {
        self.labels[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[Vec<f64>] {
        &self.labels
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn label(&self, i: usize) -> &[f64] {
        &self.labels[i]
    }

    /// `max_i ‖y_i‖`.
    pub fn max_label_norm(&self) -> f64 {
        self.labels
            .iter()
            .map(|y| y.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_expansion(&self, f: &KernelExpansion) -> Result<()> {
        check_dim("expansion input dimension", self.input_dim(), f.spec().dim())?;
        check_dim("expansion output dimension", self.output_dim(), f.out_dim())
    }
}

/// Law of the component index: `P(I=0) = q`, `P(I=i) = (1−q)/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureWeights {
    q: f64,
    n: usize,
}

impl MixtureWeights {
    pub fn new(q: f64, n: usize) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidInput(format!("q must lie in (0, 1), got {q}")));
        }
        if n == 0 {
            return Err(Error::InvalidInput("number of data terms must be at least 1".into()));
        }
        Ok(MixtureWeights { q, n })
    }

    pub fn for_dataset(q: f64, data: &Dataset) -> Result<Self> {
        MixtureWeights::new(q, data.len())
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Weight of each data term, `(1−q)/n`.
    pub fn data_weight(&self) -> f64 {
        (1.0 - self.q) / self.n as f64
    }

    /// `P(I = i)` for `i ∈ 0..=n`.
    pub fn probability(&self, i: usize) -> f64 {
        match i {
            0 => self.q,
            i if i <= self.n => self.data_weight(),
            _ => 0.0,
        }
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        check_dim("mixture weights vs dataset size", self.n, data.len())
    }
}

/// Strong monotonicity `λ`, mean-square Lipschitz `Λ²` and embedding `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    pub lambda: f64,
    pub lambda_sq_lipschitz: f64,
    pub embedding: f64,
}

/// `λ = q`, `Λ² = q + (1−q)M⁴`.
pub fn constants(w: &MixtureWeights, spec: &KernelSpec) -> ProblemConstants {
    let m = spec.sup_bound();
    ProblemConstants {
        lambda: w.q,
        lambda_sq_lipschitz: w.q + (1.0 - w.q) * m.powi(4),
        embedding: m,
    }
}

fn check_index(i: usize, data: &Dataset) -> Result<()> {
    if i > data.len() {
        Err(Error::InvalidInput(format!(
            "component index {i} out of range 0..={}",
            data.len()
        )))
    } else {
        Ok(())
    }
}

fn residual(f: &KernelExpansion, data: &Dataset, i: usize) -> Vec<f64> {
    let mut r = vec![0.0; data.output_dim()];
    f.evaluate_into(data.point(i), &mut r);
    for (ri, yi) in r.iter_mut().zip(data.label(i)) {
        *ri -= yi;
    }
    r
}

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// `u_i(f)`.
pub fn loss_component(i: usize, f: &KernelExpansion, data: &Dataset) -> Result<f64> {
    check_index(i, data)?;
    data.check_expansion(f)?;
    if i == 0 {
        Ok(0.5 * f.norm_sq()?)
    } else {
        Ok(0.5 * sq(&residual(f, data, i - 1)))
    }
}

/// `u(f) = E[u_I(f)]`, evaluated as the exact finite expectation.
pub fn loss_total(f: &KernelExpansion, data: &Dataset, w: &MixtureWeights) -> Result<f64> {
    w.check_data(data)?;
    data.check_expansion(f)?;
    let data_sum: f64 = (0..data.len()).map(|i| 0.5 * sq(&residual(f, data, i))).sum();
    Ok(w.q * 0.5 * f.norm_sq()? + w.data_weight() * data_sum)
}

/// `R_H Du_i(f)`: `f` for `i = 0`, else `Φ(x_i, f(x_i) − y_i)`.
pub fn riesz_grad_component(i: usize, f: &KernelExpansion, data: &Dataset) -> Result<KernelExpansion> {
    check_index(i, data)?;
    data.check_expansion(f)?;
    if i == 0 {
        Ok(f.clone())
    } else {
        KernelExpansion::representer(*f.spec(), data.point(i - 1), &residual(f, data, i - 1))
    }
}

/// `R_H Du(f) = q f + ((1−q)/n) Σ_i Φ(x_i, f(x_i) − y_i)`.
pub fn riesz_grad_full(f: &KernelExpansion, data: &Dataset, w: &MixtureWeights) -> Result<KernelExpansion> {
    w.check_data(data)?;
    data.check_expansion(f)?;
    let residuals: Vec<Vec<f64>> = (0..data.len()).map(|i| residual(f, data, i)).collect();
    let sum = KernelExpansion::from_parts(*f.spec(), f.out_dim(), data.points().to_vec(), residuals)?;
    KernelExpansion::combine(w.q, f, w.data_weight(), &sum)
}

/// `E[‖Du_I(f*)‖²] = q‖f*‖² + ((1−q)/n) Σ_i ‖f*(x_i) − y_i‖² k(x_i, x_i)`.
pub fn bound_term(fstar: &KernelExpansion, data: &Dataset, w: &MixtureWeights) -> Result<f64> {
    w.check_data(data)?;
    data.check_expansion(fstar)?;
    let spec = fstar.spec();
    let data_sum: f64 = (0..data.len())
        .map(|i| sq(&residual(fstar, data, i)) * spec.eval_unchecked(data.point(i), data.point(i)))
        .sum();
    Ok(w.q * fstar.norm_sq()? + w.data_weight() * data_sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelFamily;
    use approx::assert_relative_eq;

    fn spec() -> KernelSpec {
        KernelSpec::new(KernelFamily::Gaussian, 1.0, 1).unwrap()
    }

    fn one_point(y: f64) -> Dataset {
        Dataset::new(vec![vec![0.25]], vec![vec![y]]).unwrap()
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![], vec![]).is_err());
        assert!(Dataset::new(vec![vec![0.0]], vec![]).is_err());
        assert!(Dataset::new(vec![vec![0.0], vec![0.0, 1.0]], vec![vec![1.0], vec![1.0]]).is_err());
        assert!(Dataset::new(vec![vec![0.0]], vec![vec![f64::NAN]]).is_err());
        assert!(Dataset::new(vec![vec![]], vec![vec![1.0]]).is_err());
    }

    #[test]
    fn weights_validation_and_law() {
        assert!(MixtureWeights::new(0.0, 3).is_err());
        assert!(MixtureWeights::new(1.0, 3).is_err());
        assert!(MixtureWeights::new(0.5, 0).is_err());
        let w = MixtureWeights::new(0.3, 4).unwrap();
        let total: f64 = (0..=4).map(|i| w.probability(i)).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-15);
        assert_eq!(w.probability(5), 0.0);
    }

    #[test]
    fn component_losses() {
        let data = one_point(3.0);
        let zero = KernelExpansion::zero(spec(), 1).unwrap();
        assert_eq!(loss_component(0, &zero, &data).unwrap(), 0.0);
        assert_eq!(loss_component(1, &zero, &data).unwrap(), 4.5);
        let f = KernelExpansion::representer(spec(), &[0.9], &[2.0]).unwrap();
        assert_eq!(loss_component(0, &f, &data).unwrap(), 2.0);
        assert!(loss_component(2, &f, &data).is_err());
    }

    #[test]
    fn total_loss_examples() {
        let data = Dataset::new(vec![vec![0.0], vec![1.0]], vec![vec![1.0], vec![-2.0]]).unwrap();
        let w = MixtureWeights::new(0.4, 2).unwrap();
        let zero = KernelExpansion::zero(spec(), 1).unwrap();
        assert_relative_eq!(loss_total(&zero, &data, &w).unwrap(), 0.6 / 4.0 * 5.0, epsilon = 1e-15);

        let data = one_point(2.0);
        let w = MixtureWeights::new(0.5, 1).unwrap();
        let f = KernelExpansion::representer(spec(), data.point(0), &[1.0]).unwrap();
        assert_relative_eq!(loss_total(&f, &data, &w).unwrap(), 0.5, epsilon = 1e-15);

        let w_bad = MixtureWeights::new(0.5, 2).unwrap();
        assert!(loss_total(&f, &data, &w_bad).is_err());
    }

    #[test]
    fn component_gradients() {
        let data = one_point(3.0);
        let f = KernelExpansion::representer(spec(), &[0.9], &[2.0]).unwrap();
        assert_eq!(riesz_grad_component(0, &f, &data).unwrap(), f);

        let zero = KernelExpansion::zero(spec(), 1).unwrap();
        let g = riesz_grad_component(1, &zero, &data).unwrap();
        assert_eq!(g, KernelExpansion::representer(spec(), &[0.25], &[-3.0]).unwrap());

        let g = riesz_grad_component(1, &f, &data).unwrap();
        let r = f.evaluate(&[0.25]).unwrap()[0] - 3.0;
        assert_relative_eq!(g.norm_sq().unwrap(), r * r, epsilon = 1e-14);
    }

    #[test]
    fn full_gradient_at_zero() {
        let data = Dataset::new(vec![vec![0.0], vec![1.0]], vec![vec![1.0], vec![-2.0]]).unwrap();
        let w = MixtureWeights::new(0.4, 2).unwrap();
        let zero = KernelExpansion::zero(spec(), 1).unwrap();
        let g = riesz_grad_full(&zero, &data, &w).unwrap();
        assert_eq!(g.centers(), data.points());
        assert_relative_eq!(g.coeffs()[0][0], -0.3, epsilon = 1e-15);
        assert_relative_eq!(g.coeffs()[1][0], 0.6, epsilon = 1e-15);
    }

    #[test]
    fn constants_examples() {
        let c = constants(&MixtureWeights::new(0.5, 3).unwrap(), &spec());
        assert_eq!((c.lambda, c.lambda_sq_lipschitz, c.embedding), (0.5, 1.0, 1.0));
        let c = constants(&MixtureWeights::new(0.3, 3).unwrap(), &spec());
        assert_relative_eq!(c.lambda_sq_lipschitz, 1.0, epsilon = 1e-15);
        assert_eq!(c.lambda, 0.3);
        for q in [0.01, 0.2, 0.5, 0.77, 0.99] {
            let c = constants(&MixtureWeights::new(q, 1).unwrap(), &spec());
            assert!(c.lambda <= c.lambda_sq_lipschitz.sqrt());
        }
    }

    #[test]
    fn bound_term_examples() {
        let zero_labels = Dataset::new(vec![vec![0.0], vec![1.0]], vec![vec![0.0], vec![0.0]]).unwrap();
        let w = MixtureWeights::new(0.3, 2).unwrap();
        let zero = KernelExpansion::zero(spec(), 1).unwrap();
        assert_eq!(bound_term(&zero, &zero_labels, &w).unwrap(), 0.0);

        // one point, q = 0.5, f* = Φ(x_1, y_1/2)
        let y = 2.0;
        let data = one_point(y);
        let w = MixtureWeights::new(0.5, 1).unwrap();
        let fstar = KernelExpansion::representer(spec(), data.point(0), &[y / 2.0]).unwrap();
        assert_relative_eq!(bound_term(&fstar, &data, &w).unwrap(), y * y / 4.0, epsilon = 1e-15);
    }
}
