//! Regularizer oracles `g` exposing a proximal map and a conjugate, plus the
//! extended Moreau decomposition used for every `prox_{αg*}` evaluation.

use nalgebra::DVector;

use super::{OracleError, PolytopeOracle, Support};

/// Multipliers produced by the Moreau route for `g ≡ 0` carry roundoff dust
/// of order machine epsilon times the iterate scale; the conjugate of zero
/// (the indicator of the origin) must still evaluate them as zero.
const ZERO_CONJUGATE_TOL: f64 = 1e-9;

/// Oracle interface for a proper closed convex regularizer `g`.
///
/// Shipped implementations are indicators ([`PolytopeOracle`], [`BoxOracle`])
/// and the zero function ([`ZeroOracle`]). Other convex `g` (e.g. ℓ1) fit the
/// same interface but are not shipped.
pub trait Regularizer {
    fn dim(&self) -> usize;

    /// `prox_{αg}(v)`. For indicators this is the Euclidean projection,
    /// independent of `α`.
    fn prox(&self, v: &DVector<f64>, alpha: f64) -> Result<DVector<f64>, OracleError>;

    /// `g*(mu)`, possibly `+∞`.
    fn conjugate(&self, mu: &DVector<f64>) -> Result<Support, OracleError>;

    /// `g(x)`, possibly `+∞` (indicator oracles use a small feasibility
    /// tolerance).
    fn eval(&self, x: &DVector<f64>) -> Support;

    /// `prox_{β·g*}(w)` by a closed form that does not go through the Moreau
    /// identity, where one exists. Used as the independent side of
    /// [`moreau_check`].
    fn direct_conjugate_prox(&self, beta: f64, w: &DVector<f64>) -> Option<DVector<f64>>;
}

/// `g ≡ 0`; its conjugate is the indicator of the origin.
#[derive(Debug, Clone)]
pub struct ZeroOracle {
    dim: usize,
}

impl ZeroOracle {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl Regularizer for ZeroOracle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn prox(&self, v: &DVector<f64>, _alpha: f64) -> Result<DVector<f64>, OracleError> {
        Ok(v.clone())
    }

    fn conjugate(&self, mu: &DVector<f64>) -> Result<Support, OracleError> {
        if mu.amax() <= ZERO_CONJUGATE_TOL {
            Ok(Support::Finite(0.0))
        } else {
            Ok(Support::Infinite)
        }
    }

    fn eval(&self, _x: &DVector<f64>) -> Support {
        Support::Finite(0.0)
    }

    fn direct_conjugate_prox(&self, _beta: f64, _w: &DVector<f64>) -> Option<DVector<f64>> {
        Some(DVector::zeros(self.dim))
    }
}

/// Indicator of the box `[lo, hi]` componentwise.
#[derive(Debug, Clone)]
pub struct BoxOracle {
    lo: DVector<f64>,
    hi: DVector<f64>,
}

impl BoxOracle {
    pub fn new(lo: DVector<f64>, hi: DVector<f64>) -> Result<Self, OracleError> {
        if lo.len() != hi.len() {
            return Err(OracleError::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        let ok = lo
            .iter()
            .zip(hi.iter())
            .all(|(&l, &h)| l.is_finite() && h.is_finite() && l <= h);
        if !ok {
            return Err(OracleError::BadBox);
        }
        Ok(Self { lo, hi })
    }

    pub fn bounds(&self) -> (&DVector<f64>, &DVector<f64>) {
        (&self.lo, &self.hi)
    }
}

impl Regularizer for BoxOracle {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn prox(&self, v: &DVector<f64>, _alpha: f64) -> Result<DVector<f64>, OracleError> {
        Ok(DVector::from_fn(v.len(), |k, _| {
            v[k].clamp(self.lo[k], self.hi[k])
        }))
    }

    /// Support function of the box: `Σ_k max(lo_k·μ_k, hi_k·μ_k)`.
    fn conjugate(&self, mu: &DVector<f64>) -> Result<Support, OracleError> {
        let v = mu
            .iter()
            .enumerate()
            .map(|(k, &m)| (self.lo[k] * m).max(self.hi[k] * m))
            .sum();
        Ok(Support::Finite(v))
    }

    fn eval(&self, x: &DVector<f64>) -> Support {
        let inside = x.iter().enumerate().all(|(k, &xk)| {
            let tol = 1e-9 * (1.0 + self.lo[k].abs().max(self.hi[k].abs()));
            xk >= self.lo[k] - tol && xk <= self.hi[k] + tol
        });
        if inside {
            Support::Finite(0.0)
        } else {
            Support::Infinite
        }
    }

    /// Per coordinate: minimize `max(lo·u, hi·u) + (u−w)²/(2β)`, a two-sided
    /// shrinkage around zero.
    fn direct_conjugate_prox(&self, beta: f64, w: &DVector<f64>) -> Option<DVector<f64>> {
        Some(DVector::from_fn(w.len(), |k, _| {
            let up = w[k] - beta * self.hi[k];
            let down = w[k] - beta * self.lo[k];
            if up > 0.0 {
                up
            } else if down < 0.0 {
                down
            } else {
                0.0
            }
        }))
    }
}

/// Closed set of shipped regularizers, so problem instances stay concrete
/// and cloneable.
#[derive(Debug, Clone)]
pub enum RegularizerKind {
    Zero(ZeroOracle),
    Polytope(PolytopeOracle),
    Box(BoxOracle),
}

impl RegularizerKind {
    pub fn as_regularizer(&self) -> &dyn Regularizer {
        match self {
            RegularizerKind::Zero(z) => z,
            RegularizerKind::Polytope(p) => p,
            RegularizerKind::Box(b) => b,
        }
    }

    /// The indicator's projection, when this regularizer is an indicator.
    pub fn indicator_projection(
        &self,
        v: &DVector<f64>,
    ) -> Option<Result<DVector<f64>, OracleError>> {
        match self {
            RegularizerKind::Zero(_) => None,
            RegularizerKind::Polytope(p) => Some(p.project(v)),
            RegularizerKind::Box(b) => Some(b.prox(v, 1.0)),
        }
    }
}

impl Regularizer for RegularizerKind {
    fn dim(&self) -> usize {
        self.as_regularizer().dim()
    }

    fn prox(&self, v: &DVector<f64>, alpha: f64) -> Result<DVector<f64>, OracleError> {
        self.as_regularizer().prox(v, alpha)
    }

    fn conjugate(&self, mu: &DVector<f64>) -> Result<Support, OracleError> {
        self.as_regularizer().conjugate(mu)
    }

    fn eval(&self, x: &DVector<f64>) -> Support {
        self.as_regularizer().eval(x)
    }

    fn direct_conjugate_prox(&self, beta: f64, w: &DVector<f64>) -> Option<DVector<f64>> {
        self.as_regularizer().direct_conjugate_prox(beta, w)
    }
}

impl Regularizer for PolytopeOracle {
    fn dim(&self) -> usize {
        PolytopeOracle::dim(self)
    }

    fn prox(&self, v: &DVector<f64>, _alpha: f64) -> Result<DVector<f64>, OracleError> {
        self.project(v)
    }

    fn conjugate(&self, mu: &DVector<f64>) -> Result<Support, OracleError> {
        self.support(mu)
    }

    fn eval(&self, x: &DVector<f64>) -> Support {
        if self.contains(x, 1e-9) {
            Support::Finite(0.0)
        } else {
            Support::Infinite
        }
    }

    fn direct_conjugate_prox(&self, beta: f64, w: &DVector<f64>) -> Option<DVector<f64>> {
        PolytopeOracle::direct_conjugate_prox(self, beta, w)
    }
}

/// `prox_{αg*}(v)` via the extended Moreau decomposition:
/// `prox_{αg*}(v) = v − α·prox_{(1/α)g}(v/α)`.
pub fn prox_conjugate(
    g: &dyn Regularizer,
    alpha: f64,
    v: &DVector<f64>,
) -> Result<DVector<f64>, OracleError> {
    if alpha <= 0.0 {
        return Err(OracleError::BadStepSize(alpha));
    }
    let inner = g.prox(&(v / alpha), 1.0 / alpha)?;
    Ok(v - alpha * inner)
}

/// Residual `‖v − prox_{αg}(v) − α·prox_{(1/α)g*}(v/α)‖` of the extended
/// Moreau decomposition, with the conjugate prox computed by the oracle's
/// independent closed form. Zero up to roundoff for a correct oracle pair.
pub fn moreau_check(
    g: &dyn Regularizer,
    alpha: f64,
    v: &DVector<f64>,
) -> Result<f64, OracleError> {
    if alpha <= 0.0 {
        return Err(OracleError::BadStepSize(alpha));
    }
    let primal = g.prox(v, alpha)?;
    let conj = g
        .direct_conjugate_prox(1.0 / alpha, &(v / alpha))
        .ok_or(OracleError::NoDirectConjugateProx)?;
    Ok((v - primal - alpha * conj).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_oracle_conjugate_prox_is_origin() {
        let g = ZeroOracle::new(3);
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let p = prox_conjugate(&g, 1.0, &v).unwrap();
        assert_eq!(p, DVector::zeros(3));
    }

    #[test]
    fn halfspace_conjugate_prox_scalar_cases() {
        // g = I_{x ≤ 0} in 1-D: prox_{g*}(v) = max(v, 0)
        let g = PolytopeOracle::halfspace(DVector::from_element(1, 1.0), 0.0).unwrap();
        let neg = prox_conjugate(&g, 1.0, &DVector::from_element(1, -3.0)).unwrap();
        assert_relative_eq!(neg[0], 0.0);
        let pos = prox_conjugate(&g, 1.0, &DVector::from_element(1, 2.0)).unwrap();
        assert_relative_eq!(pos[0], 2.0);
    }

    #[test]
    fn moreau_residual_zero_oracle_is_exact() {
        let g = ZeroOracle::new(2);
        let v = DVector::from_vec(vec![0.3, -7.1]);
        assert_eq!(moreau_check(&g, 1.0, &v).unwrap(), 0.0);
    }

    #[test]
    fn moreau_residual_halfspace_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let a = DVector::from_fn(2, |_, _| rng.gen_range(-3.0..3.0));
            if a.norm() < 0.1 {
                continue;
            }
            let g = PolytopeOracle::halfspace(a, rng.gen_range(-2.0..2.0)).unwrap();
            let v = DVector::from_fn(2, |_, _| rng.gen_range(-10.0..10.0));
            for alpha in [0.5, 1.0, 2.0] {
                assert!(moreau_check(&g, alpha, &v).unwrap() <= 1e-9);
            }
        }
    }

    #[test]
    fn moreau_residual_box_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let lo = DVector::from_fn(2, |_, _| rng.gen_range(-3.0..0.0));
            let hi = DVector::from_fn(2, |_, _| rng.gen_range(0.0..3.0));
            let g = BoxOracle::new(lo, hi).unwrap();
            let v = DVector::from_fn(2, |_, _| rng.gen_range(-10.0..10.0));
            for alpha in [0.5, 1.0, 2.0] {
                assert!(moreau_check(&g, alpha, &v).unwrap() <= 1e-9);
            }
        }
    }

    #[test]
    fn moreau_check_unavailable_for_general_polytopes() {
        let a = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        let g = PolytopeOracle::new(a, b).unwrap();
        assert!(matches!(
            moreau_check(&g, 1.0, &DVector::zeros(2)),
            Err(OracleError::NoDirectConjugateProx)
        ));
    }

    #[test]
    fn box_conjugate_is_support_function() {
        let g = BoxOracle::new(
            DVector::from_vec(vec![-1.0, -2.0]),
            DVector::from_vec(vec![3.0, 0.5]),
        )
        .unwrap();
        let s = g.conjugate(&DVector::from_vec(vec![2.0, -4.0])).unwrap();
        // 2·3 + (−4)·(−2) = 14
        assert_eq!(s, Support::Finite(14.0));
    }

    #[test]
    fn prox_conjugate_rejects_bad_alpha() {
        let g = ZeroOracle::new(1);
        assert!(prox_conjugate(&g, 0.0, &DVector::zeros(1)).is_err());
        assert!(moreau_check(&g, -1.0, &DVector::zeros(1)).is_err());
    }
}
