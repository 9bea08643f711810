//! Function-valued objects over `ℝⁿ` with evaluation hints.

use crate::domain::Domain;
use crate::geom::Point;
use std::sync::Arc;

/// Declared regularity of a field, as relevant to the quadrature routines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Smoothness {
    C2,
    C0,
    Measurable,
}

/// A scalar field on `ℝⁿ`: an evaluator plus optional hints that the
/// quadrature layer exploits (support geometry for breakpoints, power-law
/// decay for analytic tails).
///
/// Evaluators must be pure and thread-safe; integrands may be evaluated
/// concurrently.
#[derive(Clone)]
pub struct ScalarField {
    eval: Arc<dyn Fn(&Point) -> f64 + Send + Sync>,
    dim: usize,
    support: Option<Domain>,
    smoothness: Smoothness,
    decay: Option<f64>,
    /// Spheres across which the field is known to lose smoothness, beyond
    /// what the support boundary already implies. Quadrature forces
    /// subdivision there.
    feature_spheres: Vec<crate::geom::Ball>,
    /// Spheres on which the field is unbounded; the principal-value
    /// evaluator carves a band around each and integrates it separately in
    /// sphere-centered coordinates.
    blowup_spheres: Vec<crate::geom::Ball>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("smoothness", &self.smoothness)
            .field("decay", &self.decay)
            .field("has_support_hint", &self.support.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn from_fn(dim: usize, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField {
            eval: Arc::new(f),
            dim,
            support: None,
            smoothness: Smoothness::C2,
            decay: None,
            feature_spheres: Vec::new(),
            blowup_spheres: Vec::new(),
        }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self::from_fn(dim, move |_| value).with_decay(0.0)
    }

    /// Field depending only on `|x|`.
    pub fn radial(dim: usize, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::from_fn(dim, move |x: &Point| f(x.norm()))
    }

    /// Indicator of a domain; measurable, compactly supported.
    pub fn indicator(dom: &Domain) -> Self {
        let d = dom.clone();
        let dim = dom.dim();
        ScalarField {
            eval: Arc::new(move |x: &Point| if d.contains(x) { 1.0 } else { 0.0 }),
            dim,
            support: Some(dom.clone()),
            smoothness: Smoothness::Measurable,
            decay: None,
            feature_spheres: Vec::new(),
            blowup_spheres: Vec::new(),
        }
    }

    pub fn with_support(mut self, dom: Domain) -> Self {
        self.support = Some(dom);
        self
    }

    pub fn with_smoothness(mut self, s: Smoothness) -> Self {
        self.smoothness = s;
        self
    }

    pub fn with_decay(mut self, exponent: f64) -> Self {
        self.decay = Some(exponent);
        self
    }

    pub fn with_feature_sphere(mut self, sphere: crate::geom::Ball) -> Self {
        self.feature_spheres.push(sphere);
        self
    }

    pub fn with_blowup_sphere(mut self, sphere: crate::geom::Ball) -> Self {
        self.blowup_spheres.push(sphere);
        self
    }

    pub fn blowup_spheres(&self) -> &[crate::geom::Ball] {
        &self.blowup_spheres
    }

    /// All spheres where radial quadrature should force breakpoints: declared
    /// feature spheres plus the support's primitive boundaries.
    pub fn breakpoint_spheres(&self) -> Vec<crate::geom::Ball> {
        let mut out = self.feature_spheres.clone();
        out.extend(self.blowup_spheres.iter().copied());
        if let Some(dom) = &self.support {
            out.extend(dom.primitive_spheres());
        }
        out
    }

    #[inline]
    pub fn eval(&self, x: &Point) -> f64 {
        (self.eval)(x)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_hint(&self) -> Option<&Domain> {
        self.support.as_ref()
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn decay_hint(&self) -> Option<f64> {
        self.decay
    }

    /// `self + coef * other`, keeping the weaker smoothness hint and no
    /// support hint unless both agree.
    pub fn add_scaled(&self, other: &ScalarField, coef: f64) -> ScalarField {
        assert_eq!(self.dim, other.dim);
        let a = self.clone();
        let b = other.clone();
        let smooth = match (self.smoothness, other.smoothness) {
            (Smoothness::C2, Smoothness::C2) => Smoothness::C2,
            (Smoothness::Measurable, _) | (_, Smoothness::Measurable) => Smoothness::Measurable,
            _ => Smoothness::C0,
        };
        let decay = match (self.decay, other.decay) {
            (Some(p), Some(q)) => Some(p.max(q)),
            _ => None,
        };
        let mut spheres = self.feature_spheres.clone();
        spheres.extend(other.feature_spheres.iter().copied());
        ScalarField {
            eval: Arc::new(move |x: &Point| a.eval(x) + coef * b.eval(x)),
            dim: self.dim,
            support: None,
            smoothness: smooth,
            decay,
            feature_spheres: spheres,
            blowup_spheres: Vec::new(),
        }
    }

    /// Spot-samples the decay bound `|u(y)| ≤ C (1+|y|)^p`; returns the
    /// smallest `C` observed over shells out to `r_max`.
    pub fn observed_decay_constant(&self, r_max: f64, samples: usize) -> Option<f64> {
        let p = self.decay?;
        let mut c_max: f64 = 0.0;
        for i in 0..samples {
            let t = r_max * (i as f64 + 0.5) / samples as f64;
            let mut x = Point::zero(self.dim);
            x.set(0, t);
            if self.dim > 1 {
                x.set(1, 0.37 * t * ((i * 2654435761) % 1000) as f64 / 1000.0);
            }
            let r = x.norm();
            let bound = (1.0 + r).powf(p);
            c_max = c_max.max(self.eval(&x).abs() / bound);
        }
        Some(c_max)
    }
}

/// Values of a radial function interpolated by C¹ cubic Hermite pieces.
///
/// Node derivatives come from second-order finite differences on the
/// (possibly nonuniform) grid, so the table reproduces smooth radial profiles
/// to O(h³) without the monotonicity clamping of shape-preserving schemes.
#[derive(Clone, Debug)]
pub struct RadialTable {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl RadialTable {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len());
        assert!(
            x.windows(2).all(|w| w[1] > w[0]),
            "radial nodes must be strictly increasing"
        );
        let m = x.len();
        let mut d = vec![0.0; m];
        for i in 0..m {
            if i == 0 {
                let h0 = x[1] - x[0];
                let h1 = x[2.min(m - 1)] - x[1];
                if m > 2 {
                    // one-sided 3-point estimate
                    d[0] = -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * y[0]
                        + (h0 + h1) / (h0 * h1) * y[1]
                        - h0 / (h1 * (h0 + h1)) * y[2];
                } else {
                    d[0] = (y[1] - y[0]) / h0;
                }
            } else if i == m - 1 {
                let h1 = x[m - 1] - x[m - 2];
                if m > 2 {
                    let h0 = x[m - 2] - x[m - 3];
                    d[i] = h1 / (h0 * (h0 + h1)) * y[m - 3]
                        - (h0 + h1) / (h0 * h1) * y[m - 2]
                        + (h0 + 2.0 * h1) / (h1 * (h0 + h1)) * y[m - 1];
                } else {
                    d[i] = (y[1] - y[0]) / h1;
                }
            } else {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                d[i] = (y[i + 1] * h0 * h0 - y[i - 1] * h1 * h1
                    + y[i] * (h1 * h1 - h0 * h0))
                    / (h0 * h1 * (h0 + h1));
            }
        }
        RadialTable { x, y, d }
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (lo, hi) = self.range();
        let t = t.clamp(lo, hi);
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        };
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.d[i], self.d[i + 1]);
        let u2 = u * u;
        let u3 = u2 * u;
        y0 * (2.0 * u3 - 3.0 * u2 + 1.0)
            + d0 * h * (u3 - 2.0 * u2 + u)
            + y1 * (-2.0 * u3 + 3.0 * u2)
            + d1 * h * (u3 - u2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_table_reproduces_cubics_exactly_enough() {
        let f = |t: f64| 0.3 * t * t * t - 1.2 * t * t + t + 0.5;
        let xs: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&t| f(t)).collect();
        let tab = RadialTable::new(xs, ys);
        for i in 0..200 {
            let t = i as f64 / 199.0;
            assert!((tab.eval(t) - f(t)).abs() < 2e-6, "t={t}");
        }
    }

    #[test]
    fn radial_table_smooth_transcendental() {
        let f = |t: f64| (3.0 * t).sin() * (-t).exp();
        let xs: Vec<f64> = (0..=400).map(|i| i as f64 * 2.0 / 400.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&t| f(t)).collect();
        let tab = RadialTable::new(xs, ys);
        for i in 0..500 {
            let t = i as f64 * 2.0 / 499.0;
            assert!((tab.eval(t) - f(t)).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn field_combinators() {
        let a = ScalarField::constant(2, 2.0);
        let b = ScalarField::radial(2, |r| r * r);
        let c = a.add_scaled(&b, -1.0);
        let x = Point::new(&[0.6, 0.8]);
        assert!((c.eval(&x) - (2.0 - 1.0)).abs() < 1e-15);
    }
}
