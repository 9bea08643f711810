//! Smooth mollification `J_ε[u] = j_ε ∗ u` with the standard bump kernel.

use super::adaptive::integrate_1d;
use super::angular::sphere_rule;
use super::{QuadConfig, ScalarField, Smoothness};
use crate::geom::{sphere_area, Point};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// `exp(-1/(1-|x|²))` on the open unit ball, zero outside.
fn bump(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

/// Unit-mass normalization `Z_n = ω_{n-1} ∫₀¹ bump(t) t^{n-1} dt`, cached
/// per dimension.
fn bump_mass(n: usize) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<usize, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    *guard.entry(n).or_insert_with(|| {
        let cfg = QuadConfig {
            rel_tol: 1e-13,
            abs_tol: 1e-15,
            ..QuadConfig::default()
        };
        sphere_area(n)
            * integrate_1d(|t| bump(t) * t.powf(n as f64 - 1.0), 0.0, 1.0, &cfg).unwrap()
    })
}

/// Mollification of `u` at scale `eps`. The result is smooth, preserves
/// nonnegativity, has unit-mass kernel by construction, and grows the support
/// by `eps`.
pub fn mollify(u: &ScalarField, eps: f64) -> ScalarField {
    assert!(eps > 0.0, "mollification scale must be positive");
    let n = u.dim();
    let z = bump_mass(n);
    let field = u.clone();
    let rule = sphere_rule(n, 2);
    let cfg = QuadConfig {
        rel_tol: 1e-9,
        abs_tol: 1e-12,
        ..QuadConfig::default()
    };
    let support = u
        .support_hint()
        .and_then(|dom| dom.shift_outer(eps).ok());
    let mut out = ScalarField::from_fn(n, move |x: &Point| {
        let radial = integrate_1d(
            |t: f64| {
                let shell: f64 = rule
                    .dirs
                    .iter()
                    .zip(&rule.weights)
                    .map(|(th, w)| w * field.eval(&x.offset(th, -eps * t)))
                    .sum();
                bump(t) * t.powf(n as f64 - 1.0) * shell
            },
            0.0,
            1.0,
            &cfg,
        )
        .unwrap_or(f64::NAN);
        radial / z
    })
    .with_smoothness(Smoothness::C2);
    if let Some(dom) = support {
        out = out.with_support(dom);
    }
    if let Some(d) = u.decay_hint() {
        out = out.with_decay(d);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::geom::Ball;

    #[test]
    fn kernel_mass_is_one() {
        let one = ScalarField::constant(2, 1.0);
        let j = mollify(&one, 0.3);
        for c in [[0.0, 0.0], [1.0, -2.0], [0.2, 0.7]] {
            let v = j.eval(&Point::new(&c));
            assert!((v - 1.0).abs() < 1e-8, "{v}");
        }
    }

    #[test]
    fn disjoint_support_evaluates_to_zero() {
        let dom = Domain::ball(Ball::unit(2));
        let chi = ScalarField::indicator(&dom);
        let eps = 0.2;
        let j = mollify(&chi, eps);
        // dist(x, Ω) > ε: untouched by the mollified indicator
        let x = Point::new(&[1.5, 0.0]);
        assert!(j.eval(&x).abs() < 1e-12);
        // deep inside the plateau: exactly 1
        let x = Point::new(&[0.3, 0.0]);
        assert!((j.eval(&x) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn plateau_of_dilated_indicator() {
        // η = J_ε[χ_{Ω^{2ε}}] is 1 wherever dist(x, Ω) ≤ ε
        let dom = Domain::ball(Ball::unit(2));
        let eps = 0.1;
        let dilated = dom.shift_outer(2.0 * eps).unwrap();
        let eta = mollify(&ScalarField::indicator(&dilated), eps);
        for c in [[0.0, 0.0], [1.05, 0.0], [0.0, -1.09]] {
            let x = Point::new(&c);
            assert!(dom.dist_boundary(&x) > -eps - 1e-12);
            let v = eta.eval(&x);
            assert!((v - 1.0).abs() < 1e-8, "x={c:?}: {v}");
        }
        // and 0 at distance ≥ 3ε
        let x = Point::new(&[1.0 + 3.0 * eps + 1e-6, 0.0]);
        assert!(eta.eval(&x).abs() < 1e-12);
    }

    #[test]
    fn converges_pointwise_on_continuous_fields() {
        let u = ScalarField::from_fn(2, |x: &Point| (x.get(0) - 0.3).abs() + x.get(1));
        let x = Point::new(&[0.3, 0.4]);
        let exact = u.eval(&x);
        let mut errs = Vec::new();
        for &eps in &[0.2, 0.1, 0.05] {
            errs.push((mollify(&u, eps).eval(&x) - exact).abs());
        }
        // at the kink the smoothing error is ∝ ε
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
        let ratio = errs[2] / errs[1];
        assert!((ratio - 0.5).abs() < 0.1, "{errs:?}");
    }

    #[test]
    fn commutes_with_translation_on_samples() {
        let u = ScalarField::from_fn(2, |x: &Point| (1.3 * x.get(0)).sin() * (0.7 * x.get(1)).cos());
        let shift = Point::new(&[0.25, -0.4]);
        let u_shift = {
            let u = u.clone();
            ScalarField::from_fn(2, move |x: &Point| u.eval(&x.sub(&shift)))
        };
        let eps = 0.15;
        let a = mollify(&u, eps);
        let b = mollify(&u_shift, eps);
        for c in [[0.0, 0.0], [0.5, 0.2], [-0.3, 0.8]] {
            let x = Point::new(&c);
            let lhs = a.eval(&x.sub(&shift));
            let rhs = b.eval(&x);
            assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
        }
    }
}
