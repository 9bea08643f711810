//! Ball convolutions `G∗f` (interior source) and `P∗g` (exterior data).

use super::adaptive::{integrate_with_breakpoints, tail_integral_alpha, tail_integral_doubling};
use super::angular::{sphere_rule, SphereRule, MAX_LEVEL};
use super::norms::l2s_membership;
use super::pv::ray_sphere_crossings;
use super::{QuadConfig, QuadError, ScalarField};
use crate::geom::{Ball, Point};
use crate::kernels::FracParams;
use crate::special::inc_beta;

fn check_inside(ball: &Ball, x: &Point) -> Result<(), QuadError> {
    if x.dist(&ball.center()) >= ball.radius {
        return Err(QuadError::Domain(
            "evaluation point must lie strictly inside the ball".into(),
        ));
    }
    Ok(())
}

/// `∫_B G_B(x,y) f(y) dy`, the solution at `x` of the Dirichlet problem with
/// source `f` and zero exterior data on the ball.
///
/// Polar coordinates around `x` absorb the `|x-y|^{2s-n}` diagonal: on each
/// ray the substitution `t = t_exit v^{1/(2s)}` makes the transformed
/// integrand bounded at the origin.
pub fn convolve_green(
    p: &FracParams,
    ball: &Ball,
    f: &ScalarField,
    x: &Point,
    q: &QuadConfig,
) -> Result<f64, QuadError> {
    check_inside(ball, x)?;
    q.validate()?;
    let mut prev = green_at_level(p, ball, f, x, q, &sphere_rule(p.n, 0))?;
    if p.n == 1 {
        return Ok(prev);
    }
    let mut gap = f64::NAN;
    for level in 1..=MAX_LEVEL {
        let cur = green_at_level(p, ball, f, x, q, &sphere_rule(p.n, level))?;
        gap = (cur - prev).abs();
        if gap <= 2.0 * q.abs_tol.max(q.rel_tol * cur.abs()) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(QuadError::ToleranceNotMet {
        achieved: gap,
        requested: q.rel_tol,
    })
}

fn green_at_level(
    p: &FracParams,
    ball: &Ball,
    f: &ScalarField,
    x: &Point,
    q: &QuadConfig,
    rule: &SphereRule,
) -> Result<f64, QuadError> {
    let s = p.s;
    let nf = p.n as f64;
    let r = ball.radius;
    let c = ball.center();
    let d = x.sub(&c);
    let scale = r.powf(2.0 * s - nf);
    // per-direction radial errors accumulate across the angular rule, so the
    // inner budget sits well below the level-acceptance threshold
    let inner_cfg = q.loosened(0.05);
    let spheres = f.breakpoint_spheres();

    let mut total = 0.0;
    for (theta, w) in rule.dirs.iter().zip(&rule.weights) {
        // exit parameter of the ray x + tθ from the ball
        let b_coef = d.dot(theta);
        let t_exit = -b_coef + (b_coef * b_coef + r * r - d.norm_sq()).sqrt();
        if !(t_exit > 0.0) {
            continue;
        }
        let beta_exp = 1.0 / (2.0 * s);
        let mut cuts: Vec<f64> = Vec::new();
        for sp in &spheres {
            for t in ray_sphere_crossings(x, theta, sp) {
                if t < t_exit {
                    cuts.push((t / t_exit).powf(2.0 * s));
                }
            }
        }
        let radial = integrate_with_breakpoints(
            &mut |v: f64| {
                if v <= 0.0 || v >= 1.0 {
                    return 0.0;
                }
                let t = t_exit * v.powf(beta_exp);
                let y = x.offset(theta, t);
                // unit-ball coordinates for the kernel
                let u = d.scale(1.0 / r);
                let yv = y.sub(&c).scale(1.0 / r);
                let d2 = u.sub(&yv).norm_sq();
                if d2 == 0.0 {
                    return 0.0;
                }
                let mu = (1.0 - u.norm_sq()).max(0.0);
                let mv = (1.0 - yv.norm_sq()).max(0.0);
                if mv == 0.0 {
                    return 0.0;
                }
                let rho = mu * mv / d2;
                let g = p.kappa_ns
                    * d2.sqrt().powf(2.0 * s - nf)
                    * inc_beta(rho / (1.0 + rho), s, nf / 2.0 - s);
                let jac = t.powf(nf - 1.0) * t_exit * beta_exp * v.powf(beta_exp - 1.0);
                scale * g * f.eval(&y) * jac
            },
            0.0,
            1.0,
            &cuts,
            &inner_cfg,
        )?;
        total += w * radial;
    }
    Ok(total)
}

/// `∫_{ℝⁿ\B} P_B(x,y) g(y) dy`, the harmonic extension of exterior data `g`
/// evaluated at `x` inside the ball.
///
/// Polar coordinates around the ball center; the `(t-r)^{-s}` shell
/// singularity is absorbed by `w = (t-r)^{1-s}` and the far field by the
/// power-law tail transform (or verified doubling annuli when the field
/// carries no decay hint).
pub fn convolve_poisson(
    p: &FracParams,
    ball: &Ball,
    g: &ScalarField,
    x: &Point,
    q: &QuadConfig,
) -> Result<f64, QuadError> {
    check_inside(ball, x)?;
    q.validate()?;
    if g.support_hint().is_none() && g.decay_hint().is_none() {
        let mass = l2s_membership(p, g, &q.loosened(1e4))?;
        if mass.divergent {
            return Err(QuadError::Integrability(
                "exterior data fails the weighted tail integrability test".into(),
            ));
        }
    }
    let mut prev = poisson_at_level(p, ball, g, x, q, &sphere_rule(p.n, 0))?;
    if p.n == 1 {
        return Ok(prev);
    }
    let mut gap = f64::NAN;
    for level in 1..=MAX_LEVEL {
        let cur = poisson_at_level(p, ball, g, x, q, &sphere_rule(p.n, level))?;
        gap = (cur - prev).abs();
        if gap <= 2.0 * q.abs_tol.max(q.rel_tol * cur.abs()) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(QuadError::ToleranceNotMet {
        achieved: gap,
        requested: q.rel_tol,
    })
}

fn poisson_at_level(
    p: &FracParams,
    ball: &Ball,
    g: &ScalarField,
    x: &Point,
    q: &QuadConfig,
    rule: &SphereRule,
) -> Result<f64, QuadError> {
    let s = p.s;
    let nf = p.n as f64;
    let r = ball.radius;
    let c = ball.center();
    let pref = p.c_ns * (r * r - x.sub(&c).norm_sq()).powf(s);
    let inner_cfg = q.loosened(0.05);
    let spheres = g.breakpoint_spheres();

    // angular slice of the integrand at radius t from the center
    let mut slice = |t: f64| -> f64 {
        rule.dirs
            .iter()
            .zip(&rule.weights)
            .map(|(theta, w)| {
                let y = c.offset(theta, t);
                let gv = g.eval(&y);
                if gv == 0.0 {
                    return 0.0;
                }
                w * gv * x.dist(&y).powf(-nf)
            })
            .sum::<f64>()
            * (t * t - r * r).powf(-s)
            * t.powf(nf - 1.0)
    };

    // shell [r, 2r] under w = (t-r)^{1-s}
    let wexp = 1.0 - s;
    let w_hi = r.powf(wexp);
    let shell = integrate_with_breakpoints(
        &mut |w: f64| {
            if w <= 0.0 {
                return 0.0;
            }
            let t = r + w.powf(1.0 / wexp);
            slice(t) * w.powf(s / wexp) / wexp
        },
        0.0,
        w_hi,
        &{
            let mut cuts = Vec::new();
            for sp in &spheres {
                for t in ray_crossing_radii(&c, sp) {
                    if t > r && t < 2.0 * r {
                        cuts.push((t - r).powf(wexp));
                    }
                }
            }
            cuts
        },
        &inner_cfg,
    )?;

    // middle region [2r, t_far]
    let t_far = (4.0 * r + 2.0 * x.dist(&c) + 1.0).max(q.tail_split_radius);
    let mut cuts = Vec::new();
    for sp in &spheres {
        for t in ray_crossing_radii(&c, sp) {
            if t > 2.0 * r && t < t_far {
                cuts.push(t);
            }
        }
    }
    let mid = integrate_with_breakpoints(&mut slice, 2.0 * r, t_far, &cuts, &inner_cfg)?;

    // tail beyond t_far
    let tail = if let Some(sup) = g.support_hint() {
        let bb = sup.bounding_ball();
        let t_sup = c.dist(&bb.center()) + bb.radius;
        if t_sup <= t_far {
            0.0
        } else {
            integrate_with_breakpoints(&mut slice, t_far, t_sup, &[], &inner_cfg)?
        }
    } else {
        let decay = g.decay_hint().unwrap_or(0.0);
        if decay >= 2.0 * s {
            return Err(QuadError::Integrability(format!(
                "exterior data grows like |y|^{decay}, too fast for 2s = {}",
                2.0 * s
            )));
        }
        let alpha = 2.0 * s - decay;
        if g.decay_hint().is_some() {
            tail_integral_alpha(|t| slice(t) * t.powf(1.0 + alpha), t_far, alpha, &inner_cfg)?
        } else {
            let out = tail_integral_doubling(&slice, t_far, &inner_cfg)?;
            if out.divergent {
                return Err(QuadError::Integrability(
                    "exterior data tail diverges".into(),
                ));
            }
            out.value
        }
    };

    Ok(pref * (shell + mid + tail))
}

/// Radii (from `origin`) at which concentric spheres are tangent to `sphere`.
fn ray_crossing_radii(origin: &Point, sphere: &Ball) -> Vec<f64> {
    let d = origin.dist(&sphere.center());
    let mut out = vec![(d - sphere.radius).abs(), d + sphere.radius];
    out.retain(|t| *t > 0.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use std::f64::consts::PI;

    fn cfg() -> QuadConfig {
        QuadConfig::default()
    }

    #[test]
    fn green_constant_source_gives_signature_profile() {
        // u(x) = (2/π) (1-|x|²)^{1/2} for n=2, s=1/2
        let p = FracParams::new(2, 0.5).unwrap();
        let b = Ball::unit(2);
        let one = ScalarField::constant(2, 1.0);
        let v0 = convolve_green(&p, &b, &one, &Point::zero(2), &cfg()).unwrap();
        assert!((v0 - 2.0 / PI).abs() < 1e-5, "{v0}");
        let v6 = convolve_green(&p, &b, &one, &Point::new(&[0.6, 0.0]), &cfg()).unwrap();
        let want = 2.0 / PI * (1.0f64 - 0.36).sqrt();
        assert!((v6 - want).abs() < 1e-5, "{v6} vs {want}");
    }

    #[test]
    fn green_zero_source() {
        let p = FracParams::new(2, 0.5).unwrap();
        let b = Ball::unit(2);
        let zero = ScalarField::constant(2, 0.0);
        let v = convolve_green(&p, &b, &zero, &Point::new(&[0.3, 0.2]), &cfg()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn green_profile_other_orders_and_dims() {
        // u(x) = torsion_coef (r²-|x|²)^s against quadrature, n=2 and n=3
        for &(n, s) in &[(2usize, 0.25), (2, 0.75), (3, 0.5)] {
            let p = FracParams::new(n, s).unwrap();
            let b = Ball::unit(n);
            let one = ScalarField::constant(n, 1.0);
            let coef = p.torsion_coef();
            let mut x = Point::zero(n);
            x.set(0, 0.4);
            let got = convolve_green(&p, &b, &one, &x, &cfg()).unwrap();
            let want = coef * (1.0f64 - 0.16).powf(s);
            assert!(
                (got - want).abs() < 5e-5,
                "n={n} s={s}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn green_linearity_and_positivity() {
        let p = FracParams::new(2, 0.5).unwrap();
        let b = Ball::unit(2);
        let f1 = ScalarField::radial(2, |r| 1.0 - r * r);
        let f2 = ScalarField::radial(2, |r| (2.0 * r).cos() + 1.5);
        let x = Point::new(&[0.25, -0.4]);
        let a1 = convolve_green(&p, &b, &f1, &x, &cfg()).unwrap();
        let a2 = convolve_green(&p, &b, &f2, &x, &cfg()).unwrap();
        let combo = f1.add_scaled(&f2, 2.0);
        let ac = convolve_green(&p, &b, &combo, &x, &cfg()).unwrap();
        assert!((ac - (a1 + 2.0 * a2)).abs() < 1e-7, "{ac} vs {}", a1 + 2.0 * a2);
        assert!(a1 > 0.0 && a2 > 0.0);
    }

    #[test]
    fn poisson_unit_exterior_mass() {
        let p = FracParams::new(2, 0.5).unwrap();
        let b = Ball::unit(2);
        let one = ScalarField::constant(2, 1.0);
        for xc in [[0.0, 0.0], [0.5, 0.2], [-0.8, 0.1]] {
            let v = convolve_poisson(&p, &b, &one, &Point::new(&xc), &cfg()).unwrap();
            assert!((v - 1.0).abs() < 1e-6, "x={xc:?}: {v}");
        }
    }

    #[test]
    fn poisson_halfspace_symmetry() {
        let p = FracParams::new(2, 0.5).unwrap();
        let b = Ball::unit(2);
        let half = ScalarField::from_fn(2, |y: &Point| if y.get(0) > 0.0 { 1.0 } else { 0.0 })
            .with_decay(0.0);
        let v = convolve_poisson(&p, &b, &half, &Point::zero(2), &cfg()).unwrap();
        assert!((v - 0.5).abs() < 1e-6, "{v}");
    }

    #[test]
    fn poisson_zero_and_positivity() {
        let p = FracParams::new(2, 0.25).unwrap();
        let b = Ball::unit(2);
        let zero = ScalarField::constant(2, 0.0);
        assert_eq!(
            convolve_poisson(&p, &b, &zero, &Point::zero(2), &cfg()).unwrap(),
            0.0
        );
        let pos = ScalarField::radial(2, |r| 1.0 / (1.0 + r * r)).with_decay(-2.0);
        let v = convolve_poisson(&p, &b, &pos, &Point::new(&[0.3, 0.3]), &cfg()).unwrap();
        assert!(v > 0.0);
    }

    #[test]
    fn poisson_compact_support_exterior_indicator() {
        // g = indicator of a far ball: P∗g < 1 and positive
        let p = FracParams::new(2, 0.5).unwrap();
        let b = Ball::unit(2);
        let blob = Domain::ball(Ball::new(Point::new(&[3.0, 0.0]), 0.5));
        let g = ScalarField::indicator(&blob);
        // a sharp angular silhouette limits the product rule; a loose
        // tolerance is appropriate for indicator data
        let loose = QuadConfig {
            rel_tol: 2e-3,
            abs_tol: 1e-5,
            ..QuadConfig::default()
        };
        let v = convolve_poisson(&p, &b, &g, &Point::zero(2), &loose).unwrap();
        assert!(v > 0.0 && v < 0.1, "{v}");
    }

    #[test]
    fn poisson_matches_regular_part_of_green() {
        // P∗[Φ(·-y)](x) = Φ(x-y) - G(x,y): exterior data given by the shifted
        // fundamental solution reproduces the Green regular part.
        let p = FracParams::new(2, 0.5).unwrap();
        let b = Ball::unit(2);
        let y = Point::new(&[0.3, 0.1]);
        let nf = 2.0;
        let g_ext = ScalarField::from_fn(2, move |z: &Point| {
            p.a_ns * z.dist(&y).powf(2.0 * p.s - nf)
        })
        .with_decay(2.0 * p.s - nf);
        for xc in [[0.0, 0.0], [-0.4, 0.2], [0.6, -0.1]] {
            let x = Point::new(&xc);
            let got = convolve_poisson(&p, &b, &g_ext, &x, &cfg()).unwrap();
            let want = crate::kernels::green_regular_part(&p, &b, &x, &y).unwrap();
            assert!((got - want).abs() < 1e-6, "x={xc:?}: {got} vs {want}");
        }
    }
}
