//! Membership test for the weighted tail class `𝓛_{2s}` and
//! boundary-distance-weighted Lebesgue norms.

use super::adaptive::{
    integrate_graded, integrate_with_breakpoints, integrate_with_roundoff_fallback,
    tail_integral_alpha, tail_integral_doubling,
};
use super::angular::{sphere_rule, MAX_LEVEL};
use super::{QuadConfig, QuadError, ScalarField};
use crate::domain::Domain;
use crate::geom::Point;
use crate::kernels::FracParams;
use serde::Serialize;

/// Outcome of the `𝓛_{2s}` tail integral `∫ |u(y)| / (1+|y|^{n+2s}) dy`.
#[derive(Clone, Copy, Debug)]
pub struct L2sMass {
    pub value: f64,
    pub divergent: bool,
}

/// Weighted tail integral deciding membership in the distributional domain
/// of `(-Δ)^s`. A divergent tail is reported as a flag, not an error; errors
/// are reserved for exhausted budgets.
pub fn l2s_membership(
    p: &FracParams,
    u: &ScalarField,
    q: &QuadConfig,
) -> Result<L2sMass, QuadError> {
    q.validate()?;
    let n = p.n;
    let nf = n as f64;
    let s = p.s;
    let origin = Point::zero(n);

    if let Some(d) = u.decay_hint() {
        if d >= 2.0 * s {
            return Ok(L2sMass {
                value: f64::INFINITY,
                divergent: true,
            });
        }
    }

    let mut prev: Option<f64> = None;
    for level in 0..=MAX_LEVEL {
        let rule = sphere_rule(n, level);
        let slice = |t: f64| -> f64 {
            let shell: f64 = rule
                .dirs
                .iter()
                .zip(&rule.weights)
                .map(|(th, w)| w * u.eval(&origin.offset(th, t)).abs())
                .sum();
            shell * t.powf(nf - 1.0) / (1.0 + t.powf(nf + 2.0 * s))
        };
        let cuts: Vec<f64> = super::pv::tangency_radii(&origin, &u.breakpoint_spheres());
        let t_split = q.tail_split_radius;
        let head = integrate_with_roundoff_fallback(
            &mut |t| slice(t),
            0.0,
            t_split,
            &cuts,
            &q.loosened(0.25),
        )?;
        let (tail, divergent) = if let Some(sup) = u.support_hint() {
            let bb = sup.bounding_ball();
            let t_sup = bb.center().norm() + bb.radius;
            if t_sup <= t_split {
                (0.0, false)
            } else {
                (
                    integrate_with_breakpoints(
                        &mut |t| slice(t),
                        t_split,
                        t_sup,
                        &cuts,
                        &q.loosened(0.25),
                    )?,
                    false,
                )
            }
        } else if let Some(d) = u.decay_hint() {
            let alpha = 2.0 * s - d;
            (
                tail_integral_alpha(
                    |t| slice(t) * t.powf(1.0 + alpha),
                    t_split,
                    alpha,
                    &q.loosened(0.25),
                )?,
                false,
            )
        } else {
            let out = tail_integral_doubling(&slice, t_split, &q.loosened(0.25))?;
            (out.value, out.divergent)
        };
        if divergent {
            return Ok(L2sMass {
                value: f64::INFINITY,
                divergent: true,
            });
        }
        let total = head + tail;
        if n == 1 {
            return Ok(L2sMass {
                value: total,
                divergent: false,
            });
        }
        if let Some(pr) = prev {
            if (total - pr).abs() <= q.abs_tol.max(q.rel_tol * total.abs()) {
                return Ok(L2sMass {
                    value: total,
                    divergent: false,
                });
            }
        }
        prev = Some(total);
    }
    Err(QuadError::ToleranceNotMet {
        achieved: f64::NAN,
        requested: q.rel_tol,
    })
}

/// A computed `‖dist(·, ℝⁿ\Ω)^σ f‖_{L^p(Ω)}`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WeightedNorm {
    pub p: f64,
    pub sigma: f64,
    pub value: f64,
}

/// Boundary-weighted norm over `Ω` by polar quadrature around the domain
/// anchor, with graded refinement toward the boundary where the weight is
/// singular. `p = ∞` is the sampled essential sup.
pub fn weighted_norm(
    params: &FracParams,
    dom: &Domain,
    f: &ScalarField,
    p_exp: f64,
    sigma: f64,
    q: &QuadConfig,
) -> Result<WeightedNorm, QuadError> {
    if sigma.abs() > params.s {
        return Err(QuadError::Domain(format!(
            "weight exponent |σ| = {} exceeds s = {}",
            sigma.abs(),
            params.s
        )));
    }
    if !(p_exp >= 1.0) {
        return Err(QuadError::Domain(format!("p = {p_exp} out of [1, ∞]")));
    }
    q.validate()?;
    let n = dom.dim();
    let nf = n as f64;
    let anchor = dom.anchor();

    if p_exp.is_infinite() {
        // deterministic ray scan
        let rule = sphere_rule(n, 3);
        let mut sup: f64 = 0.0;
        for th in &rule.dirs {
            for seg in dom.ray_segments(&anchor, th) {
                for i in 0..64 {
                    let t = seg.0 + (seg.1 - seg.0) * (i as f64 + 0.5) / 64.0;
                    let x = anchor.offset(th, t);
                    let d = dom.dist_boundary(&x).max(0.0);
                    if d > 0.0 {
                        sup = sup.max(d.powf(sigma) * f.eval(&x).abs());
                    }
                }
            }
        }
        return Ok(WeightedNorm {
            p: p_exp,
            sigma,
            value: sup,
        });
    }

    let mut prev: Option<f64> = None;
    for level in 0..=MAX_LEVEL {
        let rule = sphere_rule(n, level);
        let mut total = 0.0;
        for (th, w) in rule.dirs.iter().zip(&rule.weights) {
            for seg in dom.ray_segments(&anchor, th) {
                let v = integrate_graded(
                    &mut |t: f64| {
                        let x = anchor.offset(th, t);
                        let d = dom.dist_boundary(&x);
                        if d <= 0.0 {
                            return 0.0;
                        }
                        (d.powf(sigma) * f.eval(&x).abs()).powf(p_exp) * t.powf(nf - 1.0)
                    },
                    seg.0,
                    seg.1,
                    &q.loosened(0.25),
                )?;
                total += w * v;
            }
        }
        let norm = total.powf(1.0 / p_exp);
        if n == 1 {
            return Ok(WeightedNorm {
                p: p_exp,
                sigma,
                value: norm,
            });
        }
        if let Some(pr) = prev {
            if (norm - pr).abs() <= q.abs_tol.max(q.rel_tol * norm.abs()) {
                return Ok(WeightedNorm {
                    p: p_exp,
                    sigma,
                    value: norm,
                });
            }
        }
        prev = Some(norm);
    }
    Err(QuadError::ToleranceNotMet {
        achieved: f64::NAN,
        requested: q.rel_tol,
    })
}
