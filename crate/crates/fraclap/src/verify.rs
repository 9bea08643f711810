//! Identity and inequality checkers with measured constants, packaged as
//! structured reports.
//!
//! Bounds with unspecified constants are checked for finiteness and
//! refinement stability: the sampled supremum must not double when the
//! sample count doubles. Identities carry explicit tolerances.

use crate::domain::Domain;
use crate::geom::{Ball, Point};
use crate::kernels::{
    self, green_exterior_ball, phi, poisson_ball, poisson_exterior_ball, FracParams,
};
use crate::quadrature::{
    convolve_green, convolve_poisson, frac_laplacian_pv, integrate_with_breakpoints,
    l2s_membership, weighted_norm, QuadConfig, RadialTable, ScalarField,
};
use crate::solver::{self, Classification, WalkConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

/// Structured outcome of one check.
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticReport {
    pub check_name: String,
    pub anchor: String,
    pub sample_count: usize,
    pub measured_constant: Option<f64>,
    pub pass: bool,
    pub tolerance: f64,
    pub details: Vec<WorstCase>,
}

/// A recorded extremal sample: enough to re-assert the predicate.
#[derive(Clone, Debug, Serialize)]
pub struct WorstCase {
    pub points: Vec<Vec<f64>>,
    pub value: f64,
    pub note: String,
}

impl DiagnosticReport {
    /// Wire format: {"check", "anchor", "pass", "constant", "samples", "worst"}.
    pub fn to_json(&self) -> Value {
        json!({
            "check": self.check_name,
            "anchor": self.anchor,
            "pass": self.pass,
            "constant": self.measured_constant,
            "samples": self.sample_count,
            "worst": self.details.iter().map(|w| json!({
                "points": w.points,
                "value": w.value,
                "note": w.note,
            })).collect::<Vec<_>>(),
        })
    }
}

fn record(points: &[&Point], value: f64, note: &str) -> WorstCase {
    WorstCase {
        points: points.iter().map(|p| p.coords().to_vec()).collect(),
        value,
        note: note.to_string(),
    }
}

fn sample_in_ball<R: Rng>(rng: &mut R, ball: &Ball) -> Point {
    crate::domain::sample_ball_uniform(rng, ball)
}

/// Symmetry of the Green's function in its two arguments, interior or
/// exterior kernel.
pub fn check_green_symmetry(
    p: &FracParams,
    ball: &Ball,
    exterior: bool,
    samples: usize,
    seed: u64,
) -> DiagnosticReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-12;
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    let mut used = 0;
    while used < samples {
        let (x, y) = if exterior {
            let far = Ball::new(ball.center(), 4.0 * ball.radius);
            let draw = |rng: &mut ChaCha8Rng| loop {
                let z = sample_in_ball(rng, &far);
                if z.dist(&ball.center()) > ball.radius * 1.001 {
                    return z;
                }
            };
            (draw(&mut rng), draw(&mut rng))
        } else {
            (sample_in_ball(&mut rng, ball), sample_in_ball(&mut rng, ball))
        };
        if x.dist(&y) < 1e-9 * ball.radius {
            details.push(record(&[&x, &y], 0.0, "degenerate pair skipped"));
            continue;
        }
        used += 1;
        let (gxy, gyx) = if exterior {
            (
                green_exterior_ball(p, ball, &x, &y).unwrap().value,
                green_exterior_ball(p, ball, &y, &x).unwrap().value,
            )
        } else {
            (
                kernels::green_ball(p, ball, &x, &y).unwrap().value,
                kernels::green_ball(p, ball, &y, &x).unwrap().value,
            )
        };
        let rel = (gxy - gyx).abs() / gxy.abs().max(1e-300);
        if rel > worst {
            worst = rel;
            details.truncate(details.len().min(3));
            details.push(record(&[&x, &y], rel, "largest relative asymmetry"));
        }
    }
    DiagnosticReport {
        check_name: if exterior {
            "green_symmetry_exterior".into()
        } else {
            "green_symmetry".into()
        },
        anchor: "G(x,y) = G(y,x)".into(),
        sample_count: used,
        measured_constant: Some(worst),
        pass: worst < tol,
        tolerance: tol,
        details,
    }
}

/// `0 ≤ G ≤ Φ` on the ball, plus the exterior-ball barrier domination
/// `G_ball ≤ G_complement` near a fixed boundary point.
pub fn check_green_domination(
    p: &FracParams,
    ball: &Ball,
    samples: usize,
    seed: u64,
) -> DiagnosticReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut details = Vec::new();
    let mut sup_ratio: f64 = 0.0;
    let mut pass = true;

    for _ in 0..samples {
        let x = sample_in_ball(&mut rng, ball);
        let y = sample_in_ball(&mut rng, ball);
        if x.dist(&y) < 1e-12 {
            continue;
        }
        let g = kernels::green_ball(p, ball, &x, &y).unwrap().value;
        let f = phi(p, &x.sub(&y)).value;
        if g < 0.0 || g > f * (1.0 + 1e-13) {
            pass = false;
            details.push(record(&[&x, &y], g / f, "bound 0 ≤ G ≤ Φ violated"));
        }
        sup_ratio = sup_ratio.max(g / f);
    }

    // barrier: exterior ball tangent at a boundary point dominates
    let dom = Domain::ball(*ball);
    let bx = {
        let mut d = Point::zero(ball.dim());
        d.set(0, 1.0);
        dom.boundary_point_along(&d)
    };
    let ext = dom.exterior_ball_at(&bx).unwrap();
    let mut barrier_worst: f64 = 0.0;
    for _ in 0..samples {
        let x = sample_in_ball(&mut rng, ball);
        let y = sample_in_ball(&mut rng, ball);
        if x.dist(&y) < 1e-12 {
            continue;
        }
        let g = kernels::green_ball(p, ball, &x, &y).unwrap().value;
        let ge = green_exterior_ball(p, &ext, &x, &y).unwrap().value;
        let ratio = g / ge.max(1e-300);
        barrier_worst = barrier_worst.max(ratio);
        if ratio > 1.0 + 1e-10 {
            pass = false;
            details.push(record(&[&x, &y], ratio, "barrier domination violated"));
        }
    }
    if sup_ratio > 1.0 {
        pass = false;
    }
    details.push(record(&[&bx], barrier_worst, "sup G_ball/G_exterior"));
    DiagnosticReport {
        check_name: "green_domination".into(),
        anchor: "0 ≤ G ≤ Φ; G_Ω ≤ G_{exterior-ball}".into(),
        sample_count: 2 * samples,
        measured_constant: Some(sup_ratio),
        pass,
        tolerance: 1e-10,
        details,
    }
}

/// Monte Carlo pointwise Green value on a general domain:
/// `G_Ω(x,y) = Φ(x-y) - E[Φ(Z_exit - y)]` with `Z_exit` the walk exit point
/// started at `x`.
pub fn green_via_walk(
    p: &FracParams,
    dom: &Domain,
    x: &Point,
    y: &Point,
    walkers: usize,
    seed: u64,
) -> Result<(f64, f64), solver::SolverError> {
    let yc = *y;
    let pp = *p;
    let nf = p.n as f64;
    let g_y = ScalarField::from_fn(p.n, move |z: &Point| {
        pp.a_ns * z.dist(&yc).powf(2.0 * pp.s - nf)
    })
    .with_decay(2.0 * p.s - nf);
    let zero = ScalarField::constant(p.n, 0.0);
    let cfg = WalkConfig {
        walkers,
        seed,
        ..WalkConfig::default()
    };
    let est = solver::solve_point(p, dom, &zero, &g_y, x, cfg, &QuadConfig::default())?;
    let g = phi(p, &x.sub(y)).value - est.mean;
    Ok((g, est.std_error))
}

/// Boundary-decay estimate `G_Ω(x,y) ≤ C dist(x,∂Ω)^s / |x-y|^{n-s}`:
/// sampled supremum of the ratio must be finite and stable under doubling.
pub fn check_boundary_estimate(
    p: &FracParams,
    dom: &Domain,
    samples: usize,
    seed: u64,
) -> DiagnosticReport {
    let is_ball = dom.constraints().len() == 1;
    let sup_at = |count: usize, seed: u64| -> (f64, f64, Vec<WorstCase>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sup: f64 = 0.0;
        let mut sup_sym: f64 = 0.0;
        let mut details = Vec::new();
        let mut drawn = 0;
        while drawn < count {
            let x = dom.sample_uniform(&mut rng);
            let y = dom.sample_uniform(&mut rng);
            if x.dist(&y) < 1e-9 {
                details.push(record(&[&x, &y], 0.0, "diagonal pair excluded"));
                continue;
            }
            drawn += 1;
            let g = if is_ball {
                let b = dom.constraints()[0].ball();
                kernels::green_ball(p, b, &x, &y).unwrap().value
            } else {
                // Monte Carlo Green value; keep noise small relative to scale
                if dom.dist_boundary(&x) < 0.05 || dom.dist_boundary(&y) < 0.05 {
                    drawn -= 1;
                    continue;
                }
                let walk_seed = seed ^ (drawn as u64).wrapping_mul(0x9E37);
                let (g, _) = green_via_walk(p, dom, &x, &y, 2000, walk_seed).unwrap();
                g.max(0.0)
            };
            let dxy = x.dist(&y);
            let dx = dom.dist_boundary(&x);
            let dy = dom.dist_boundary(&y);
            let ratio = g * dxy.powf(p.n as f64 - p.s) / dx.powf(p.s);
            let ratio_sym = g * dxy.powf(p.n as f64 - p.s) / dy.powf(p.s);
            if ratio > sup {
                sup = ratio;
                details.push(record(&[&x, &y], ratio, "current sup of G|x-y|^{n-s}/d(x)^s"));
            }
            sup_sym = sup_sym.max(ratio_sym);
        }
        (sup, sup_sym, details)
    };
    let (sup1, sym1, mut details) = sup_at(samples, seed);
    let (sup2, sym2, _) = sup_at(2 * samples, seed.wrapping_add(1));
    let stable = sup2 < 2.0 * sup1 && sym2 < 2.0 * sym1;
    let pass = sup1.is_finite() && sup2.is_finite() && stable;
    details.truncate(4);
    details.push(WorstCase {
        points: vec![],
        value: sup2,
        note: format!("doubled-sample sup (first pass {sup1:.6e}); symmetric-role sup {sym2:.6e}"),
    });
    DiagnosticReport {
        check_name: "green_boundary_estimate".into(),
        anchor: "G ≤ C d(x)^s/|x-y|^{n-s} (and the d(y)^s twin)".into(),
        sample_count: 3 * samples,
        measured_constant: Some(sup2),
        pass,
        tolerance: 2.0,
        details,
    }
}

/// Unit exterior mass of the Poisson kernel: quadrature on balls, exact
/// exit-probability argument on general domains.
pub fn check_poisson_normalization(
    p: &FracParams,
    dom: &Domain,
    x_samples: usize,
    q: &QuadConfig,
    seed: u64,
) -> DiagnosticReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    let is_ball = dom.constraints().len() == 1;
    let tol = if is_ball { 1e-6 } else { 1e-12 };
    let one = ScalarField::constant(p.n, 1.0);
    for i in 0..x_samples {
        let x = dom.sample_uniform(&mut rng);
        let (mass, note): (f64, &str) = if is_ball {
            let b = dom.constraints()[0].ball();
            match convolve_poisson(p, b, &one, &x, q) {
                Ok(v) => (v, "quadrature exterior mass"),
                Err(_) => continue,
            }
        } else {
            let zero = ScalarField::constant(p.n, 0.0);
            let cfg = WalkConfig {
                walkers: 4000,
                seed: seed ^ i as u64,
                ..WalkConfig::default()
            };
            let est = solver::solve_point(p, dom, &zero, &one, &x, cfg, q).unwrap();
            // unit payoff: zero variance required on top of unit mean
            if est.std_error != 0.0 {
                (f64::NAN, "exit mass must be deterministic")
            } else {
                (est.mean, "Monte Carlo exit mass")
            }
        };
        let err = (mass - 1.0).abs();
        if !(err <= worst) {
            worst = err;
            details.push(record(&[&x], mass, note));
        }
    }
    // a deliberately hard near-boundary point, at a looser tolerance
    let mut pass = worst < tol;
    if is_ball {
        let b = dom.constraints()[0].ball();
        let mut x = b.center();
        x.set(0, x.get(0) + 0.985 * b.radius);
        if let Ok(v) = convolve_poisson(p, b, &one, &x, q) {
            let err = (v - 1.0).abs();
            details.push(record(&[&x], v, "near-boundary mass (tol 1e-5)"));
            if err > 1e-5 {
                pass = false;
            }
        }
    }
    DiagnosticReport {
        check_name: "poisson_normalization".into(),
        anchor: "∫_{ext} P(x,·) = 1".into(),
        sample_count: x_samples,
        measured_constant: Some(worst),
        pass,
        tolerance: tol,
        details,
    }
}

/// The three decay regimes of the Poisson kernel on the ball: near shell,
/// global weighted bound, and far field.
pub fn check_poisson_bounds(
    p: &FracParams,
    dom: &Domain,
    samples: usize,
    seed: u64,
) -> DiagnosticReport {
    let ball = *dom.constraints()[0].ball();
    let r_ext = dom.uniform_exterior_radius();
    let nf = p.n as f64;
    let s = p.s;
    let sup_at = |count: usize, seed: u64| -> [f64; 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sups = [0.0f64; 3];
        for _ in 0..count {
            let x = sample_in_ball(&mut rng, &ball);
            let dx = dom.dist_boundary(&x);
            if dx <= 1e-9 {
                continue;
            }
            // near-shell sample: dist(y, ∂Ω) ∈ (0, r_ext)
            let dir = crate::domain::sample_sphere_uniform(&mut rng, p.n);
            let t: f64 = rng.random::<f64>() * r_ext;
            let y1 = ball
                .center()
                .add(&dir.scale(ball.radius + t.max(1e-6 * ball.radius)));
            if let Ok(kv) = poisson_ball(p, &ball, &x, &y1) {
                let dy = -dom.dist_boundary(&y1);
                let bound1 = 1.0 / (dy.powf(s) * x.dist(&y1).powf(nf - s));
                sups[0] = sups[0].max(kv.value / bound1);
                let bound2 = dx.powf(s) / (dy.powf(2.0 * s) * x.dist(&y1).powf(nf - s));
                sups[1] = sups[1].max(kv.value / bound2);
            }
            // far sample: dist(y, ∂Ω) > r_ext
            let tfar: f64 = r_ext + rng.random::<f64>() * 5.0 * ball.radius;
            let y2 = ball.center().add(&dir.scale(ball.radius + tfar));
            if let Ok(kv) = poisson_ball(p, &ball, &x, &y2) {
                let dy = -dom.dist_boundary(&y2);
                let bound3 = dx.powf(s) / x.dist(&y2).powf(nf + 2.0 * s);
                sups[2] = sups[2].max(kv.value / bound3);
                let bound2 = dx.powf(s) / (dy.powf(2.0 * s) * x.dist(&y2).powf(nf - s));
                sups[1] = sups[1].max(kv.value / bound2);
            }
        }
        sups
    };
    let s1 = sup_at(samples, seed);
    let s2 = sup_at(2 * samples, seed.wrapping_add(1));
    let stable = (0..3).all(|k| s2[k].is_finite() && s2[k] < 2.0 * s1[k].max(1e-12));

    // shell-edge consistency: a point near dist = r_ext satisfies both the
    // near and far bounds with their measured constants
    let mut details = Vec::new();
    for (k, name) in ["near-shell C", "weighted-global C", "far-field C"]
        .iter()
        .enumerate()
    {
        details.push(WorstCase {
            points: vec![],
            value: s2[k],
            note: format!("{name}: sup at 2x samples (1x: {:.6e})", s1[k]),
        });
    }
    DiagnosticReport {
        check_name: "poisson_bounds".into(),
        anchor: "P ≤ C/(d(y)^s|x-y|^{n-s}); P ≤ C d(x)^s/(d(y)^{2s}|x-y|^{n-s}); P ≤ C d(x)^s/|x-y|^{n+2s}".into(),
        sample_count: 3 * samples,
        measured_constant: Some(s2[1]),
        pass: stable,
        tolerance: 2.0,
        details,
    }
}

/// Barrier domination of the Poisson kernel on a lens domain, smeared
/// against small-ball indicators: the domain kernel mass through a test ball
/// inside the carve is at most the closed-form complement-kernel mass.
pub fn check_poisson_barrier_lens(
    p: &FracParams,
    dom: &Domain,
    samples: usize,
    q: &QuadConfig,
    seed: u64,
) -> DiagnosticReport {
    let carve = dom
        .constraints()
        .iter()
        .find_map(|c| match c {
            crate::domain::Constraint::Outside(b) => Some(*b),
            _ => None,
        })
        .expect("lens domain has a carved ball");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pass = true;
    let mut details = Vec::new();
    let mut worst_margin = f64::INFINITY;
    for i in 0..samples {
        // small test ball strictly inside the carve
        let c = sample_in_ball(&mut rng, &Ball::new(carve.center(), carve.radius * 0.6));
        let rad = carve.radius * (0.05 + 0.1 * rng.random::<f64>());
        let test_ball = Ball::new(c, rad);
        let test_dom = Domain::ball(test_ball);
        let g = ScalarField::indicator(&test_dom);
        let x = dom.sample_uniform(&mut rng);
        let zero = ScalarField::constant(p.n, 0.0);
        let cfg = WalkConfig {
            walkers: 20_000,
            seed: seed ^ (i as u64) << 8,
            ..WalkConfig::default()
        };
        let est = solver::solve_point(p, dom, &zero, &g, &x, cfg, q).unwrap();
        // closed-form mass of the complement kernel over the test ball
        let bound = ball_mass_of_exterior_kernel(p, &carve, &x, &test_ball, q);
        let margin = bound - (est.mean - 3.0 * est.std_error);
        worst_margin = worst_margin.min(margin);
        if est.mean - 3.0 * est.std_error > bound {
            pass = false;
            details.push(record(&[&x, &c], est.mean / bound, "smeared barrier violated"));
        }
    }
    details.push(WorstCase {
        points: vec![],
        value: worst_margin,
        note: "smallest (bound - estimate + 3σ) margin".into(),
    });
    DiagnosticReport {
        check_name: "poisson_barrier_lens".into(),
        anchor: "P_Ω ≤ P_{complement-of-carve} inside the carve".into(),
        sample_count: samples,
        measured_constant: Some(worst_margin),
        pass,
        tolerance: 0.0,
        details,
    }
}

/// `∫_b P_{ℝⁿ\B̄}(x, y) dy` over a small ball `b` inside the carve.
fn ball_mass_of_exterior_kernel(
    p: &FracParams,
    carve: &Ball,
    x: &Point,
    b: &Ball,
    q: &QuadConfig,
) -> f64 {
    // polar integration around the test ball center with the angular rule
    let rule = crate::quadrature::sphere_rule(p.n, 3);
    let mut total = 0.0;
    for (th, w) in rule.dirs.iter().zip(&rule.weights) {
        let v = integrate_with_breakpoints(
            &mut |t: f64| {
                let y = b.center().offset(th, t);
                match poisson_exterior_ball(p, carve, x, &y) {
                    Ok(kv) => kv.value * t.powf(p.n as f64 - 1.0),
                    Err(_) => 0.0,
                }
            },
            0.0,
            b.radius,
            &[],
            &q.loosened(10.0),
        )
        .unwrap_or(f64::NAN);
        total += w * v;
    }
    total
}

/// Exit-mass deficit `η₀ = 1 - ∫_{B_1(c)} P(0,y) dy`, `|c| = 2`: reduced to a
/// one-dimensional integral through the exact spherical-cap angle.
pub fn compute_eta0(p: &FracParams, q: &QuadConfig) -> Result<f64, crate::quadrature::QuadError> {
    let s = p.s;
    let (d, rho) = (2.0f64, 1.0f64);
    // cap measure of {θ : |tθ - c| < ρ} on the sphere of radius t
    let cap = move |t: f64| -> f64 {
        let cos_a = ((t * t + d * d - rho * rho) / (2.0 * t * d)).clamp(-1.0, 1.0);
        let a = cos_a.acos();
        match p.n {
            1 => {
                if (t - d).abs() < rho {
                    1.0
                } else {
                    0.0
                }
            }
            2 => 2.0 * a,
            3 => 2.0 * std::f64::consts::PI * (1.0 - cos_a),
            _ => unreachable!("field quadrature is limited to n ≤ 3"),
        }
    };
    let lo = (d - rho).max(1.0);
    let hi = d + rho;
    // substitute t = lo + w²: the (t-1)^{-s} factor turns into w^{1-2s} and
    // the vanishing cap supplies another power of w, so the transformed
    // integrand is bounded; floating point cannot resolve the raw kernel
    // within one ulp of t = 1, where a large share of its mass sits
    let w_hi = (hi - lo).sqrt();
    let mut cuts = Vec::new();
    for k in 1..=40 {
        let h = w_hi * 0.5f64.powi(k);
        cuts.push(h);
        cuts.push(w_hi - h);
    }
    let mass = integrate_with_breakpoints(
        &mut |w: f64| {
            let t = lo + w * w;
            let near = (t - 1.0).max(w * w); // equals t-1 when lo = 1
            near.powf(-s) * (t + 1.0).powf(-s) * t.powf(-1.0) * cap(t) * 2.0 * w
        },
        0.0,
        w_hi,
        &cuts,
        q,
    )?;
    Ok(1.0 - p.c_ns * mass)
}

/// The boundary-singular profile `(1-|x|²)^{s-1}` on the unit ball, extended
/// by zero: a nontrivial solution with zero source and zero exterior data.
pub fn nonuniqueness_field(p: &FracParams) -> ScalarField {
    let s = p.s;
    let dom = Domain::ball(Ball::unit(p.n));
    ScalarField::from_fn(p.n, move |x: &Point| {
        let m = 1.0 - x.norm_sq();
        if m > 0.0 {
            m.powf(s - 1.0)
        } else {
            0.0
        }
    })
    .with_support(dom)
    .with_blowup_sphere(Ball::unit(p.n))
}

/// The nontrivial zero-data solution: fractionally harmonic inside, flat
/// boundary layer at exactly the critical exponent, and integrable in the
/// weighted classes.
pub fn check_nonuniqueness_example(p: &FracParams, q: &QuadConfig) -> DiagnosticReport {
    let u = nonuniqueness_field(p);
    let mut details = Vec::new();
    let mut pass = true;

    // (i) the principal value vanishes at interior points; the boundary
    // blow-up caps attainable quadrature accuracy near 1e-4, below the
    // 1e-3 assertion
    let pv_cfg = QuadConfig {
        rel_tol: q.rel_tol.max(1e-4),
        abs_tol: q.abs_tol.max(1e-6),
        ..*q
    };
    let mut worst_pv: f64 = 0.0;
    for i in 0..10 {
        let r = 0.08 * i as f64;
        let ang = 0.7 * i as f64;
        let x = Point::new(&[r * ang.cos(), r * ang.sin()]);
        match frac_laplacian_pv(p, &u, &x, &pv_cfg) {
            Ok(v) => {
                if v.abs() > worst_pv {
                    worst_pv = v.abs();
                    details.push(record(&[&x], v, "largest |(-Δ)^s u| so far"));
                }
            }
            Err(e) => {
                pass = false;
                details.push(record(&[&x], f64::NAN, &format!("PV failed: {e}")));
            }
        }
    }
    if worst_pv > 1e-3 {
        pass = false;
    }

    // (ii) boundary-layer diagnostic: flat with limit 2π√2
    let dom = Domain::ball(Ball::unit(p.n));
    let ladder: Vec<f64> = (3..=10).map(|k| 0.5f64.powi(k)).collect();
    match solver::uniqueness_diagnostic(p, &dom, &u, &ladder, q) {
        Ok(v) => {
            let want = 2.0 * std::f64::consts::PI * 2f64.sqrt();
            let lim = v.fitted_limit.unwrap_or(f64::NAN);
            if v.classification != Classification::BoundedNonzero || (lim - want).abs() > 1e-2 {
                pass = false;
            }
            details.push(WorstCase {
                points: vec![],
                value: lim,
                note: format!("boundary-layer limit (target {want:.6})"),
            });
        }
        Err(e) => {
            pass = false;
            details.push(WorstCase {
                points: vec![],
                value: f64::NAN,
                note: format!("diagnostic failed: {e}"),
            });
        }
    }

    // (iii) weighted integrability: finite tail mass and finite L¹_s norm
    match l2s_membership(p, &u, q) {
        Ok(m) if !m.divergent && m.value.is_finite() => {}
        _ => pass = false,
    }
    match weighted_norm(p, &dom, &u, 1.0, p.s, q) {
        Ok(n) if n.value.is_finite() => {}
        _ => pass = false,
    }

    DiagnosticReport {
        check_name: "nonuniqueness_example".into(),
        anchor: "(1-|x|²)^{s-1}: s-harmonic, flat boundary layer".into(),
        sample_count: 10 + 8,
        measured_constant: Some(worst_pv),
        pass,
        tolerance: 1e-3,
        details,
    }
}

/// Weak-form reproducing identity: `∫ G(x,y) (-Δ)^s φ(x) dx = φ(y)` for
/// smooth `φ` supported in the ball, checked in both kernel arguments.
pub fn check_delta_identity(
    p: &FracParams,
    ball: &Ball,
    y_samples: usize,
    q: &QuadConfig,
    seed: u64,
) -> DiagnosticReport {
    let tol = 1e-3;
    // radial bump supported in |x| < 0.7·radius
    let rad = 0.7 * ball.radius;
    let center = ball.center();
    let bump = move |x: &Point| {
        let t = x.dist(&center) / rad;
        if t < 1.0 {
            (-1.0 / (1.0 - t * t)).exp() * std::f64::consts::E
        } else {
            0.0
        }
    };
    let phi_field = ScalarField::from_fn(p.n, bump)
        .with_support(Domain::ball(Ball::new(ball.center(), rad)));

    // ψ = (-Δ)^s φ is radial; tabulate it once on [0, R]. The values cross
    // zero, so the local config carries an absolute floor.
    let tab_cfg = QuadConfig {
        rel_tol: 0.1 * q.rel_tol,
        abs_tol: q.abs_tol.max(1e-9),
        ..*q
    };
    let mut nodes: Vec<f64> = Vec::new();
    let m = 90;
    for i in 0..=m {
        nodes.push(ball.radius * i as f64 / m as f64);
    }
    let mut psi_vals = Vec::with_capacity(nodes.len());
    for &t in &nodes {
        let mut x = ball.center();
        x.set(0, x.get(0) + t);
        psi_vals.push(frac_laplacian_pv(p, &phi_field, &x, &tab_cfg).unwrap());
    }
    let table = RadialTable::new(nodes, psi_vals);
    let c0 = ball.center();
    let psi_field = ScalarField::from_fn(p.n, move |x: &Point| table.eval(x.dist(&c0)))
        .with_support(Domain::ball(*ball))
        .with_feature_sphere(Ball::new(c0, rad));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut details = Vec::new();
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for i in 0..y_samples {
        let y = if i == 0 {
            ball.center()
        } else {
            sample_in_ball(&mut rng, &Ball::new(ball.center(), 0.9 * ball.radius))
        };
        let value = convolve_green(p, ball, &psi_field, &y, &tab_cfg).unwrap();
        let err = (value - bump(&y)).abs();
        worst = worst.max(err);
        if err > tol {
            pass = false;
        }
        details.push(record(&[&y], value, "reproduced point value"));
        // the second-argument identity follows by kernel symmetry; evaluate
        // with swapped arguments to confirm the implementation agrees
        let swapped = convolve_green_swapped(p, ball, &psi_field, &y, &tab_cfg);
        if (swapped - value).abs() > 2e-3 {
            pass = false;
            details.push(record(&[&y], swapped, "argument-swapped identity diverged"));
        }
    }
    DiagnosticReport {
        check_name: "delta_identity".into(),
        anchor: "∫ G(·,y) (-Δ)^s φ = φ(y), both arguments".into(),
        sample_count: y_samples,
        measured_constant: Some(worst),
        pass,
        tolerance: tol,
        details,
    }
}

/// Same convolution but evaluating the kernel with its arguments swapped.
fn convolve_green_swapped(
    p: &FracParams,
    ball: &Ball,
    f: &ScalarField,
    y: &Point,
    q: &QuadConfig,
) -> f64 {
    // integrate G(x, y) f(x) dx by polar quadrature around y, explicit swap
    let rule = crate::quadrature::sphere_rule(p.n, 4);
    let mut total = 0.0;
    let c = ball.center();
    let dvec = y.sub(&c);
    for (th, w) in rule.dirs.iter().zip(&rule.weights) {
        let bq = dvec.dot(th);
        let t_exit = -bq + (bq * bq + ball.radius * ball.radius - dvec.norm_sq()).sqrt();
        let v = integrate_with_breakpoints(
            &mut |t: f64| {
                if t <= 0.0 || t >= t_exit {
                    return 0.0;
                }
                let x = y.offset(th, t);
                match kernels::green_ball(p, ball, &x, y) {
                    Ok(kv) if kv.finite => kv.value * f.eval(&x) * t.powf(p.n as f64 - 1.0),
                    _ => 0.0,
                }
            },
            0.0,
            t_exit,
            &{
                let mut cuts = Vec::new();
                for k in 1..=30 {
                    cuts.push(t_exit * 0.5f64.powi(k));
                }
                cuts
            },
            &q.loosened(10.0),
        )
        .unwrap_or(f64::NAN);
        total += w * v;
    }
    total
}

/// Everything at once with a shared seed, in a deterministic order.
pub struct SuiteConfig {
    pub seed: u64,
    pub samples: usize,
    pub quad: QuadConfig,
    pub include_lens_monte_carlo: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 1,
            samples: 1000,
            quad: QuadConfig::default(),
            include_lens_monte_carlo: true,
        }
    }
}

pub fn run_suite(p: &FracParams, cfg: &SuiteConfig) -> Vec<DiagnosticReport> {
    let ball = Ball::unit(p.n);
    let dom = Domain::ball(ball);
    let mut reports = vec![
        check_green_symmetry(p, &ball, false, cfg.samples, cfg.seed),
        check_green_symmetry(p, &ball, true, cfg.samples, cfg.seed.wrapping_add(1)),
        check_green_domination(p, &ball, cfg.samples, cfg.seed.wrapping_add(2)),
        check_boundary_estimate(p, &dom, cfg.samples, cfg.seed.wrapping_add(3)),
        check_poisson_normalization(p, &dom, 10, &cfg.quad, cfg.seed.wrapping_add(4)),
        check_poisson_bounds(p, &dom, cfg.samples, cfg.seed.wrapping_add(5)),
        check_delta_identity(p, &ball, 5, &cfg.quad, cfg.seed.wrapping_add(6)),
    ];
    // η₀ sanity and refinement stability
    let eta = compute_eta0(p, &cfg.quad).unwrap_or(f64::NAN);
    let eta_fine = compute_eta0(
        p,
        &QuadConfig {
            rel_tol: cfg.quad.rel_tol * 0.01,
            abs_tol: cfg.quad.abs_tol * 0.01,
            ..cfg.quad
        },
    )
    .unwrap_or(f64::NAN);
    reports.push(DiagnosticReport {
        check_name: "eta0_contraction".into(),
        anchor: "η₀ = 1 - exit mass into the twin ball ∈ (0,1)".into(),
        sample_count: 2,
        measured_constant: Some(eta),
        pass: eta > 0.0 && eta < 1.0 && (eta - eta_fine).abs() < 1e-8,
        tolerance: 1e-8,
        details: vec![WorstCase {
            points: vec![],
            value: eta_fine,
            note: "refined-quadrature value".into(),
        }],
    });
    if p.n == 2 && (p.s - 0.5).abs() < 1e-12 {
        reports.push(check_nonuniqueness_example(p, &cfg.quad));
    }
    if cfg.include_lens_monte_carlo && p.n == 2 {
        let lens = Domain::lens(
            Ball::new(Point::zero(2), 2.0),
            Ball::new(Point::new(&[2.5, 0.0]), 1.0),
        )
        .unwrap();
        reports.push(check_poisson_normalization(
            p,
            &lens,
            3,
            &cfg.quad,
            cfg.seed.wrapping_add(7),
        ));
        reports.push(check_poisson_barrier_lens(
            p,
            &lens,
            4,
            &cfg.quad,
            cfg.seed.wrapping_add(8),
        ));
        reports.push(check_boundary_estimate(
            p,
            &lens,
            60,
            cfg.seed.wrapping_add(9),
        ));
    }
    reports
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> FracParams {
        FracParams::new(2, 0.5).unwrap()
    }

    #[test]
    fn symmetry_checks_pass() {
        let p = params();
        let b = Ball::unit(2);
        let r = check_green_symmetry(&p, &b, false, 300, 5);
        assert!(r.pass, "{:?}", r.measured_constant);
        let r = check_green_symmetry(&p, &b, true, 300, 6);
        assert!(r.pass);
    }

    #[test]
    fn domination_checks_pass() {
        let p = params();
        let b = Ball::unit(2);
        let r = check_green_domination(&p, &b, 400, 9);
        assert!(r.pass);
        assert!(r.measured_constant.unwrap() <= 1.0);
    }

    #[test]
    fn boundary_estimate_on_ball_is_stable() {
        let p = params();
        let dom = Domain::ball(Ball::unit(2));
        let r = check_boundary_estimate(&p, &dom, 800, 3);
        assert!(r.pass, "{r:?}");
        assert!(r.measured_constant.unwrap().is_finite());
    }

    #[test]
    fn eta0_in_unit_interval_all_orders() {
        let q = QuadConfig::default();
        let mut prev = None;
        for &s in &[0.25, 0.5, 0.75] {
            let p = FracParams::new(2, s).unwrap();
            let eta = compute_eta0(&p, &q).unwrap();
            assert!(eta > 0.0 && eta < 1.0, "s={s}: {eta}");
            // recorded trend only, no assertion beyond range
            prev = Some((s, eta));
        }
        let _ = prev;
    }

    #[test]
    fn report_wire_format_keys() {
        let p = params();
        let b = Ball::unit(2);
        let r = check_green_symmetry(&p, &b, false, 50, 1);
        let v = r.to_json();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(|s| s.as_str()).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            vec!["anchor", "check", "constant", "pass", "samples", "worst"]
        );
    }

    #[test]
    fn perturbed_constants_fail_normalization() {
        let p = params().with_perturbed_constants(1e-2);
        let dom = Domain::ball(Ball::unit(2));
        let r = check_poisson_normalization(&p, &dom, 4, &QuadConfig::default(), 2);
        assert!(!r.pass);
    }
}
