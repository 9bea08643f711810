//! Bounded domains with the uniform exterior ball condition: balls, lens
//! domains (ball minus a carved ball), and finite intersections of those.
//!
//! Everything downstream depends on the distance oracle being exact: the
//! Monte Carlo walk uses it for unbiased inscribed-ball steps, and the
//! boundary-layer diagnostics integrate over shells `{dist ≤ ε}` whose
//! geometry is resolved analytically per ray.

use crate::geom::{Ball, Point};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("domain is (or becomes) empty: {0}")]
    Empty(String),
    #[error("point is not on the boundary (|signed dist| = {0:.3e})")]
    NotOnBoundary(f64),
    #[error("point lies outside the domain")]
    Outside,
    #[error("invalid domain operation: {0}")]
    Invalid(String),
}

/// One half-space-like primitive: the inside or the outside of a ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Constraint {
    Inside(Ball),
    Outside(Ball),
}

impl Constraint {
    fn margin(&self, x: &Point) -> f64 {
        match self {
            Constraint::Inside(b) => b.radius - x.dist(&b.center()),
            Constraint::Outside(b) => x.dist(&b.center()) - b.radius,
        }
    }

    pub fn ball(&self) -> &Ball {
        match self {
            Constraint::Inside(b) | Constraint::Outside(b) => b,
        }
    }
}

/// An open bounded domain `Ω = ∩ᵢ Cᵢ` with exact signed distance.
#[derive(Clone, Debug)]
pub struct Domain {
    constraints: Vec<Constraint>,
    dim: usize,
    r_ext: f64,
    diameter: f64,
    anchor: Point,
    inradius: f64,
    bounding: Ball,
}

impl Domain {
    pub fn ball(b: Ball) -> Domain {
        Self::from_constraints(vec![Constraint::Inside(b)])
            .expect("a ball is a valid domain")
    }

    /// `outer ∩ complement(carve)`: the carved ball must actually remove a
    /// cap but leave something.
    pub fn lens(outer: Ball, carve: Ball) -> Result<Domain, DomainError> {
        Self::from_constraints(vec![Constraint::Inside(outer), Constraint::Outside(carve)])
    }

    pub fn intersection(parts: &[Domain]) -> Result<Domain, DomainError> {
        let mut cs = Vec::new();
        for p in parts {
            cs.extend(p.constraints.iter().copied());
        }
        Self::from_constraints(cs)
    }

    pub fn from_constraints(constraints: Vec<Constraint>) -> Result<Domain, DomainError> {
        if constraints.is_empty() {
            return Err(DomainError::Invalid("no constraints".into()));
        }
        let dim = constraints[0].ball().dim();
        if constraints.iter().any(|c| c.ball().dim() != dim) {
            return Err(DomainError::Invalid("mixed dimensions".into()));
        }
        let bounding = constraints
            .iter()
            .filter_map(|c| match c {
                Constraint::Inside(b) => Some(*b),
                Constraint::Outside(_) => None,
            })
            .min_by(|a, b| a.radius.partial_cmp(&b.radius).unwrap())
            .ok_or_else(|| DomainError::Invalid("unbounded: needs an enclosing ball".into()))?;
        let diameter = 2.0 * bounding.radius;
        let r_ext = constraints
            .iter()
            .filter_map(|c| match c {
                Constraint::Outside(b) => Some(b.radius),
                Constraint::Inside(_) => None,
            })
            .fold(diameter, f64::min);
        let mut dom = Domain {
            constraints,
            dim,
            r_ext,
            diameter,
            anchor: bounding.center(),
            inradius: 0.0,
            bounding,
        };
        let (anchor, inradius) = dom.find_deepest_point()?;
        dom.anchor = anchor;
        dom.inradius = inradius;
        Ok(dom)
    }

    /// Best interior point found by seeded pattern search on the signed
    /// distance. Exact for balls and axially symmetric for lenses.
    fn find_deepest_point(&self) -> Result<(Point, f64), DomainError> {
        let mut seeds: Vec<Point> = Vec::new();
        for c in &self.constraints {
            if let Constraint::Inside(b) = c {
                seeds.push(b.center());
            }
        }
        // lens-style seeds: back off from each carved ball along the axis
        for ci in &self.constraints {
            if let Constraint::Inside(bo) = ci {
                for cj in &self.constraints {
                    if let Constraint::Outside(bc) = cj {
                        let d = bo.center().dist(&bc.center());
                        if d > 1e-12 {
                            let u = bo.center().sub(&bc.center()).scale(1.0 / d);
                            let t = ((bo.radius + bc.radius - d) / 2.0).clamp(0.0, bo.radius);
                            seeds.push(bo.center().add(&u.scale(t.min(bo.radius * 0.99))));
                        }
                    }
                }
            }
        }
        let mut best = seeds[0];
        let mut best_d = f64::NEG_INFINITY;
        for s in &seeds {
            let d = self.min_margin(s);
            if d > best_d {
                best_d = d;
                best = *s;
            }
        }
        // pattern search refinement
        let mut step = self.bounding.radius / 2.0;
        while step > 1e-12 * self.bounding.radius {
            let mut improved = false;
            for k in 0..self.dim {
                for sgn in [-1.0, 1.0] {
                    let mut cand = best;
                    cand.set(k, cand.get(k) + sgn * step);
                    let d = self.min_margin(&cand);
                    if d > best_d {
                        best_d = d;
                        best = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if best_d <= 0.0 {
            return Err(DomainError::Empty(format!(
                "no interior point found (best margin {best_d:.3e})"
            )));
        }
        Ok((best, best_d))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn uniform_exterior_radius(&self) -> f64 {
        self.r_ext
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// The deepest known interior point; polar quadrature anchors here.
    pub fn anchor(&self) -> Point {
        self.anchor
    }

    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    pub fn bounding_ball(&self) -> Ball {
        self.bounding
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn primitive_spheres(&self) -> Vec<Ball> {
        self.constraints.iter().map(|c| *c.ball()).collect()
    }

    fn min_margin(&self, x: &Point) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.margin(x))
            .fold(f64::INFINITY, f64::min)
    }

    #[inline]
    pub fn contains(&self, x: &Point) -> bool {
        self.constraints.iter().all(|c| c.margin(x) > 0.0)
    }

    /// Signed distance to `∂Ω`: positive inside, negative outside, zero on
    /// the boundary. Inside, the boundary of an intersection lies on the
    /// primitive spheres, so the distance is the smallest constraint margin.
    /// Outside, the nearest boundary point is a sphere projection or a
    /// pairwise corner of two spheres.
    pub fn dist_boundary(&self, x: &Point) -> f64 {
        let m = self.min_margin(x);
        if m >= 0.0 {
            return m;
        }
        -self.exterior_distance(x)
    }

    fn exterior_distance(&self, x: &Point) -> f64 {
        let mut best = f64::INFINITY;
        // sphere projections, clipped by the other constraints
        for (i, c) in self.constraints.iter().enumerate() {
            let m = c.margin(x);
            if m >= 0.0 {
                continue;
            }
            let b = c.ball();
            let d = x.dist(&b.center());
            let proj = if d > 1e-300 {
                b.center().add(&x.sub(&b.center()).scale(b.radius / d))
            } else {
                // center of a violated Outside constraint: any direction
                b.center().add(&Point::axis(self.dim, 0).scale(b.radius))
            };
            let ok = self
                .constraints
                .iter()
                .enumerate()
                .all(|(j, cj)| j == i || cj.margin(&proj) >= -1e-12 * self.diameter);
            if ok {
                best = best.min(x.dist(&proj));
            }
        }
        // pairwise corners
        for i in 0..self.constraints.len() {
            for j in (i + 1)..self.constraints.len() {
                if let Some(pt) = self.nearest_corner_point(x, i, j) {
                    let ok = self.constraints.iter().enumerate().all(|(k, ck)| {
                        k == i || k == j || ck.margin(&pt) >= -1e-12 * self.diameter
                    });
                    if ok {
                        best = best.min(x.dist(&pt));
                    }
                }
            }
        }
        best
    }

    /// Nearest point to `x` on the sphere-sphere intersection of constraints
    /// `i` and `j`, if they intersect transversally.
    fn nearest_corner_point(&self, x: &Point, i: usize, j: usize) -> Option<Point> {
        let b1 = self.constraints[i].ball();
        let b2 = self.constraints[j].ball();
        let c1 = b1.center();
        let c2 = b2.center();
        let d = c1.dist(&c2);
        if d < 1e-14 {
            return None;
        }
        let a = (d * d + b1.radius * b1.radius - b2.radius * b2.radius) / (2.0 * d);
        let rc_sq = b1.radius * b1.radius - a * a;
        if rc_sq <= 0.0 {
            return None;
        }
        let rc = rc_sq.sqrt();
        let u = c2.sub(&c1).scale(1.0 / d);
        let q = c1.add(&u.scale(a));
        // split x - q into axial and perpendicular parts
        let v = x.sub(&q);
        let z = v.dot(&u);
        let w = v.sub(&u.scale(z));
        let h = w.norm();
        let dir = if h > 1e-13 {
            w.scale(1.0 / h)
        } else {
            // x on the axis: every corner point is equidistant, pick one
            let mut t = Point::axis(self.dim, 0);
            if t.dot(&u).abs() > 0.9 {
                t = Point::axis(self.dim, 1.min(self.dim - 1));
            }
            let t_perp = t.sub(&u.scale(t.dot(&u)));
            t_perp.scale(1.0 / t_perp.norm())
        };
        Some(q.add(&dir.scale(rc)))
    }

    /// Erosion `Ω_ε = {x : dist(x, ∂Ω) > ε}`; each primitive sphere offsets
    /// to a sphere, so the family is closed under erosion.
    pub fn shift_inner(&self, eps: f64) -> Result<Domain, DomainError> {
        assert!(eps > 0.0);
        if eps >= self.inradius {
            return Err(DomainError::Empty(format!(
                "erosion by {eps} empties a domain of inradius {}",
                self.inradius
            )));
        }
        let cs = self
            .constraints
            .iter()
            .map(|c| match c {
                Constraint::Inside(b) => {
                    Constraint::Inside(Ball::new(b.center(), b.radius - eps))
                }
                Constraint::Outside(b) => {
                    Constraint::Outside(Ball::new(b.center(), b.radius + eps))
                }
            })
            .collect();
        let mut dom = Domain::from_constraints(cs)?;
        dom.r_ext = self.r_ext + eps;
        Ok(dom)
    }

    /// Dilation `Ω^ε = {x : dist(x, Ω) < ε}` by per-primitive offsets; exact
    /// for balls, and exact up to corner rounding for intersections. The
    /// uniform exterior radius shrinks to `r_ext - ε`.
    pub fn shift_outer(&self, eps: f64) -> Result<Domain, DomainError> {
        assert!(eps > 0.0);
        if eps >= self.r_ext {
            return Err(DomainError::Invalid(format!(
                "dilation by {eps} exceeds the uniform exterior radius {}",
                self.r_ext
            )));
        }
        let cs = self
            .constraints
            .iter()
            .map(|c| match c {
                Constraint::Inside(b) => {
                    Constraint::Inside(Ball::new(b.center(), b.radius + eps))
                }
                Constraint::Outside(b) => {
                    Constraint::Outside(Ball::new(b.center(), b.radius - eps))
                }
            })
            .collect();
        let mut dom = Domain::from_constraints(cs)?;
        dom.r_ext = self.r_ext - eps;
        Ok(dom)
    }

    /// Largest ball centered at `x` inside `Ω`.
    pub fn max_inscribed_ball(&self, x: &Point) -> Result<InscribedBall, DomainError> {
        let d = self.min_margin(x);
        if d <= 0.0 {
            return Err(DomainError::Outside);
        }
        Ok(InscribedBall {
            ball: Ball::new(*x, d),
            gap: 0.0,
        })
    }

    /// Exterior ball of uniform radius tangent at the boundary point `X`.
    pub fn exterior_ball_at(&self, x: &Point) -> Result<Ball, DomainError> {
        let tol = 1e-9 * self.diameter;
        let sd = self.dist_boundary(x);
        if sd.abs() > tol {
            return Err(DomainError::NotOnBoundary(sd));
        }
        // active constraint with the smallest |margin|
        let (idx, _) = self
            .constraints
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.margin(x).abs()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        match &self.constraints[idx] {
            Constraint::Inside(b) => {
                let d = x.dist(&b.center());
                let normal = x.sub(&b.center()).scale(1.0 / d);
                Ok(Ball::new(x.add(&normal.scale(self.r_ext)), self.r_ext))
            }
            Constraint::Outside(b) => {
                // the carved ball itself hosts the exterior ball
                let d = x.dist(&b.center());
                let inward = b.center().sub(x).scale(1.0 / d);
                Ok(Ball::new(x.add(&inward.scale(self.r_ext)), self.r_ext))
            }
        }
    }

    /// Uniform sample by rejection from the bounding ball.
    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> Point {
        for _ in 0..1_000_000u32 {
            let x = sample_ball_uniform(rng, &self.bounding);
            if self.contains(&x) {
                return x;
            }
        }
        panic!("rejection sampling budget exhausted; domain volume is degenerate");
    }

    /// A boundary point in direction `theta` from the anchor.
    pub fn boundary_point_along(&self, theta: &Point) -> Point {
        let segs = self.ray_segments(&self.anchor, theta);
        let t = segs.first().map(|s| s.1).unwrap_or(0.0);
        self.anchor.offset(theta, t)
    }

    /// Maximal intervals of `{t > 0 : o + tθ ∈ Ω}`.
    pub fn ray_segments(&self, o: &Point, theta: &Point) -> Vec<(f64, f64)> {
        let t_max = o.dist(&self.bounding.center()) + self.bounding.radius + 1.0;
        let mut segs = vec![(0.0, t_max)];
        for c in &self.constraints {
            let b = c.ball();
            let cr = crossings(o, theta, b);
            let allowed: Vec<(f64, f64)> = match (c, cr) {
                (Constraint::Inside(_), Some((t0, t1))) => {
                    vec![(t0.max(0.0), t1.max(0.0))]
                }
                (Constraint::Inside(_), None) => vec![],
                (Constraint::Outside(_), Some((t0, t1))) => {
                    vec![(0.0, t0.max(0.0)), (t1.max(0.0), t_max)]
                }
                (Constraint::Outside(_), None) => vec![(0.0, t_max)],
            };
            segs = intersect_interval_sets(&segs, &allowed);
            if segs.is_empty() {
                return segs;
            }
        }
        segs.retain(|(a, b)| b - a > 1e-14);
        segs
    }

    /// Sub-intervals of the ray inside the boundary shell `Ω \ Ω_ε`.
    pub fn shell_segments(&self, o: &Point, theta: &Point, eps: f64) -> Vec<(f64, f64)> {
        let inside = self.ray_segments(o, theta);
        if inside.is_empty() {
            return inside;
        }
        let t_max = inside.last().unwrap().1 + 1.0;
        // dist(x) ≤ ε on the union over constraints of {margin_i ≤ ε}
        let mut near: Vec<(f64, f64)> = Vec::new();
        for c in &self.constraints {
            let b = c.ball();
            let shifted = match c {
                // R - |x-c| ≤ ε  ⟺  outside the (R-ε)-sphere
                Constraint::Inside(_) => {
                    if b.radius <= eps {
                        near.push((0.0, t_max));
                        continue;
                    }
                    let bb = Ball::new(b.center(), b.radius - eps);
                    match crossings(o, theta, &bb) {
                        Some((t0, t1)) => vec![(0.0, t0.max(0.0)), (t1.max(0.0), t_max)],
                        None => vec![(0.0, t_max)],
                    }
                }
                // |x-c| - ρ ≤ ε  ⟺  inside the (ρ+ε)-sphere
                Constraint::Outside(_) => {
                    let bb = Ball::new(b.center(), b.radius + eps);
                    match crossings(o, theta, &bb) {
                        Some((t0, t1)) => vec![(t0.max(0.0), t1.max(0.0))],
                        None => vec![],
                    }
                }
            };
            near = union_interval_sets(&near, &shifted);
        }
        intersect_interval_sets(&inside, &near)
    }
}

/// Ray-sphere crossing parameters, if the line meets the sphere.
fn crossings(o: &Point, theta: &Point, b: &Ball) -> Option<(f64, f64)> {
    let d = o.sub(&b.center());
    let bq = d.dot(theta);
    let cq = d.norm_sq() - b.radius * b.radius;
    let disc = bq * bq - cq;
    if disc <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    Some((-bq - sq, -bq + sq))
}

fn intersect_interval_sets(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    out.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    out
}

fn union_interval_sets(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut all: Vec<(f64, f64)> = a.iter().chain(b.iter()).copied().collect();
    all.retain(|(lo, hi)| hi > lo);
    all.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let mut out: Vec<(f64, f64)> = Vec::new();
    for seg in all {
        match out.last_mut() {
            Some(last) if seg.0 <= last.1 => last.1 = last.1.max(seg.1),
            _ => out.push(seg),
        }
    }
    out
}

/// Uniform point in a ball: uniform direction, radius by the `U^{1/n}` law.
pub fn sample_ball_uniform<R: Rng>(rng: &mut R, ball: &Ball) -> Point {
    let dir = sample_sphere_uniform(rng, ball.dim());
    let u: f64 = rng.random();
    let r = ball.radius * u.powf(1.0 / ball.dim() as f64);
    ball.center().add(&dir.scale(r))
}

/// Uniform direction on `S^{n-1}` from normalized Gaussians.
pub fn sample_sphere_uniform<R: Rng>(rng: &mut R, dim: usize) -> Point {
    use rand_distr::{Distribution, StandardNormal};
    if dim == 1 {
        return if rng.random::<bool>() {
            Point::new(&[1.0])
        } else {
            Point::new(&[-1.0])
        };
    }
    loop {
        let mut p = Point::zero(dim);
        for k in 0..dim {
            let g: f64 = StandardNormal.sample(rng);
            p.set(k, g);
        }
        let n = p.norm();
        if n > 1e-12 {
            return p.scale(1.0 / n);
        }
    }
}

/// An inscribed ball with its distance slack.
#[derive(Clone, Copy, Debug)]
pub struct InscribedBall {
    pub ball: Ball,
    pub gap: f64,
}

/// Closed-form area of the 2-D lens `B_R(0) ∩ complement(B̄_ρ(c))`,
/// used as a test oracle.
pub fn lens_area_2d(outer_r: f64, carve_r: f64, center_dist: f64) -> f64 {
    use std::f64::consts::PI;
    let (r1, r2, d) = (outer_r, carve_r, center_dist);
    let full = PI * r1 * r1;
    if d >= r1 + r2 {
        return full;
    }
    if d + r2 <= r1 {
        return full - PI * r2 * r2;
    }
    if d + r1 <= r2 {
        return 0.0;
    }
    let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0);
    let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0);
    let overlap = r1 * r1 * a1.acos() + r2 * r2 * a2.acos()
        - 0.5
            * ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2))
                .max(0.0)
                .sqrt();
    full - overlap
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lens_example() -> Domain {
        Domain::lens(
            Ball::new(Point::zero(2), 2.0),
            Ball::new(Point::new(&[2.5, 0.0]), 1.0),
        )
        .unwrap()
    }

    #[test]
    fn dist_examples() {
        let b1 = Domain::ball(Ball::unit(2));
        assert!((b1.dist_boundary(&Point::zero(2)) - 1.0).abs() < 1e-15);
        assert!((b1.dist_boundary(&Point::new(&[2.0, 0.0])) + 1.0).abs() < 1e-15);
        let lens = lens_example();
        assert!((lens.dist_boundary(&Point::zero(2)) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn lens_outside_distance_corners() {
        let lens = lens_example();
        // point outside the outer circle, near a sphere projection
        let x = Point::new(&[0.0, 3.0]);
        assert!((lens.dist_boundary(&x) + 1.0).abs() < 1e-12);
        // point inside the carved ball: nearest boundary is the carve sphere
        let x = Point::new(&[2.2, 0.0]);
        let d = lens.dist_boundary(&x);
        // carve sphere at (2.5,0) radius 1: |x-c| = 0.3, projection distance 0.7,
        // but that projection (1.5, 0) lies inside Ω? It lies on the carve
        // sphere and inside the outer ball, so it is on ∂Ω: dist = 0.7.
        assert!((d + 0.7).abs() < 1e-12, "{d}");
        // a point beyond the corner: both constraints violated
        let corner_region = Point::new(&[1.95, 0.85]);
        let d = lens.dist_boundary(&corner_region);
        assert!(d < 0.0);
        // brute-force check against dense boundary sampling
        let mut best = f64::INFINITY;
        for i in 0..200_000 {
            let th = 2.0 * std::f64::consts::PI * i as f64 / 200_000.0;
            let dir = Point::new(&[th.cos(), th.sin()]);
            let p = lens.boundary_point_along(&dir);
            best = best.min(p.dist(&corner_region));
        }
        assert!(
            (d.abs() - best).abs() < 1e-4,
            "exact {} vs sampled {best}",
            d.abs()
        );
    }

    #[test]
    fn shifts_and_bookkeeping() {
        let b1 = Domain::ball(Ball::unit(2));
        let inner = b1.shift_inner(0.25).unwrap();
        assert!((inner.dist_boundary(&Point::zero(2)) - 0.75).abs() < 1e-15);
        assert!((inner.uniform_exterior_radius() - (b1.uniform_exterior_radius() + 0.25)).abs() < 1e-15);
        let outer = b1.shift_outer(0.25).unwrap();
        assert!((outer.dist_boundary(&Point::zero(2)) - 1.25).abs() < 1e-15);
        assert!((outer.uniform_exterior_radius() - (b1.uniform_exterior_radius() - 0.25)).abs() < 1e-15);
        assert!(matches!(
            b1.shift_inner(1.0),
            Err(DomainError::Empty(_))
        ));
        assert!(matches!(
            b1.shift_outer(b1.uniform_exterior_radius()),
            Err(DomainError::Invalid(_))
        ));
        // lens erosion: outer shrinks, carve grows
        let lens = lens_example();
        let le = lens.shift_inner(0.1).unwrap();
        assert!((le.dist_boundary(&Point::zero(2)) - 1.4).abs() < 1e-14);
    }

    #[test]
    fn erosion_dilation_ordering_on_samples() {
        let lens = lens_example();
        let eps = 0.15;
        let inner_outer = lens.shift_inner(eps).unwrap().shift_outer(eps).unwrap();
        let outer_inner = lens.shift_outer(eps).unwrap().shift_inner(eps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let x = lens.sample_uniform(&mut rng);
            // opening ⊆ Ω ⊆ closing
            assert!(outer_inner.contains(&x) || lens.dist_boundary(&x) < 1e-9);
            if inner_outer.contains(&x) {
                assert!(lens.contains(&x));
            }
        }
    }

    #[test]
    fn inscribed_ball_and_exterior_ball() {
        let b1 = Domain::ball(Ball::unit(2));
        let ib = b1.max_inscribed_ball(&Point::new(&[0.5, 0.0])).unwrap();
        assert!((ib.ball.radius - 0.5).abs() < 1e-15);
        assert!(b1
            .max_inscribed_ball(&Point::new(&[1.0, 0.0]))
            .is_err());

        let lens = lens_example();
        let ib = lens.max_inscribed_ball(&Point::zero(2)).unwrap();
        assert!((ib.ball.radius - 1.5).abs() < 1e-15);

        // exterior ball on the outer sphere
        let x = Point::new(&[0.0, 2.0]);
        let eb = lens.exterior_ball_at(&x).unwrap();
        assert!((eb.radius - lens.uniform_exterior_radius()).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let y = lens.sample_uniform(&mut rng);
            assert!(!eb.contains(&y), "exterior ball must avoid the domain");
        }
        // exterior ball at a point of the carved sphere points into the carve
        let x = Point::new(&[1.5, 0.0]);
        let eb = lens.exterior_ball_at(&x).unwrap();
        assert!(eb.radius <= 1.0 + 1e-12);
        for _ in 0..10_000 {
            let y = lens.sample_uniform(&mut rng);
            assert!(!eb.contains(&y));
        }
        assert!(matches!(
            lens.exterior_ball_at(&Point::zero(2)),
            Err(DomainError::NotOnBoundary(_))
        ));
    }

    #[test]
    fn uniform_sampling_moments_and_membership() {
        let b1 = Domain::ball(Ball::unit(2));
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mut mean = Point::zero(2);
        for _ in 0..n {
            let x = b1.sample_uniform(&mut rng);
            mean = mean.add(&x);
        }
        mean = mean.scale(1.0 / n as f64);
        // per-coordinate sd of the mean: 1/sqrt(n (n_dim + 2))
        let sd = (1.0 / (n as f64 * 4.0)).sqrt();
        assert!(mean.get(0).abs() < 3.5 * sd, "{:?}", mean.coords());
        assert!(mean.get(1).abs() < 3.5 * sd);

        let lens = lens_example();
        for _ in 0..5000 {
            assert!(lens.contains(&lens.sample_uniform(&mut rng)));
        }
    }

    #[test]
    fn empirical_lens_area_matches_closed_form() {
        let lens = lens_example();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let mut hits = 0u64;
        let bb = lens.bounding_ball();
        for _ in 0..n {
            let x = sample_ball_uniform(&mut rng, &bb);
            if lens.contains(&x) {
                hits += 1;
            }
        }
        let est = hits as f64 / n as f64 * std::f64::consts::PI * bb.radius * bb.radius;
        let exact = lens_area_2d(2.0, 1.0, 2.5);
        assert!((est - exact).abs() / exact < 0.01, "{est} vs {exact}");
    }

    #[test]
    fn dist_is_lipschitz_along_segments() {
        let lens = lens_example();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let a = lens.sample_uniform(&mut rng);
            let b = lens.sample_uniform(&mut rng);
            let steps = 50;
            let mut prev = lens.dist_boundary(&a);
            for i in 1..=steps {
                let t = i as f64 / steps as f64;
                let x = a.add(&b.sub(&a).scale(t));
                let d = lens.dist_boundary(&x);
                let moved = b.sub(&a).norm() / steps as f64;
                assert!(
                    (d - prev).abs() <= moved + 1e-12,
                    "1-Lipschitz violated: Δd {} over step {moved}",
                    (d - prev).abs()
                );
                prev = d;
            }
        }
    }

    #[test]
    fn ray_and_shell_segments() {
        let lens = lens_example();
        let theta = Point::new(&[1.0, 0.0]);
        let segs = lens.ray_segments(&Point::zero(2), &theta);
        // ray along +x: inside until the carve sphere at t = 1.5
        assert_eq!(segs.len(), 1);
        assert!((segs[0].1 - 1.5).abs() < 1e-12);

        let shell = lens.shell_segments(&Point::zero(2), &theta, 0.2);
        // near-boundary band [1.3, 1.5] of the carve sphere
        assert_eq!(shell.len(), 1);
        assert!((shell[0].0 - 1.3).abs() < 1e-12 && (shell[0].1 - 1.5).abs() < 1e-12);

        // direction missing the carve: band [1.8, 2.0] of the outer sphere
        let theta = Point::new(&[0.0, 1.0]);
        let shell = lens.shell_segments(&Point::zero(2), &theta, 0.2);
        assert_eq!(shell.len(), 1);
        assert!((shell[0].0 - 1.8).abs() < 1e-12 && (shell[0].1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn inscribed_ball_stays_inside_on_sphere_samples() {
        let lens = lens_example();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..500 {
            let x = lens.sample_uniform(&mut rng);
            let ib = lens.max_inscribed_ball(&x).unwrap();
            for _ in 0..20 {
                let dir = sample_sphere_uniform(&mut rng, 2);
                let y = x.add(&dir.scale(ib.ball.radius * (1.0 - 1e-12)));
                assert!(
                    lens.dist_boundary(&y) > -1e-9,
                    "inscribed ball pokes out at {:?}",
                    y.coords()
                );
            }
        }
    }

    #[test]
    fn volume_fraction_bound_holds() {
        // acceptance rate of rejection sampling should be near vol(Ω)/vol(bb)
        let lens = lens_example();
        let bb = lens.bounding_ball();
        let frac = lens_area_2d(2.0, 1.0, 2.5) / (std::f64::consts::PI * bb.radius * bb.radius);
        assert!(frac > 0.5, "lens example keeps most of the outer ball");
    }
}
