//! Small fixed-capacity points and balls in `ℝⁿ`.
//!
//! Field-level quadrature is limited to `n ≤ 3`, but the kernel formulas are
//! dimension-generic, so points carry their dimension at runtime up to
//! [`MAX_DIM`].

use serde::{Deserialize, Serialize};

/// Hard cap on the ambient dimension.
pub const MAX_DIM: usize = 4;

/// A point in `ℝⁿ` with `n ≤ MAX_DIM`, stored inline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: usize,
}

impl Point {
    pub fn new(coords: &[f64]) -> Self {
        assert!(
            (1..=MAX_DIM).contains(&coords.len()),
            "point dimension {} out of range 1..={MAX_DIM}",
            coords.len()
        );
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Point {
            coords: c,
            dim: coords.len(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(&vec![0.0; dim])
    }

    /// Unit vector along coordinate axis `k`.
    pub fn axis(dim: usize, k: usize) -> Self {
        let mut p = Self::zero(dim);
        p.coords[k] = 1.0;
        p
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        debug_assert!(k < self.dim);
        self.coords[k]
    }

    #[inline]
    pub fn set(&mut self, k: usize, v: f64) {
        debug_assert!(k < self.dim);
        self.coords[k] = v;
    }

    #[inline]
    pub fn add(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for k in 0..self.dim {
            out.coords[k] += other.coords[k];
        }
        out
    }

    #[inline]
    pub fn sub(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for k in 0..self.dim {
            out.coords[k] -= other.coords[k];
        }
        out
    }

    #[inline]
    pub fn scale(&self, t: f64) -> Point {
        let mut out = *self;
        for k in 0..self.dim {
            out.coords[k] *= t;
        }
        out
    }

    /// `self + t * dir`.
    #[inline]
    pub fn offset(&self, dir: &Point, t: f64) -> Point {
        debug_assert_eq!(self.dim, dir.dim);
        let mut out = *self;
        for k in 0..self.dim {
            out.coords[k] += t * dir.coords[k];
        }
        out
    }

    #[inline]
    pub fn dot(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut acc = 0.0;
        for k in 0..self.dim {
            acc += self.coords[k] * other.coords[k];
        }
        acc
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        self.sub(other).norm()
    }
}

/// Open ball `B_r(c)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: [f64; MAX_DIM],
    pub radius: f64,
    dim: usize,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Self {
        assert!(radius > 0.0, "ball radius must be positive, got {radius}");
        Ball {
            center: {
                let mut c = [0.0; MAX_DIM];
                c[..center.dim()].copy_from_slice(center.coords());
                c
            },
            radius,
            dim: center.dim(),
        }
    }

    pub fn unit(dim: usize) -> Self {
        Self::new(Point::zero(dim), 1.0)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn center(&self) -> Point {
        Point::new(&self.center[..self.dim])
    }

    #[inline]
    pub fn contains(&self, x: &Point) -> bool {
        x.dist(&self.center()) < self.radius
    }

    /// Signed margin to the sphere: positive inside, negative outside.
    #[inline]
    pub fn margin(&self, x: &Point) -> f64 {
        self.radius - x.dist(&self.center())
    }
}

/// Surface area of the unit sphere `S^{n-1}`.
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI.powf(n as f64 / 2.0) / crate::special::gamma(n as f64 / 2.0),
    }
}

/// Volume of the unit ball in `ℝⁿ`.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_arithmetic() {
        let a = Point::new(&[1.0, 2.0]);
        let b = Point::new(&[3.0, -1.0]);
        assert_eq!(a.add(&b).coords(), &[4.0, 1.0]);
        assert_eq!(a.sub(&b).coords(), &[-2.0, 3.0]);
        assert_eq!(a.dot(&b), 1.0);
        assert!((a.dist(&b) - 13.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sphere_areas_match_closed_forms() {
        use std::f64::consts::PI;
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        // 2π² for S³
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((ball_volume(2) - PI).abs() < 1e-13);
        assert!((ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    #[should_panic]
    fn zero_radius_rejected() {
        let _ = Ball::new(Point::zero(2), 0.0);
    }
}
