//! Fixed symmetric quadrature rules on the unit sphere `S^{n-1}`, `n ≤ 3`.
//!
//! Rules are antipodally symmetric at every level, which the principal-value
//! evaluator relies on: pairing `θ` with `-θ` turns first-order Taylor terms
//! into exact cancellations. The circle rule uses offset (midpoint) angles so
//! that half-space indicators integrate exactly by symmetry.

use super::{QuadConfig, QuadError};
use crate::geom::Point;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Direction/weight pairs; weights sum to the sphere area.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub dirs: Vec<Point>,
    pub weights: Vec<f64>,
    pub level: usize,
}

impl SphereRule {
    /// Weighted sum of `f` over the rule directions.
    pub fn integrate(&self, mut f: impl FnMut(&Point) -> f64) -> f64 {
        self.dirs
            .iter()
            .zip(&self.weights)
            .map(|(d, w)| w * f(d))
            .sum()
    }
}

pub const MAX_LEVEL: usize = 9;

fn build_rule(n: usize, level: usize) -> SphereRule {
    use std::f64::consts::PI;
    match n {
        1 => SphereRule {
            dirs: vec![Point::new(&[1.0]), Point::new(&[-1.0])],
            weights: vec![1.0, 1.0],
            level,
        },
        2 => {
            let m = 16usize << level;
            let w = 2.0 * PI / m as f64;
            let mut dirs = Vec::with_capacity(m);
            for k in 0..m {
                let phi = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                dirs.push(Point::new(&[phi.cos(), phi.sin()]));
            }
            SphereRule {
                dirs,
                weights: vec![w; m],
                level,
            }
        }
        3 => {
            // product rule: Gauss-Legendre in cos θ, offset-uniform in φ
            let m_mu = 8usize << level;
            let m_phi = 2 * m_mu;
            let (nodes, gl_w) = gauss_legendre(m_mu);
            let mut dirs = Vec::with_capacity(m_mu * m_phi);
            let mut weights = Vec::with_capacity(m_mu * m_phi);
            for (mu, wmu) in nodes.iter().zip(&gl_w) {
                let sin_t = (1.0 - mu * mu).max(0.0).sqrt();
                for k in 0..m_phi {
                    let phi = 2.0 * PI * (k as f64 + 0.5) / m_phi as f64;
                    dirs.push(Point::new(&[sin_t * phi.cos(), sin_t * phi.sin(), *mu]));
                    weights.push(wmu * 2.0 * PI / m_phi as f64);
                }
            }
            SphereRule {
                dirs,
                weights,
                level,
            }
        }
        _ => panic!("sphere rules implemented for n in 1..=3, got n={n}"),
    }
}

/// Cached rule lookup.
pub fn sphere_rule(n: usize, level: usize) -> Arc<SphereRule> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<SphereRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((n, level))
        .or_insert_with(|| Arc::new(build_rule(n, level)))
        .clone()
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    use std::f64::consts::PI;
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let half = m.div_ceil(2);
    for i in 0..half {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for k in 2..=m {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Integral over `S^{n-1}` of a profile, doubling the rule level until two
/// consecutive levels agree within tolerance.
pub fn sphere_integral(
    n: usize,
    f: impl Fn(&Point) -> f64,
    cfg: &QuadConfig,
) -> Result<f64, QuadError> {
    if n == 1 {
        let rule = sphere_rule(1, 0);
        return Ok(rule.integrate(&f));
    }
    let mut prev = sphere_rule(n, 0).integrate(&f);
    for level in 1..=MAX_LEVEL {
        let cur = sphere_rule(n, level).integrate(&f);
        if (cur - prev).abs() <= cfg.abs_tol.max(cfg.rel_tol * cur.abs()) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(QuadError::ToleranceNotMet {
        achieved: f64::NAN,
        requested: cfg.rel_tol,
    })
}
