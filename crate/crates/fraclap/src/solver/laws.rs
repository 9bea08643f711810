//! Exact sampling laws for the ball walk: the exit-position radial law of the
//! centered Poisson kernel and the radial density of the centered Green's
//! function for source importance sampling.

use crate::geom::sphere_area;
use crate::kernels::FracParams;
use crate::special::{beta, inc_beta, inc_beta_reg, inv_inc_beta_reg};
use rand::Rng;

const TABLE: usize = 512;

/// Radial exit law from the center of the unit ball: the exit radius `R > 1`
/// has CDF `F(R) = I_{1-R^{-2}}(1-s, s)`. Sampling inverts the complementary
/// variable `w = R^{-2}`, which satisfies `I_w(s, 1-s) = 1 - F`.
pub struct ExitLaw {
    s: f64,
    ln_b: f64,
    /// `w`-quantiles at probabilities `i/TABLE`.
    table: Vec<f64>,
}

impl ExitLaw {
    pub fn new(s: f64) -> Self {
        let table = (0..=TABLE)
            .map(|i| {
                let p = i as f64 / TABLE as f64;
                inv_inc_beta_reg(p, s, 1.0 - s)
            })
            .collect();
        ExitLaw {
            s,
            ln_b: beta(s, 1.0 - s).ln(),
            table,
        }
    }

    /// CDF of the exit radius, `F(R) = I_{1-R^{-2}}(1-s, s)`.
    pub fn cdf(&self, radius: f64) -> f64 {
        if radius <= 1.0 {
            return 0.0;
        }
        inc_beta_reg(1.0 - radius.powi(-2), 1.0 - self.s, self.s)
    }

    /// Draws an exit radius (in units of the ball radius), strictly > 1.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.random();
        if u <= 0.0 {
            u = f64::MIN_POSITIVE;
        }
        // Solve I_w(s, 1-s) = u for w = R^{-2}.
        let w = self.invert(u);
        w.max(f64::MIN_POSITIVE).sqrt().recip()
    }

    fn invert(&self, p: f64) -> f64 {
        let idx = (p * TABLE as f64) as usize;
        if idx == 0 || idx + 1 >= TABLE {
            // table brackets are too coarse in the extreme tails
            return inv_inc_beta_reg(p, self.s, 1.0 - self.s);
        }
        let frac = p * TABLE as f64 - idx as f64;
        let mut w = self.table[idx] * (1.0 - frac) + self.table[idx + 1] * frac;
        let (mut lo, mut hi) = (self.table[idx], self.table[idx + 1]);
        for _ in 0..24 {
            let f = inc_beta_reg(w, self.s, 1.0 - self.s) - p;
            if f.abs() <= 1e-14 * p.max(1e-4) {
                break;
            }
            if f > 0.0 {
                hi = w;
            } else {
                lo = w;
            }
            let ln_pdf = (self.s - 1.0) * w.ln() - self.s * (1.0 - w).ln() - self.ln_b;
            let step = f * (-ln_pdf).exp();
            let next = w - step;
            w = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
        }
        w
    }
}

/// Radial law of the centered Green's function on the unit ball: density
/// proportional to `G(0, q e) q^{n-1}`, with closed-form CDF
/// `M(q)/Z = [q^{2s} B(1-q²; s, n/2-s) + B(q²; n/2, s)] · ωκ/(2sZ)`.
pub struct GreenRadialLaw {
    s: f64,
    half_n: f64,
    coef: f64,
    total: f64,
    table: Vec<f64>,
}

impl GreenRadialLaw {
    pub fn new(p: &FracParams) -> Self {
        let s = p.s;
        let half_n = p.n as f64 / 2.0;
        let coef = sphere_area(p.n) * p.kappa_ns / (2.0 * s);
        let total = coef * beta(half_n, s);
        let mut law = GreenRadialLaw {
            s,
            half_n,
            coef,
            total,
            table: Vec::new(),
        };
        law.table = (0..=TABLE)
            .map(|i| law.invert_bisect(i as f64 / TABLE as f64))
            .collect();
        law
    }

    /// Unnormalized cumulative mass up to radius `q`.
    fn mass(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        if q >= 1.0 {
            return self.total;
        }
        let q2 = q * q;
        self.coef
            * (q.powf(2.0 * self.s) * inc_beta(1.0 - q2, self.s, self.half_n - self.s)
                + inc_beta(q2, self.half_n, self.s))
    }

    pub fn cdf(&self, q: f64) -> f64 {
        self.mass(q) / self.total
    }

    fn density(&self, q: f64) -> f64 {
        self.coef * 2.0 * self.s
            * q.powf(2.0 * self.s - 1.0)
            * inc_beta(1.0 - q * q, self.s, self.half_n - self.s)
            / self.total
    }

    fn invert_bisect(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Draws a radius fraction in (0, 1).
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.random();
        if u <= 0.0 {
            u = f64::MIN_POSITIVE;
        }
        let idx = (u * TABLE as f64) as usize;
        if idx == 0 || idx >= TABLE {
            return self.invert_bisect(u).clamp(1e-300, 1.0 - 1e-16);
        }
        let frac = u * TABLE as f64 - idx as f64;
        let mut q = self.table[idx] * (1.0 - frac) + self.table[idx + 1] * frac;
        let (mut lo, mut hi) = (self.table[idx], self.table[idx + 1]);
        for _ in 0..24 {
            let f = self.cdf(q) - u;
            if f.abs() <= 1e-14 * u.max(1e-4) {
                break;
            }
            if f > 0.0 {
                hi = q;
            } else {
                lo = q;
            }
            let d = self.density(q);
            let next = if d > 0.0 { q - f / d } else { 0.5 * (lo + hi) };
            q = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
        }
        q.clamp(1e-300, 1.0 - 1e-16)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn exit_cdf_closed_form_half() {
        // s = 1/2: F(R) = (2/π) asin(√(1-R^{-2})); F(2) = 2/3
        let law = ExitLaw::new(0.5);
        assert!((law.cdf(2.0) - 2.0 / 3.0).abs() < 1e-12);
        let want = 2.0 / PI * (1.0f64 - 1.0 / (1.1f64 * 1.1)).sqrt().asin();
        assert!((law.cdf(1.1) - want).abs() < 1e-12);
    }

    #[test]
    fn exit_sampling_median() {
        let law = ExitLaw::new(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut radii: Vec<f64> = (0..40_001).map(|_| law.sample(&mut rng)).collect();
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = radii[20_000];
        assert!((median - 2f64.sqrt()).abs() < 0.02, "{median}");
        assert!(radii[0] > 1.0);
    }

    #[test]
    fn exit_inverse_is_inverse_of_cdf() {
        for &s in &[0.25, 0.5, 0.75] {
            let law = ExitLaw::new(s);
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            for _ in 0..2000 {
                let r = law.sample(&mut rng);
                assert!(r > 1.0);
            }
            // CDF(quantile(p)) = p through the sampler path; the extreme
            // upper tail is ulp-limited in w (the radius stays exact), so
            // its residual tolerance is looser
            for &p in &[0.001, 0.3, 0.5, 0.9, 0.999] {
                let w = law.invert(p);
                let tol = if p > 0.99 { 5e-8 } else { 1e-10 };
                assert!(
                    (inc_beta_reg(w, s, 1.0 - s) - p).abs() < tol,
                    "s={s} p={p}"
                );
            }
        }
    }

    #[test]
    fn green_radial_total_mass_is_source_mass() {
        for &(n, s) in &[(2usize, 0.5), (2, 0.25), (3, 0.75)] {
            let p = FracParams::new(n, s).unwrap();
            let law = GreenRadialLaw::new(&p);
            assert!(
                (law.total - p.ball_source_mass()).abs() / law.total < 1e-12,
                "n={n} s={s}: {} vs {}",
                law.total,
                p.ball_source_mass()
            );
        }
    }

    #[test]
    fn green_radial_sampling_matches_cdf() {
        let p = FracParams::new(2, 0.5).unwrap();
        let law = GreenRadialLaw::new(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let mut samples: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // KS distance against the closed-form CDF
        let mut ks: f64 = 0.0;
        for (i, &q) in samples.iter().enumerate() {
            let f = law.cdf(q);
            ks = ks.max((f - i as f64 / n as f64).abs());
            ks = ks.max((f - (i + 1) as f64 / n as f64).abs());
        }
        assert!(ks < 0.006, "KS = {ks}");
    }
}
