use fraclap::geom::Point;
use fraclap::kernels::FracParams;
use fraclap::quadrature::*;
use fraclap::verify::nonuniqueness_field;

fn main() {
    let p = FracParams::new(2, 0.5).unwrap();
    let u = nonuniqueness_field(&p);
    for i in 0..10 {
        let r = 0.08 * i as f64;
        let ang = 0.7 * i as f64;
        let x = Point::new(&[r * ang.cos(), r * ang.sin()]);
        for (rel, abs) in [(1e-8, 1e-10), (1e-6, 1e-7), (1e-5, 1e-5), (1e-4, 1e-4)] {
            let q = QuadConfig { rel_tol: rel, abs_tol: abs, ..QuadConfig::default() };
            match frac_laplacian_pv(&p, &u, &x, &q) {
                Ok(v) => { println!("i={i} rel={rel:.0e}: PV = {v:+.3e}"); break; }
                Err(e) => println!("i={i} rel={rel:.0e}: ERR {e}"),
            }
        }
    }
}
