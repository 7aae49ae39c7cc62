//! Seeded test functions with analytic gradients and certified smoothness
//! bounds. All entries are 1-smooth by construction so the solvers can be
//! run on them without rescaling.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::oracle::SmoothFunction;

pub const NAMES: [&str; 3] = ["quadratic", "trig_mix", "separable_wells"];

/// Look up a catalog entry by name. The same `(name, d, seed)` triple
/// always produces the same function.
pub fn catalog(name: &str, d: usize, seed: u64) -> Result<Box<dyn SmoothFunction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (d as u64).wrapping_mul(0x9e3779b97f4a7c15));
    match name {
        "quadratic" => Ok(Box::new(Quadratic {
            center: (0..d).map(|_| rng.gen_range(0.25..0.75)).collect(),
        })),
        "trig_mix" => Ok(Box::new(TrigMix::sample(d, &mut rng))),
        "separable_wells" => Ok(Box::new(SeparableWells::sample(d, &mut rng))),
        other => Err(Error::UnknownFunction(other.to_string())),
    }
}

/// `f(x) = 0.5 |x - c|^2` with a seeded interior center; the Hessian is
/// the identity, so the smoothness constant is exactly 1 and the unique
/// stationary point on the cube is `c`.
pub struct Quadratic {
    center: Vec<f64>,
}

impl SmoothFunction for Quadratic {
    fn dimension(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &Point) -> f64 {
        0.5 * x
            .coords()
            .iter()
            .zip(&self.center)
            .map(|(xi, ci)| (xi - ci) * (xi - ci))
            .sum::<f64>()
    }

    fn gradient(&self, x: &Point) -> Option<Vec<f64>> {
        Some(
            x.coords()
                .iter()
                .zip(&self.center)
                .map(|(xi, ci)| xi - ci)
                .collect(),
        )
    }

    fn smoothness_bound(&self) -> f64 {
        1.0
    }
}

/// A cosine mixture `sum_j a_j cos(2 pi k_j . x + phi_j)` with integer
/// frequency vectors. Amplitudes are scaled so that
/// `sum_j a_j (2 pi)^2 |k_j|^2 = 1`, which bounds the Hessian norm by 1.
pub struct TrigMix {
    dim: usize,
    terms: Vec<TrigTerm>,
}

struct TrigTerm {
    amplitude: f64,
    freq: Vec<f64>, // integer-valued
    phase: f64,
}

impl TrigMix {
    fn sample(d: usize, rng: &mut ChaCha8Rng) -> Self {
        let m = d + 3;
        let mut terms = Vec::with_capacity(m);
        for _ in 0..m {
            let freq: Vec<f64> = loop {
                let k: Vec<f64> = (0..d).map(|_| rng.gen_range(-2i32..=2) as f64).collect();
                if k.iter().any(|&ki| ki != 0.0) {
                    break k;
                }
            };
            terms.push(TrigTerm {
                amplitude: rng.gen_range(0.5..1.0),
                freq,
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
            });
        }
        let curvature: f64 = terms
            .iter()
            .map(|t| {
                t.amplitude
                    * std::f64::consts::TAU.powi(2)
                    * t.freq.iter().map(|k| k * k).sum::<f64>()
            })
            .sum();
        for t in &mut terms {
            t.amplitude /= curvature;
        }
        Self { dim: d, terms }
    }
}

impl SmoothFunction for TrigMix {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Point) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let dot: f64 = t.freq.iter().zip(x.coords()).map(|(k, xi)| k * xi).sum();
                t.amplitude * (std::f64::consts::TAU * dot + t.phase).cos()
            })
            .sum()
    }

    fn gradient(&self, x: &Point) -> Option<Vec<f64>> {
        let mut grad = vec![0.0; self.dim];
        for t in &self.terms {
            let dot: f64 = t.freq.iter().zip(x.coords()).map(|(k, xi)| k * xi).sum();
            let s = (std::f64::consts::TAU * dot + t.phase).sin();
            let scale = -t.amplitude * std::f64::consts::TAU * s;
            for (gi, k) in grad.iter_mut().zip(&t.freq) {
                *gi += scale * k;
            }
        }
        Some(grad)
    }

    fn smoothness_bound(&self) -> f64 {
        1.0
    }
}

/// A separable sum of double wells: `f(x) = sum_i w_i(x_i)` where each
/// `w_i(t) = s_i (t - a_i)^2 (t - b_i)^2` has interior minima at the two
/// seeded well locations and is scaled so `sup |w_i''| = 1`. The Hessian
/// is diagonal, so the smoothness constant is exactly 1.
pub struct SeparableWells {
    wells: Vec<Well>,
}

struct Well {
    a: f64,
    b: f64,
    scale: f64,
}

impl Well {
    /// `p''(t)` for the unscaled quartic `p = (t-a)^2 (t-b)^2`.
    fn quartic_second(&self, t: f64) -> f64 {
        let u = t - self.a;
        let v = t - self.b;
        2.0 * u * u + 8.0 * u * v + 2.0 * v * v
    }

    fn value(&self, t: f64) -> f64 {
        let u = t - self.a;
        let v = t - self.b;
        self.scale * u * u * v * v
    }

    fn derivative(&self, t: f64) -> f64 {
        let u = t - self.a;
        let v = t - self.b;
        self.scale * 2.0 * u * v * (u + v)
    }
}

impl SeparableWells {
    fn sample(d: usize, rng: &mut ChaCha8Rng) -> Self {
        let wells = (0..d)
            .map(|_| {
                let a = rng.gen_range(0.15..0.35);
                let b = rng.gen_range(0.65..0.85);
                let mut well = Well { a, b, scale: 1.0 };
                // |p''| on [0,1] peaks at an endpoint or at the midpoint of
                // the wells (p'' is an upward parabola with minimum there).
                let peak = well
                    .quartic_second(0.0)
                    .max(well.quartic_second(1.0))
                    .max(well.quartic_second(0.5 * (a + b)).abs());
                well.scale = 1.0 / peak;
                well
            })
            .collect();
        Self { wells }
    }
}

impl SmoothFunction for SeparableWells {
    fn dimension(&self) -> usize {
        self.wells.len()
    }

    fn value(&self, x: &Point) -> f64 {
        self.wells
            .iter()
            .zip(x.coords())
            .map(|(w, &t)| w.value(t))
            .sum()
    }

    fn gradient(&self, x: &Point) -> Option<Vec<f64>> {
        Some(
            self.wells
                .iter()
                .zip(x.coords())
                .map(|(w, &t)| w.derivative(t))
                .collect(),
        )
    }

    fn smoothness_bound(&self) -> f64 {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{fd_gradient, norm};

    fn random_point(d: usize, rng: &mut ChaCha8Rng) -> Point {
        Point::clamped((0..d).map(|_| rng.gen_range(0.0..1.0)).collect())
    }

    #[test]
    fn unknown_name_is_an_error() {
        assert!(matches!(
            catalog("rosenbrock", 2, 0),
            Err(Error::UnknownFunction(_))
        ));
    }

    #[test]
    fn catalog_is_deterministic() {
        let f = catalog("trig_mix", 3, 42).unwrap();
        let g = catalog("trig_mix", 3, 42).unwrap();
        let p = Point::new(vec![0.3, 0.6, 0.9]).unwrap();
        assert_eq!(f.value(&p).to_bits(), g.value(&p).to_bits());
    }

    #[test]
    fn sampled_gradient_lipschitz_ratio_below_one() {
        for name in NAMES {
            for d in [2, 3] {
                let f = catalog(name, d, 1).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(99);
                let mut worst: f64 = 0.0;
                for _ in 0..2000 {
                    let x = random_point(d, &mut rng);
                    let y = random_point(d, &mut rng);
                    let dist = x.dist(&y);
                    if dist < 1e-9 {
                        continue;
                    }
                    let gx = f.gradient(&x).unwrap();
                    let gy = f.gradient(&y).unwrap();
                    let diff: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a - b).collect();
                    worst = worst.max(norm(&diff) / dist);
                }
                assert!(worst <= 1.0 + 1e-9, "{name} d={d}: ratio {worst}");
            }
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        for name in NAMES {
            let f = catalog(name, 3, 7).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..100 {
                let x = random_point(3, &mut rng);
                let analytic = f.gradient(&x).unwrap();
                let numeric = fd_gradient(f.as_ref(), &x);
                let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
                let rel = norm(&diff) / norm(&analytic).max(1.0);
                assert!(rel <= 1e-5, "{name}: rel err {rel} at {:?}", x.coords());
            }
        }
    }

    #[test]
    fn normalized_trig_entry_keeps_unit_bound() {
        // the catalog certifies 1-smoothness already, so normalization is
        // the identity scaling and the sampled ratio stays below 1
        let f = crate::oracle::normalize(catalog("trig_mix", 2, 4).unwrap()).unwrap();
        assert_eq!(f.smoothness_bound(), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..500 {
            let x = random_point(2, &mut rng);
            let y = random_point(2, &mut rng);
            let dist = x.dist(&y);
            if dist < 1e-9 {
                continue;
            }
            let gx = f.gradient(&x).unwrap();
            let gy = f.gradient(&y).unwrap();
            let diff: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a - b).collect();
            assert!(norm(&diff) / dist <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn wells_touch_zero_at_both_minima() {
        let f = catalog("separable_wells", 2, 11).unwrap();
        // the global minimum value is exactly 0, attained at well corners;
        // scan a fine grid to confirm nothing dips below
        let mut best = f64::MAX;
        for i in 0..=400 {
            for j in 0..=400 {
                let p = Point::clamped(vec![i as f64 / 400.0, j as f64 / 400.0]);
                best = best.min(f.value(&p));
            }
        }
        assert!(best >= 0.0);
        assert!(best < 1e-4);
    }
}
