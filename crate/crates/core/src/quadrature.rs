//! Quadrature rules: Gauss–Legendre on intervals, a product rule on S³, and
//! tensor rules on balls, annuli, exterior domains and boxes in R⁴.

use crate::error::Result;
use gauss_quad::chebyshev::GaussChebyshevSecondKind;
use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Volume of the unit 3-sphere, 2π².
pub const VOL_S3: f64 = 2.0 * PI * PI;

/// Gauss–Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(n.max(2)).expect("degree >= 2");
    let (h, m) = (0.5 * (b - a), 0.5 * (b + a));
    rule.as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (m + h * x, h * w))
        .collect()
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        xs.iter().sum()
    } else {
        let (l, r) = xs.split_at(xs.len() / 2);
        pairwise_sum(l) + pairwise_sum(r)
    }
}

/// Product quadrature on the unit sphere S³ ⊂ R⁴.
#[derive(Clone, Debug)]
pub struct SphereQuadrature {
    pub nodes: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

/// Builds a rule integrating all polynomials of degree `<= exactness` exactly.
///
/// Hyperspherical coordinates `x1 = t`, `x2 = s·u`, `(x3, x4) = s·√(1−u²)·(cos φ, sin φ)`
/// with `s = √(1−t²)`; the measure is `√(1−t²) dt du dφ`. The `t` direction uses
/// Gauss–Chebyshev of the second kind (weight `√(1−t²)`), `u` uses Gauss–Legendre
/// and `φ` the trapezoid rule.
pub fn sphere_quadrature(exactness: usize) -> SphereQuadrature {
    let n = (exactness + 2) / 2;
    let n = n.max(2);
    let m = (exactness + 1).max(3);
    let tr = GaussChebyshevSecondKind::new(n).expect("degree >= 2");
    let ur = GaussLegendre::new(n).expect("degree >= 2");
    let mut nodes = Vec::with_capacity(n * n * m);
    let mut weights = Vec::with_capacity(n * n * m);
    let wphi = 2.0 * PI / m as f64;
    for &(t, wt) in tr.as_node_weight_pairs() {
        let s = (1.0 - t * t).max(0.0).sqrt();
        for &(u, wu) in ur.as_node_weight_pairs() {
            let c = (1.0 - u * u).max(0.0).sqrt();
            for k in 0..m {
                let phi = wphi * k as f64;
                nodes.push([t, s * u, s * c * phi.cos(), s * c * phi.sin()]);
                weights.push(wt * wu * wphi);
            }
        }
    }
    SphereQuadrature {
        nodes,
        weights,
        exactness,
    }
}

impl SphereQuadrature {
    /// Integrates a scalar function over S³.
    pub fn integrate(&self, f: impl Fn([f64; 4]) -> f64) -> f64 {
        let v: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .collect();
        pairwise_sum(&v)
    }
}

/// Integration domain in parameter space R⁴.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// `|z| < radius`.
    Ball { radius: f64 },
    /// `inner < |z| < outer`.
    Annulus { inner: f64, outer: f64 },
    /// `|z| > radius`.
    Exterior { radius: f64 },
    /// Axis-aligned box `lo <= z <= hi`.
    Box { lo: [f64; 4], hi: [f64; 4] },
}

impl Domain {
    /// Whether `z` lies in the closed domain.
    pub fn contains(&self, z: [f64; 4]) -> bool {
        let r = norm4(z);
        let eps = 1e-12;
        match *self {
            Domain::Ball { radius } => r <= radius * (1.0 + eps),
            Domain::Annulus { inner, outer } => {
                r >= inner * (1.0 - eps) && r <= outer * (1.0 + eps)
            }
            Domain::Exterior { radius } => r >= radius * (1.0 - eps),
            Domain::Box { lo, hi } => (0..4).all(|i| z[i] >= lo[i] - eps && z[i] <= hi[i] + eps),
        }
    }
}

/// Euclidean norm in R⁴.
pub fn norm4(z: [f64; 4]) -> f64 {
    z.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Resolution of a tensor quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    /// Gauss–Legendre nodes in the radial (or per-axis, for boxes) direction.
    pub radial: usize,
    /// Polynomial exactness degree of the S³ rule.
    pub sphere: usize,
    /// If set, the integral is recomputed on a refined rule and the two must agree to this relative tolerance.
    pub refine_tol: Option<f64>,
}

impl QuadSpec {
    /// `n` radial nodes and an S³ rule exact to degree `n`.
    pub fn order(n: usize) -> Self {
        QuadSpec {
            radial: n,
            sphere: n,
            refine_tol: None,
        }
    }

    pub fn with_check(mut self, tol: f64) -> Self {
        self.refine_tol = Some(tol);
        self
    }

    /// The next refinement level.
    pub fn refined(&self) -> Self {
        QuadSpec {
            radial: self.radial + self.radial / 2 + 2,
            sphere: self.sphere + 4,
            refine_tol: None,
        }
    }
}

/// Nodes and weights (including the volume element) for a domain.
pub fn domain_rule(domain: &Domain, spec: &QuadSpec) -> (Vec<[f64; 4]>, Vec<f64>) {
    let radial: Vec<(f64, f64)> = match *domain {
        Domain::Ball { radius } => gauss_legendre(spec.radial, 0.0, radius)
            .into_iter()
            .map(|(r, w)| (r, w * r.powi(3)))
            .collect(),
        Domain::Annulus { inner, outer } => gauss_legendre(spec.radial, inner, outer)
            .into_iter()
            .map(|(r, w)| (r, w * r.powi(3)))
            .collect(),
        Domain::Exterior { radius } => gauss_legendre(spec.radial, 0.0, 1.0)
            .into_iter()
            .map(|(s, w)| (radius / s, w * radius.powi(4) / s.powi(5)))
            .collect(),
        Domain::Box { lo, hi } => {
            let axes: Vec<Vec<(f64, f64)>> = (0..4)
                .map(|i| gauss_legendre(spec.radial, lo[i], hi[i]))
                .collect();
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            for a in &axes[0] {
                for b in &axes[1] {
                    for c in &axes[2] {
                        for d in &axes[3] {
                            nodes.push([a.0, b.0, c.0, d.0]);
                            weights.push(a.1 * b.1 * c.1 * d.1);
                        }
                    }
                }
            }
            return (nodes, weights);
        }
    };
    let sq = sphere_quadrature(spec.sphere);
    let mut nodes = Vec::with_capacity(radial.len() * sq.nodes.len());
    let mut weights = Vec::with_capacity(nodes.capacity());
    for &(r, wr) in &radial {
        for (x, w) in sq.nodes.iter().zip(&sq.weights) {
            nodes.push([r * x[0], r * x[1], r * x[2], r * x[3]]);
            weights.push(wr * w);
        }
    }
    (nodes, weights)
}

/// Integrates a vector-valued integrand over a domain with deterministic reduction.
pub fn integrate_vec<const K: usize, F>(domain: &Domain, spec: &QuadSpec, f: F) -> Result<[f64; K]>
where
    F: Fn([f64; 4]) -> Result<[f64; K]> + Sync,
{
    let run = |spec: &QuadSpec| -> Result<[f64; K]> {
        let (nodes, weights) = domain_rule(domain, spec);
        let vals: Vec<[f64; K]> = nodes.par_iter().map(|z| f(*z)).collect::<Result<_>>()?;
        Ok(std::array::from_fn(|k| {
            let col: Vec<f64> = vals.iter().zip(&weights).map(|(v, w)| v[k] * w).collect();
            pairwise_sum(&col)
        }))
    };
    let coarse = run(spec)?;
    if let Some(tol) = spec.refine_tol {
        let fine = run(&spec.refined())?;
        let scale = fine.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
        for k in 0..K {
            if (coarse[k] - fine[k]).abs() > tol * scale {
                return Err(crate::error::Error::NotConverged {
                    coarse: coarse[k],
                    fine: fine[k],
                });
            }
        }
        return Ok(fine);
    }
    Ok(coarse)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma(x: f64) -> f64 {
        // half-integer and integer arguments only
        if (x - x.round()).abs() < 1e-12 {
            (1..x.round() as u64).map(|k| k as f64).product()
        } else {
            let mut g = PI.sqrt();
            let mut y = 0.5;
            while y < x - 1e-9 {
                g *= y;
                y += 1.0;
            }
            g
        }
    }

    /// ∫_{S³} x^a dA in closed form.
    fn moment(a: [u32; 4]) -> f64 {
        if a.iter().any(|k| k % 2 == 1) {
            return 0.0;
        }
        let b: Vec<f64> = a.iter().map(|&k| (k as f64 + 1.0) / 2.0).collect();
        2.0 * b.iter().map(|&x| gamma(x)).product::<f64>() / gamma(b.iter().sum())
    }

    #[test]
    fn weights_sum_to_volume() {
        for d in [0, 2, 5, 12] {
            let q = sphere_quadrature(d);
            let s: f64 = pairwise_sum(&q.weights);
            assert!((s - VOL_S3).abs() < 1e-12 * VOL_S3, "d={d}: {s}");
        }
    }

    #[test]
    fn exact_on_monomials() {
        let d = 10;
        let q = sphere_quadrature(d);
        for a0 in 0..=d as u32 {
            for a1 in 0..=d as u32 - a0 {
                for a2 in 0..=d as u32 - a0 - a1 {
                    for a3 in 0..=d as u32 - a0 - a1 - a2 {
                        let a = [a0, a1, a2, a3];
                        let got = q.integrate(|x| (0..4).map(|i| x[i].powi(a[i] as i32)).product());
                        let want = moment(a);
                        assert!(
                            (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                            "{a:?}: {got} vs {want}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn second_moment() {
        let q = sphere_quadrature(4);
        let v = q.integrate(|x| x[0] * x[0]);
        assert!((v - VOL_S3 / 4.0).abs() < 1e-13);
    }

    #[test]
    fn domain_volumes() {
        let spec = QuadSpec::order(8);
        let ball: [f64; 1] =
            integrate_vec(&Domain::Ball { radius: 2.0 }, &spec, |_| Ok([1.0])).unwrap();
        assert!((ball[0] - PI * PI / 2.0 * 16.0).abs() < 1e-11);
        let ann: [f64; 1] = integrate_vec(
            &Domain::Annulus {
                inner: 1.0,
                outer: 2.0,
            },
            &spec,
            |_| Ok([1.0]),
        )
        .unwrap();
        assert!((ann[0] - PI * PI / 2.0 * 15.0).abs() < 1e-11);
        // ∫_{|z|>2} |z|^-6 = 2π² ∫_2^∞ r^-3 dr = π²/4
        let ext: [f64; 1] = integrate_vec(&Domain::Exterior { radius: 2.0 }, &spec, |z| {
            Ok([norm4(z).powi(-6)])
        })
        .unwrap();
        assert!((ext[0] - PI * PI / 4.0).abs() < 1e-12);
        let bx: [f64; 1] = integrate_vec(
            &Domain::Box {
                lo: [0.0; 4],
                hi: [1.0, 2.0, 1.0, 1.0],
            },
            &spec,
            |z| Ok([z[1]]),
        )
        .unwrap();
        assert!((bx[0] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn refinement_check_reports_disagreement() {
        let spec = QuadSpec {
            radial: 2,
            sphere: 2,
            refine_tol: Some(1e-12),
        };
        let r: Result<[f64; 1]> = integrate_vec(&Domain::Ball { radius: 1.0 }, &spec, |z| {
            Ok([norm4(z).powi(9)])
        });
        assert!(r.is_err());
    }
}
