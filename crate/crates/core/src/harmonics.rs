//! Real spherical harmonics of degrees 1–3 on S³ and harmonic projection of
//! symmetric bilinear and trilinear forms.
//!
//! Basis members are normalized so that `∫_{S³} Y² = Vol(S³) = 2π²`.

use crate::error::{Error, Result};
use crate::jet::{mono_count, mono_exps, Jet, NVAR};
use crate::quadrature::{sphere_quadrature, SphereQuadrature, VOL_S3};
use serde::{Deserialize, Serialize};
use std::sync::LazyLock;

/// Symmetric bilinear form R⁴×R⁴ → R^m, stored per codomain component.
pub type Bilinear = Vec<[[f64; 4]; 4]>;
/// Symmetric trilinear form R⁴×R⁴×R⁴ → R^m, stored per codomain component.
pub type Trilinear = Vec<[[[f64; 4]; 4]; 4]>;
/// Harmonic coefficients `[basis index][component]`.
pub type Coefficients = Vec<Vec<f64>>;

/// Homogeneous polynomial on R⁴ in the graded-lexicographic monomial order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomPoly {
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

fn offset(d: usize) -> usize {
    if d == 0 {
        0
    } else {
        mono_count(d - 1)
    }
}

impl HomPoly {
    pub fn zero(degree: usize) -> Self {
        HomPoly {
            degree,
            coeffs: vec![0.0; mono_count(degree) - offset(degree)],
        }
    }

    /// Exponent tuple of the `i`-th monomial.
    pub fn exps(&self, i: usize) -> [u8; NVAR] {
        mono_exps(offset(self.degree) + i)
    }

    fn index_of(degree: usize, e: [u8; NVAR]) -> usize {
        crate::jet::mono_index(e).expect("supported degree") - offset(degree)
    }

    pub fn monomial(e: [u8; NVAR]) -> Self {
        let d = e.iter().map(|&x| x as usize).sum();
        let mut p = Self::zero(d);
        p.coeffs[Self::index_of(d, e)] = 1.0;
        p
    }

    pub fn eval(&self, x: [f64; 4]) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| {
                let e = self.exps(i);
                c * (0..4).map(|k| x[k].powi(e[k] as i32)).product::<f64>()
            })
            .sum()
    }

    pub fn eval_jet(&self, x: &[Jet; 4]) -> Jet {
        let order = x.iter().map(Jet::order).min().unwrap_or(0);
        let mut out = Jet::zero(order);
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            let e = self.exps(i);
            let mut t = Jet::constant(*c, order);
            for k in 0..4 {
                for _ in 0..e[k] {
                    t *= x[k];
                }
            }
            out += t;
        }
        out
    }

    /// Flat Laplacian on R⁴, computed on coefficients.
    pub fn laplacian(&self) -> Self {
        if self.degree < 2 {
            return Self::zero(0);
        }
        let mut out = Self::zero(self.degree - 2);
        for (i, c) in self.coeffs.iter().enumerate() {
            let e = self.exps(i);
            for k in 0..4 {
                if e[k] >= 2 {
                    let mut f = e;
                    f[k] -= 2;
                    out.coeffs[Self::index_of(self.degree - 2, f)] +=
                        c * (e[k] as f64) * (e[k] as f64 - 1.0);
                }
            }
        }
        out
    }

    /// `|x|² · p`.
    pub fn times_r2(&self) -> Self {
        let mut out = Self::zero(self.degree + 2);
        for (i, c) in self.coeffs.iter().enumerate() {
            let e = self.exps(i);
            for k in 0..4 {
                let mut f = e;
                f[k] += 2;
                out.coeffs[Self::index_of(self.degree + 2, f)] += c;
            }
        }
        out
    }

    fn axpy(&mut self, a: f64, other: &Self) {
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += a * y;
        }
    }

    /// Exact L²(S³) inner product through closed-form sphere moments.
    pub fn inner_s3(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            let ei = self.exps(i);
            for (j, b) in other.coeffs.iter().enumerate() {
                if *b == 0.0 {
                    continue;
                }
                let ej = other.exps(j);
                s += a * b * sphere_moment(std::array::from_fn(|k| ei[k] as u32 + ej[k] as u32));
            }
        }
        s
    }
}

fn gamma_half(two_x: u32) -> f64 {
    // Γ(two_x / 2) for positive integers two_x
    if two_x.is_multiple_of(2) {
        (1..two_x / 2).map(|k| k as f64).product()
    } else {
        let mut g = std::f64::consts::PI.sqrt();
        let mut y = 1;
        while y < two_x {
            g *= y as f64 / 2.0;
            y += 2;
        }
        g
    }
}

/// `∫_{S³} x^a dA = 2 Π Γ((a_i+1)/2) / Γ((|a|+4)/2)`, zero if any exponent is odd.
pub fn sphere_moment(a: [u32; 4]) -> f64 {
    if a.iter().any(|k| k % 2 == 1) {
        return 0.0;
    }
    let num: f64 = a.iter().map(|&k| gamma_half(k + 1)).product();
    2.0 * num / gamma_half(a.iter().sum::<u32>() + 4)
}

/// Orthogonal basis of degree-`h` spherical harmonics on S³.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HarmonicBasis {
    pub degree: usize,
    pub size: usize,
    pub polynomials: Vec<HomPoly>,
}

impl HarmonicBasis {
    pub fn eval_all(&self, x: [f64; 4]) -> Vec<f64> {
        self.polynomials.iter().map(|p| p.eval(x)).collect()
    }
}

fn construct(degree: usize) -> HarmonicBasis {
    let size = (degree + 1) * (degree + 1);
    let n = mono_count(degree) - offset(degree);
    let mut out: Vec<HomPoly> = Vec::with_capacity(size);
    for i in 0..n {
        let mut p = HomPoly::monomial(mono_exps(offset(degree) + i));
        if degree >= 2 {
            // for degree <= 3 the Laplacian of p is harmonic, so one step suffices
            let corr = p.laplacian().times_r2();
            p.axpy(-1.0 / (4.0 * degree as f64), &corr);
        }
        for _ in 0..2 {
            for q in &out {
                let c = p.inner_s3(q) / VOL_S3;
                p.axpy(-c, q);
            }
        }
        let nrm = p.inner_s3(&p);
        if nrm > 1e-10 {
            let s = (VOL_S3 / nrm).sqrt();
            p.coeffs.iter_mut().for_each(|c| *c *= s);
            out.push(p);
        }
        if out.len() == size {
            break;
        }
    }
    assert_eq!(out.len(), size);
    HarmonicBasis {
        degree,
        size,
        polynomials: out,
    }
}

static BASES: LazyLock<[HarmonicBasis; 3]> =
    LazyLock::new(|| [construct(1), construct(2), construct(3)]);

/// Degree-`degree` harmonic basis (4, 9 or 16 members).
pub fn build_basis(degree: usize) -> Result<HarmonicBasis> {
    basis(degree).cloned()
}

/// Shared reference to a cached basis.
pub fn basis(degree: usize) -> Result<&'static HarmonicBasis> {
    match degree {
        1..=3 => Ok(&BASES[degree - 1]),
        d => Err(Error::DegreeOutOfRange(d)),
    }
}

/// Intrinsic Laplacian of a basis member at a unit vector, computed from the
/// degree-0 homogeneous extension `Y(x/|x|)` with jets.
pub fn sphere_laplacian(p: &HomPoly, x: [f64; 4]) -> f64 {
    let v = Jet::vars(x, 2);
    let r2 = crate::jet::dot(&v, &v);
    let inv = r2.powf(-0.5);
    let u: [Jet; 4] = std::array::from_fn(|k| v[k] * inv);
    let f = p.eval_jet(&u);
    let h = f.hessian();
    (0..4).map(|k| h[k][k]).sum()
}

static PROJ_QUAD: LazyLock<SphereQuadrature> = LazyLock::new(|| sphere_quadrature(10));

fn check_sym2(b: &Bilinear) -> Result<()> {
    let scale = b
        .iter()
        .flat_map(|m| m.iter().flatten())
        .fold(0.0f64, |a, x| a.max(x.abs()))
        .max(1.0);
    let mut worst = 0.0f64;
    for m in b {
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((m[i][j] - m[j][i]).abs());
            }
        }
    }
    if worst > 1e-12 * scale {
        return Err(Error::Asymmetric(worst));
    }
    Ok(())
}

fn check_sym3(c: &Trilinear) -> Result<()> {
    let scale = c
        .iter()
        .flat_map(|m| m.iter().flatten().flatten())
        .fold(0.0f64, |a, x| a.max(x.abs()))
        .max(1.0);
    let mut worst = 0.0f64;
    for t in c {
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    let v = t[i][j][k];
                    for w in [t[j][i][k], t[k][j][i], t[i][k][j], t[j][k][i], t[k][i][j]] {
                        worst = worst.max((v - w).abs());
                    }
                }
            }
        }
    }
    if worst > 1e-12 * scale {
        return Err(Error::Asymmetric(worst));
    }
    Ok(())
}

/// `B(u, u)` per component.
pub fn eval_bilinear(b: &Bilinear, u: [f64; 4]) -> Vec<f64> {
    b.iter()
        .map(|m| {
            (0..4)
                .map(|i| (0..4).map(|j| m[i][j] * u[i] * u[j]).sum::<f64>())
                .sum()
        })
        .collect()
}

/// `C(u, u, u)` per component.
pub fn eval_trilinear(c: &Trilinear, u: [f64; 4]) -> Vec<f64> {
    c.iter()
        .map(|t| {
            let mut s = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        s += t[i][j][k] * u[i] * u[j] * u[k];
                    }
                }
            }
            s
        })
        .collect()
}

fn project_onto(degree: usize, m: usize, f: impl Fn([f64; 4]) -> Vec<f64>) -> Vec<Vec<f64>> {
    let b = basis(degree).expect("supported degree");
    let q = &*PROJ_QUAD;
    let mut acc = vec![vec![0.0; m]; b.size];
    for (x, w) in q.nodes.iter().zip(&q.weights) {
        let y = b.eval_all(*x);
        let v = f(*x);
        for i in 0..b.size {
            for k in 0..m {
                acc[i][k] += w * y[i] * v[k];
            }
        }
    }
    acc.iter_mut().flatten().for_each(|c| *c /= VOL_S3);
    acc
}

/// Splits `B(u,u)` on S³ into `tr B / 4` plus degree-2 harmonics.
///
/// Returns `(tr B, coefficients)` with 9 coefficient vectors.
pub fn project_quadratic(b: &Bilinear) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    check_sym2(b)?;
    let trace: Vec<f64> = b.iter().map(|m| (0..4).map(|i| m[i][i]).sum()).collect();
    let coeffs = project_onto(2, b.len(), |x| eval_bilinear(b, x));
    Ok((trace, coeffs))
}

/// Splits `C(u,u,u)` on S³ into degree-1 and degree-3 harmonics.
pub fn project_cubic(c: &Trilinear) -> Result<(Coefficients, Coefficients)> {
    check_sym3(c)?;
    let f = |x| eval_trilinear(c, x);
    Ok((project_onto(1, c.len(), f), project_onto(3, c.len(), f)))
}

/// `Σ_i c_i Y_i(u)` for a degree-`degree` coefficient table.
pub fn synthesize(degree: usize, coeffs: &[Vec<f64>], u: [f64; 4]) -> Vec<f64> {
    let b = basis(degree).expect("supported degree");
    let y = b.eval_all(u);
    let m = coeffs.first().map_or(0, Vec::len);
    (0..m)
        .map(|k| coeffs.iter().zip(&y).map(|(c, yi)| c[k] * yi).sum())
        .collect()
}

/// Harmonic coefficients of the boundary forms `P̊`, `Q` (first germ) and `R`, `S` (second germ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormCoefficients {
    pub m: usize,
    pub r0: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub q1: Vec<Vec<f64>>,
    pub s1: Vec<Vec<f64>>,
    pub q3: Vec<Vec<f64>>,
    pub s3: Vec<Vec<f64>>,
}

impl FormCoefficients {
    pub fn zeros(m: usize) -> Self {
        let z = |n: usize| vec![vec![0.0; m]; n];
        FormCoefficients {
            m,
            r0: vec![0.0; m],
            p: z(9),
            r: z(9),
            q1: z(4),
            s1: z(4),
            q3: z(16),
            s3: z(16),
        }
    }

    /// Projects the germ forms `(P, Q)` and `(R, S)`; the trace of `P` is discarded
    /// and a quarter of the trace of `R` becomes `r0`.
    pub fn from_forms(p: &Bilinear, q: &Trilinear, r: &Bilinear, s: &Trilinear) -> Result<Self> {
        let m = p.len();
        if q.len() != m || r.len() != m || s.len() != m {
            return Err(Error::Dimension(
                "all forms must share the codomain dimension".into(),
            ));
        }
        let (_, pc) = project_quadratic(p)?;
        let (tr, rc) = project_quadratic(r)?;
        let (q1, q3) = project_cubic(q)?;
        let (s1, s3) = project_cubic(s)?;
        Ok(FormCoefficients {
            m,
            r0: tr.iter().map(|t| t / 4.0).collect(),
            p: pc,
            r: rc,
            q1,
            s1,
            q3,
            s3,
        })
    }

    /// Checks table shapes.
    pub fn validate(&self) -> Result<()> {
        let ok = |v: &Vec<Vec<f64>>, n: usize| v.len() == n && v.iter().all(|x| x.len() == self.m);
        if self.r0.len() == self.m
            && ok(&self.p, 9)
            && ok(&self.r, 9)
            && ok(&self.q1, 4)
            && ok(&self.s1, 4)
            && ok(&self.q3, 16)
            && ok(&self.s3, 16)
        {
            Ok(())
        } else {
            Err(Error::Dimension(
                "form coefficient tables have inconsistent shapes".into(),
            ))
        }
    }

    /// `Σ_i |p_i|²`.
    pub fn p_norm_sq(&self) -> f64 {
        self.p.iter().flatten().map(|x| x * x).sum()
    }

    /// `Σ_i ⟨p_i, r_i⟩`.
    pub fn p_dot_r(&self) -> f64 {
        self.p
            .iter()
            .zip(&self.r)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum()
    }
}
