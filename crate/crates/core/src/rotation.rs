//! Alignment of two `R^k`-valued traceless quadratic forms on R⁴.
//!
//! For `S ∈ O(4)`, `T ∈ O(k)` the rotated tuple is `P_{S,T} = (Σ_j T_ij S P_j Sᵀ)_i` and
//! `⟨P_{S,T}, R⟩ = Tr(Tᵀ A(S))` with `A_ij(S) = Tr(S P_j Sᵀ R_i)`. For fixed `S` the best
//! `T` is the polar factor of `A(S)` and the optimum is the trace norm `‖A(S)‖_tr`.
//! `S` is found by a multi-start Nelder–Mead search over both components of O(4).

use crate::error::{Error, Result};
use crate::harmonics::{Bilinear, Trilinear};
use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{DMatrix, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub type Mat4 = [[f64; 4]; 4];

const NONZERO: f64 = 1e-12;

/// `k` symmetric traceless 4×4 matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracelessFormTuple {
    pub components: Vec<Mat4>,
}

fn to_m4(a: &Mat4) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| a[i][j])
}

fn from_m4(m: &Matrix4<f64>) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

impl TracelessFormTuple {
    /// Validates symmetry and tracelessness to `1e-12`.
    pub fn new(components: Vec<Mat4>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Dimension("need at least one component".into()));
        }
        for c in &components {
            let asym = (0..4)
                .flat_map(|i| (0..4).map(move |j| (c[i][j] - c[j][i]).abs()))
                .fold(0.0, f64::max);
            if asym > 1e-12 {
                return Err(Error::Asymmetric(asym));
            }
            let tr: f64 = (0..4).map(|i| c[i][i]).sum();
            if tr.abs() > 1e-12 {
                return Err(Error::HypothesisViolated(format!(
                    "component has trace {tr:e}"
                )));
            }
        }
        Ok(TracelessFormTuple { components })
    }

    /// Symmetrizes a bilinear form and removes its trace part.
    pub fn from_bilinear(b: &Bilinear) -> Result<Self> {
        let comps = b
            .iter()
            .map(|c| {
                let tr = (0..4).map(|i| c[i][i]).sum::<f64>() / 4.0;
                std::array::from_fn(|i| {
                    std::array::from_fn(|j| {
                        0.5 * (c[i][j] + c[j][i]) - if i == j { tr } else { 0.0 }
                    })
                })
            })
            .collect();
        Self::new(comps)
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn norm(&self) -> f64 {
        self.components
            .iter()
            .flatten()
            .flatten()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_nonzero(&self) -> bool {
        self.norm() > NONZERO
    }

    /// `(Σ_j T_ij S P_j Sᵀ)_i`.
    pub fn transformed(&self, s: &Mat4, t: &DMatrix<f64>) -> Self {
        let sm = to_m4(s);
        let conj: Vec<Matrix4<f64>> = self
            .components
            .iter()
            .map(|p| sm * to_m4(p) * sm.transpose())
            .collect();
        let comps = (0..self.k())
            .map(|i| {
                from_m4(
                    &conj
                        .iter()
                        .enumerate()
                        .fold(Matrix4::zeros(), |acc, (j, c)| acc + c * t[(i, j)]),
                )
            })
            .collect();
        TracelessFormTuple { components: comps }
    }

    /// Frobenius pairing `Σ_i Tr(P_i R_i)`.
    pub fn pairing(&self, o: &Self) -> f64 {
        self.components
            .iter()
            .zip(&o.components)
            .map(|(a, b)| {
                (0..4)
                    .flat_map(|i| (0..4).map(move |j| a[i][j] * b[i][j]))
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Outcome of the alignment search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationResult {
    pub s: Mat4,
    /// Row-major `k×k`.
    pub t: Vec<Vec<f64>>,
    pub pairing: f64,
    pub trace_norm: f64,
}

impl RotationResult {
    pub fn t_matrix(&self) -> DMatrix<f64> {
        let k = self.t.len();
        DMatrix::from_fn(k, k, |i, j| self.t[i][j])
    }
}

/// `A_ij = Tr(S P_j Sᵀ R_i)`.
pub fn build_a(s: &Mat4, p: &TracelessFormTuple, r: &TracelessFormTuple) -> Result<DMatrix<f64>> {
    if p.k() != r.k() {
        return Err(Error::Dimension(format!(
            "P has {} components, R has {}",
            p.k(),
            r.k()
        )));
    }
    let sm = to_m4(s);
    if (sm.transpose() * sm - Matrix4::identity()).abs().max() > 1e-10 {
        return Err(Error::Precondition("S must be orthogonal".into()));
    }
    let conj: Vec<Matrix4<f64>> = p
        .components
        .iter()
        .map(|pj| sm * to_m4(pj) * sm.transpose())
        .collect();
    let rs: Vec<Matrix4<f64>> = r.components.iter().map(to_m4).collect();
    Ok(DMatrix::from_fn(p.k(), p.k(), |i, j| {
        (conj[j] * rs[i]).trace()
    }))
}

/// `T = U Vᵀ` maximizing `Tr(Tᵀ A)`, with the maximum `Σ σ_i`.
pub fn optimal_t(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if !a.is_square() || a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Precondition(
            "A must be a finite square matrix".into(),
        ));
    }
    let svd = a.clone().svd(true, true);
    let (Some(u), Some(vt)) = (svd.u, svd.v_t) else {
        return Err(Error::Precondition(
            "singular value decomposition failed".into(),
        ));
    };
    let t = u * vt;
    let value: f64 = svd.singular_values.iter().sum();
    let achieved = (t.transpose() * a).trace();
    if (achieved - value).abs() > 1e-10 * (1.0 + value) {
        return Err(Error::Precondition(format!(
            "SVD check failed: {achieved} vs {value}"
        )));
    }
    Ok((t, value))
}

fn trace_norm(a: &DMatrix<f64>) -> f64 {
    a.clone().singular_values().iter().sum()
}

/// `q ↦ a q` and `q ↦ q b` as 4×4 matrices on quaternions `(w, x, y, z)`.
fn quat_pair(a: [f64; 4], b: [f64; 4]) -> Matrix4<f64> {
    let [w, x, y, z] = a;
    let l = Matrix4::new(w, -x, -y, -z, x, w, -z, y, y, z, w, -x, z, -y, x, w);
    let [w, x, y, z] = b;
    let r = Matrix4::new(w, -x, -y, -z, x, w, z, -y, y, -z, w, x, z, y, -x, w);
    l * r
}

fn reflection() -> Matrix4<f64> {
    Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, -1.0))
}

fn skew(w: &[f64]) -> Matrix4<f64> {
    let mut k = Matrix4::zeros();
    let idx = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    for (n, &(i, j)) in idx.iter().enumerate() {
        k[(i, j)] = w[n];
        k[(j, i)] = -w[n];
    }
    k
}

/// Nearest orthogonal matrix (polar factor).
fn orthonormalize(m: &Matrix4<f64>) -> Matrix4<f64> {
    let svd = m.svd(true, true);
    svd.u.expect("u requested") * svd.v_t.expect("v_t requested")
}

fn unit_quaternion(rng: &mut ChaCha8Rng) -> [f64; 4] {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return q.map(|x| x / n);
        }
    }
}

struct ChartCost<'a> {
    base: Matrix4<f64>,
    p: &'a TracelessFormTuple,
    r: &'a TracelessFormTuple,
}

impl ChartCost<'_> {
    fn at(&self, w: &[f64]) -> Matrix4<f64> {
        self.base * skew(w).exp()
    }
}

impl CostFunction for ChartCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;
    fn cost(&self, w: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let s = from_m4(&self.at(w));
        Ok(-trace_norm(
            &build_a(&s, self.p, self.r).map_err(|e| argmin::core::Error::msg(e.to_string()))?,
        ))
    }
}

/// Nelder–Mead refinement on the chart `S₀ exp(K(ω))`, re-centred once.
fn refine(
    start: Matrix4<f64>,
    p: &TracelessFormTuple,
    r: &TracelessFormTuple,
) -> (Matrix4<f64>, f64) {
    let mut base = start;
    for step in [0.5, 0.05] {
        let cost = ChartCost { base, p, r };
        let mut simplex = vec![vec![0.0; 6]];
        for i in 0..6 {
            let mut v = vec![0.0; 6];
            v[i] = step;
            simplex.push(v);
        }
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(1e-13)
            .expect("positive tolerance");
        let res = Executor::new(cost, solver)
            .configure(|s| s.max_iters(3000))
            .run();
        if let Ok(res) = res {
            if let Some(w) = res.state.best_param {
                base = orthonormalize(&ChartCost { base, p, r }.at(&w));
            }
        }
    }
    let s = from_m4(&base);
    let v = build_a(&s, p, r).map(|a| trace_norm(&a)).unwrap_or(0.0);
    (base, v)
}

fn identity_result(k: usize) -> RotationResult {
    RotationResult {
        s: from_m4(&Matrix4::identity()),
        t: (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect(),
        pairing: 0.0,
        trace_norm: 0.0,
    }
}

/// Maximizes `‖A(S)‖_tr` over O(4) and returns `S`, the optimal `T` and the pairing.
///
/// Starts: the identity, the reflection, and `restarts` random quaternion pairs, each
/// used in both components of O(4). Restart `i` draws from stream `i` of a generator
/// seeded with `seed`, so results are deterministic.
pub fn search_s(
    p: &TracelessFormTuple,
    r: &TracelessFormTuple,
    restarts: usize,
    seed: u64,
) -> Result<RotationResult> {
    if restarts == 0 {
        return Err(Error::Precondition("restarts must be at least 1".into()));
    }
    if p.k() != r.k() {
        return Err(Error::Dimension(format!(
            "P has {} components, R has {}",
            p.k(),
            r.k()
        )));
    }
    if !p.is_nonzero() || !r.is_nonzero() {
        return Ok(identity_result(p.k()));
    }
    let mut starts = vec![Matrix4::identity(), reflection()];
    for i in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let s = quat_pair(unit_quaternion(&mut rng), unit_quaternion(&mut rng));
        starts.push(s);
        starts.push(s * reflection());
    }
    let found: Vec<(Matrix4<f64>, f64)> = starts.par_iter().map(|s| refine(*s, p, r)).collect();
    let (best, _) = found.iter().fold(
        (found[0].0, found[0].1),
        |acc, x| if x.1 > acc.1 { *x } else { acc },
    );
    let s = from_m4(&best);
    let a = build_a(&s, p, r)?;
    let (t, value) = optimal_t(&a)?;
    let pairing = (0..p.k())
        .flat_map(|i| (0..p.k()).map(move |j| (i, j)))
        .map(|(i, j)| t[(i, j)] * a[(i, j)])
        .sum();
    let out = RotationResult {
        s,
        t: (0..p.k())
            .map(|i| (0..p.k()).map(|j| t[(i, j)]).collect())
            .collect(),
        pairing,
        trace_norm: value,
    };
    if !(pairing > 1e-10 * p.norm() * r.norm()) {
        return Err(Error::HypothesisViolated(format!(
            "no S with positive pairing found after {restarts} restarts (best {pairing:e})"
        )));
    }
    Ok(out)
}

/// `B'_i(ζ, ζ) = Σ_j T_ij B_j(Sᵀζ, Sᵀζ)`, i.e. `S B_j Sᵀ` mixed by `T`.
pub fn rotate_bilinear(b: &Bilinear, s: &Mat4, t: &DMatrix<f64>) -> Bilinear {
    let sm = to_m4(s);
    let conj: Vec<Matrix4<f64>> = b.iter().map(|c| sm * to_m4(c) * sm.transpose()).collect();
    (0..b.len())
        .map(|i| {
            from_m4(
                &conj
                    .iter()
                    .enumerate()
                    .fold(Matrix4::zeros(), |acc, (j, c)| acc + c * t[(i, j)]),
            )
        })
        .collect()
}

/// Cubic analogue of [`rotate_bilinear`].
pub fn rotate_trilinear(c: &Trilinear, s: &Mat4, t: &DMatrix<f64>) -> Trilinear {
    let conj: Vec<[[[f64; 4]; 4]; 4]> = c
        .iter()
        .map(|cj| {
            std::array::from_fn(|a| {
                std::array::from_fn(|b| {
                    std::array::from_fn(|d| {
                        let mut acc = 0.0;
                        for x in 0..4 {
                            for y in 0..4 {
                                for z in 0..4 {
                                    acc += s[a][x] * s[b][y] * s[d][z] * cj[x][y][z];
                                }
                            }
                        }
                        acc
                    })
                })
            })
        })
        .collect();
    (0..c.len())
        .map(|i| {
            std::array::from_fn(|a| {
                std::array::from_fn(|b| {
                    std::array::from_fn(|d| {
                        (0..c.len()).map(|j| t[(i, j)] * conj[j][a][b][d]).sum()
                    })
                })
            })
        })
        .collect()
}

/// Uniformly random orthogonal `n×n` matrix (QR of a Gaussian-like matrix with sign fix).
pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    // Box–Muller normals
    let mut normal = || {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let g = DMatrix::from_fn(n, n, |_, _| normal());
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let signs = DMatrix::from_fn(n, n, |i, j| if i == j { r[(i, i)].signum() } else { 0.0 });
    q * signs
}

/// Random symmetric traceless tuple with entries of order one.
pub fn random_tuple(k: usize, rng: &mut impl Rng) -> TracelessFormTuple {
    let comps = (0..k)
        .map(|_| {
            let mut m = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in i..4 {
                    let v = rng.gen_range(-1.0..1.0);
                    m[i][j] = v;
                    m[j][i] = v;
                }
            }
            let tr = (0..4).map(|i| m[i][i]).sum::<f64>() / 4.0;
            for (i, row) in m.iter_mut().enumerate() {
                row[i] -= tr;
            }
            m
        })
        .collect();
    TracelessFormTuple { components: comps }
}
