//! Triharmonic interpolation on the annulus `γ < |z| < 1`.
//!
//! Every solution of `Δ₀³w = 0` that is a radial profile times a degree-`h`
//! spherical harmonic lies in a six-dimensional family of powers `r^k` (and,
//! for repeated roots, `r^k ln r`). Matching value, `∂_r` and `∂²_r` at both
//! boundary spheres gives one 6×6 system per harmonic.

use crate::error::{Error, Result};
use crate::harmonics::{basis, FormCoefficients};
use crate::jet::{dot, Jet};
use crate::quadrature::norm4;
use crate::scalar::{Dd, Real};
use serde::{Deserialize, Serialize};

/// Radial families, indexed by harmonic degree 0..=3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    E,
    F,
    G,
    H,
}

/// One basis member `r^k` or `r^k ln r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Member {
    pub k: i32,
    pub log: bool,
}

const fn mb(k: i32, log: bool) -> Member {
    Member { k, log }
}

impl Family {
    pub const ALL: [Family; 4] = [Family::E, Family::F, Family::G, Family::H];

    pub fn degree(self) -> usize {
        self as usize
    }

    /// Number of spherical harmonics of this degree (1, 4, 9, 16).
    pub fn multiplicity(self) -> usize {
        (self.degree() + 1).pow(2)
    }

    pub fn members(self) -> [Member; 6] {
        match self {
            Family::E => [
                mb(-2, false),
                mb(0, false),
                mb(0, true),
                mb(2, false),
                mb(2, true),
                mb(4, false),
            ],
            Family::F => [
                mb(-3, false),
                mb(-1, false),
                mb(1, false),
                mb(1, true),
                mb(3, false),
                mb(5, false),
            ],
            Family::G => [
                mb(-4, false),
                mb(-2, false),
                mb(0, false),
                mb(2, false),
                mb(4, false),
                mb(6, false),
            ],
            Family::H => [
                mb(-5, false),
                mb(-3, false),
                mb(-1, false),
                mb(3, false),
                mb(5, false),
                mb(7, false),
            ],
        }
    }

    pub fn from_tag(s: &str) -> Result<Family> {
        match s.to_ascii_uppercase().as_str() {
            "E" => Ok(Family::E),
            "F" => Ok(Family::F),
            "G" => Ok(Family::G),
            "H" => Ok(Family::H),
            _ => Err(Error::Precondition(format!("unknown family {s:?}"))),
        }
    }
}

/// `(k)_d` and its derivative in `k`.
fn falling(k: f64, d: usize) -> (f64, f64) {
    let f: f64 = (0..d).map(|j| k - j as f64).product();
    let df: f64 = (0..d)
        .map(|j| {
            (0..d)
                .filter(|&i| i != j)
                .map(|i| k - i as f64)
                .product::<f64>()
        })
        .sum();
    (f, df)
}

/// `d`-th radial derivative of a member at `r`, with `ln r` supplied by the caller.
pub(crate) fn member_derivative<T: Real>(m: Member, r: T, ln_r: T, d: usize) -> T {
    let (f, df) = falling(m.k as f64, d);
    let p = r.powi(m.k - d as i32);
    if m.log {
        p * (T::of(f) * ln_r + T::of(df))
    } else {
        p * T::of(f)
    }
}

/// `d`-th derivative (`d ≤ 3`) of the `index`-th (0-based) member of `family` at `r`.
pub fn radial_eval(family: Family, index: usize, r: f64, d: usize) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::OutsideDomain(format!("radius {r} must be positive")));
    }
    if index >= 6 || d > 3 {
        return Err(Error::Precondition(format!(
            "index {index} / derivative order {d} out of range"
        )));
    }
    Ok(member_derivative(family.members()[index], r, r.ln(), d))
}

/// Matrix `L` with `Δ₀(member_j · Y) = Σ_i L[i][j] member_i · Y`.
pub fn laplacian_action(family: Family) -> [[i64; 6]; 6] {
    let h = family.degree() as i64;
    let ms = family.members();
    let find = |k: i32, log: bool| ms.iter().position(|m| m.k == k && m.log == log);
    let mut l = [[0i64; 6]; 6];
    for (j, m) in ms.iter().enumerate() {
        let k = m.k as i64;
        let eig = (k - h) * (k + h + 2);
        if eig != 0 {
            let i = find(m.k - 2, m.log).expect("family closed under the Laplacian");
            l[i][j] += eig;
        }
        if m.log && 2 * k + 2 != 0 {
            let i = find(m.k - 2, false).expect("family closed under the Laplacian");
            l[i][j] += 2 * k + 2;
        }
    }
    l
}

/// Applies `laplacian_action` `n` times to a coefficient vector.
pub fn apply_laplacian(family: Family, coeffs: &[f64; 6], n: usize) -> [f64; 6] {
    let l = laplacian_action(family);
    let mut c = *coeffs;
    for _ in 0..n {
        c = std::array::from_fn(|i| (0..6).map(|j| l[i][j] as f64 * c[j]).sum());
    }
    c
}

/// Boundary matrix: rows are value, `∂_r`, `∂²_r` at `r = γ`, then at `r = 1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryMatrix {
    pub family: Family,
    pub gamma: f64,
    pub m: [[f64; 6]; 6],
}

pub(crate) fn boundary_rows<T: Real>(family: Family, gamma: T) -> [[T; 6]; 6] {
    let ms = family.members();
    let lg = gamma.ln();
    std::array::from_fn(|row| {
        let (r, lr, d) = if row < 3 {
            (gamma, lg, row)
        } else {
            (T::one(), T::zero(), row - 3)
        };
        std::array::from_fn(|j| member_derivative(ms[j], r, lr, d))
    })
}

pub fn boundary_matrix(family: Family, gamma: f64) -> Result<BoundaryMatrix> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::OutsideDomain(format!(
            "γ = {gamma} must lie in (0, 1)"
        )));
    }
    Ok(BoundaryMatrix {
        family,
        gamma,
        m: boundary_rows(family, gamma),
    })
}

/// Determinant of the boundary matrix by elimination in double-double.
pub fn direct_determinant(family: Family, gamma: f64) -> Result<f64> {
    boundary_matrix(family, gamma)?;
    Ok(det6(&boundary_rows::<Dd>(family, Dd::of(gamma))).to_f64())
}

/// Determinant of a 6×6 matrix by partially pivoted elimination.
pub fn det6<T: Real>(m: &[[T; 6]; 6]) -> T {
    let mut a = *m;
    let mut det = T::one();
    for k in 0..6 {
        let p = (k..6)
            .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
            .unwrap();
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        if a[k][k] == T::zero() {
            return T::zero();
        }
        det *= a[k][k];
        for i in k + 1..6 {
            let f = a[i][k] / a[k][k];
            for j in k..6 {
                let t = f * a[k][j];
                a[i][j] -= t;
            }
        }
    }
    det
}

/// Closed-form determinants of the four boundary matrices as polynomials in `γ` and `ln γ`.
pub fn closed_form_determinant(family: Family, g: f64) -> f64 {
    closed_form_determinant_in::<Dd>(family, Dd::of(g)).to_f64()
}

/// Closed-form determinant evaluated in the arithmetic `T`; near `γ = 1` the terms cancel
/// to many digits, so doubles are not enough there.
pub fn closed_form_determinant_in<T: Real>(family: Family, g: T) -> T {
    let l = g.ln();
    let p = |n: i32| g.powi(n);
    let c = |x: f64| T::of(x);
    let poly = |terms: &[(f64, i32, i32)]| {
        terms
            .iter()
            .fold(T::zero(), |acc, &(k, n, lp)| acc + c(k) * p(n) * l.powi(lp))
    };
    match family {
        Family::E => poly(&[
            (-16.0, 5, 0),
            (256.0, 3, 2),
            (-384.0, 3, 1),
            (272.0, 3, 0),
            (384.0, 1, 1),
            (-736.0, 1, 0),
            (384.0, -1, 1),
            (736.0, -1, 0),
            (-256.0, -3, 2),
            (-384.0, -3, 1),
            (-272.0, -3, 0),
            (16.0, -5, 0),
        ]),
        Family::F => {
            c(128.0)
                * poly(&[
                    (-2.0, 6, 1),
                    (3.0, 6, 0),
                    (-12.0, 4, 0),
                    (18.0, 2, 1),
                    (15.0, 2, 0),
                    (-32.0, 0, 1),
                    (18.0, -2, 1),
                    (-15.0, -2, 0),
                    (12.0, -4, 0),
                    (-2.0, -6, 1),
                    (-3.0, -6, 0),
                ])
        }
        Family::G => poly(&[
            (-256.0, 9, 0),
            (2304.0, 7, 0),
            (-9216.0, 5, 0),
            (21504.0, 3, 0),
            (-32256.0, 1, 0),
            (32256.0, -1, 0),
            (-21504.0, -3, 0),
            (9216.0, -5, 0),
            (-2304.0, -7, 0),
            (256.0, -9, 0),
        ]),
        Family::H => {
            c(256.0)
                * poly(&[
                    (-1.0, 12, 0),
                    (36.0, 8, 0),
                    (-160.0, 6, 0),
                    (315.0, 4, 0),
                    (-288.0, 2, 0),
                    (288.0, -2, 0),
                    (-315.0, -4, 0),
                    (160.0, -6, 0),
                    (-36.0, -8, 0),
                    (1.0, -12, 0),
                ])
        }
    }
}

/// Arithmetic used for the 6×6 solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Precision {
    Double,
    #[default]
    DoubleDouble,
}

/// Solves `M x = b` for several right-hand sides by column-equilibrated, partially pivoted
/// elimination. Returns the solutions and a pivot-ratio condition estimate.
pub(crate) fn solve6<T: Real>(
    m: &[[T; 6]; 6],
    rhs: &[[T; 6]],
    eps: f64,
) -> Result<(Vec<[T; 6]>, f64)> {
    // power-of-two column scales keep the scaling exact
    let scale: [f64; 6] = std::array::from_fn(|j| {
        let mx = (0..6).map(|i| m[i][j].to_f64().abs()).fold(0.0, f64::max);
        if mx > 0.0 {
            2f64.powi(-mx.log2().round() as i32)
        } else {
            1.0
        }
    });
    let mut a: [[T; 6]; 6] =
        std::array::from_fn(|i| std::array::from_fn(|j| m[i][j] * T::of(scale[j])));
    let mut b: Vec<[T; 6]> = rhs.to_vec();
    let mut perm: [usize; 6] = std::array::from_fn(|i| i);
    let (mut pmax, mut pmin) = (0.0f64, f64::INFINITY);
    for k in 0..6 {
        let p = (k..6)
            .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
            .unwrap();
        a.swap(p, k);
        perm.swap(p, k);
        for v in b.iter_mut() {
            v.swap(p, k);
        }
        let piv = a[k][k].to_f64().abs();
        pmax = pmax.max(piv);
        pmin = pmin.min(piv);
        if !(pmin > eps * pmax) {
            return Err(Error::Singular(if pmin > 0.0 {
                pmax / pmin
            } else {
                f64::INFINITY
            }));
        }
        for i in k + 1..6 {
            let f = a[i][k] / a[k][k];
            for j in k..6 {
                let t = f * a[k][j];
                a[i][j] -= t;
            }
            for v in b.iter_mut() {
                let t = f * v[k];
                v[i] -= t;
            }
        }
    }
    let sols = b
        .into_iter()
        .map(|mut v| {
            for i in (0..6).rev() {
                let mut s = v[i];
                for j in i + 1..6 {
                    s -= a[i][j] * v[j];
                }
                v[i] = s / a[i][i];
            }
            std::array::from_fn(|j| v[j] * T::of(scale[j]))
        })
        .collect();
    Ok((sols, pmax / pmin))
}

/// Relative residual `‖Mx − b‖∞ / ‖b‖∞` (0 for a zero right-hand side).
pub(crate) fn residual<T: Real>(m: &[[T; 6]; 6], x: &[T; 6], b: &[T; 6]) -> f64 {
    let nb = b.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
    let nr = (0..6)
        .map(|i| {
            let mut s = -b[i];
            for j in 0..6 {
                s += m[i][j] * x[j];
            }
            s.to_f64().abs()
        })
        .fold(0.0, f64::max);
    if nb == 0.0 {
        nr
    } else {
        nr / nb
    }
}

/// Right-hand-side patterns: the `γ`-side data enters as `inner_scale · inner_pattern`,
/// the `1`-side data as `outer_scale · outer_pattern`.
pub(crate) fn patterns<T: Real>(family: Family, gamma: T) -> ([T; 6], [T; 6]) {
    let z = T::zero();
    let half = T::of(0.5);
    let one = T::one();
    match family {
        Family::E => ([z; 6], [z, z, z, half, one, one]),
        Family::G => ([half, z, z, z, z, z], [z, z, z, half, one, one]),
        Family::F | Family::H => {
            let six = T::of(6.0);
            (
                [
                    one / (six * gamma),
                    -one / (six * gamma * gamma),
                    one / (T::of(3.0) * gamma.powi(3)),
                    z,
                    z,
                    z,
                ],
                [z, z, z, one / six, half, one],
            )
        }
    }
}

/// Solutions for unit inner data and unit outer data.
#[derive(Clone, Copy, Debug)]
pub struct UnitResponses<T> {
    pub family: Family,
    pub inner: [T; 6],
    pub outer: [T; 6],
    pub condition: f64,
    pub residual: f64,
}

pub fn unit_responses<T: Real>(family: Family, gamma: T, eps: f64) -> Result<UnitResponses<T>> {
    let g = gamma.to_f64();
    if !(g > 0.0 && g < 1.0) {
        return Err(Error::OutsideDomain(format!("γ = {g} must lie in (0, 1)")));
    }
    let m = boundary_rows(family, gamma);
    let (pi, po) = patterns(family, gamma);
    let (sol, cond) = solve6(&m, &[pi, po], eps)?;
    let res = residual(&m, &sol[0], &pi).max(residual(&m, &sol[1], &po));
    if res > 1e-10 {
        return Err(Error::Singular(cond));
    }
    Ok(UnitResponses {
        family,
        inner: sol[0],
        outer: sol[1],
        condition: cond,
        residual: res,
    })
}

/// Unit responses in the requested precision, rounded to doubles.
pub fn unit_responses_f64(
    family: Family,
    gamma: f64,
    precision: Precision,
) -> Result<UnitResponses<f64>> {
    match precision {
        Precision::Double => unit_responses::<f64>(family, gamma, 1e-15),
        Precision::DoubleDouble => {
            let r = unit_responses::<Dd>(family, Dd::of(gamma), 1e-30)?;
            Ok(UnitResponses {
                family,
                inner: r.inner.map(Real::to_f64),
                outer: r.outer.map(Real::to_f64),
                condition: r.condition,
                residual: r.residual,
            })
        }
    }
}

/// Inner and outer data vectors (each of length `m`) for block `i` of a family.
pub fn block_data(
    coeffs: &FormCoefficients,
    family: Family,
    i: usize,
    alpha: f64,
    beta: f64,
) -> (Vec<f64>, Vec<f64>) {
    let sc = |v: &[f64], s: f64| v.iter().map(|x| x * s).collect::<Vec<_>>();
    match family {
        Family::E => (vec![0.0; coeffs.m], sc(&coeffs.r0, beta)),
        Family::F => (
            sc(&coeffs.q1[i], alpha * alpha),
            sc(&coeffs.s1[i], beta * beta),
        ),
        Family::G => (sc(&coeffs.p[i], alpha), sc(&coeffs.r[i], beta)),
        Family::H => (
            sc(&coeffs.q3[i], alpha * alpha),
            sc(&coeffs.s3[i], beta * beta),
        ),
    }
}

/// The triharmonic interpolant: coefficient tables `[block][member][component]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interpolant {
    pub m: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub a: Vec<Vec<Vec<f64>>>,
    pub b: Vec<Vec<Vec<f64>>>,
    pub c: Vec<Vec<Vec<f64>>>,
    pub d: Vec<Vec<Vec<f64>>>,
}

impl Interpolant {
    pub fn zero(m: usize, gamma: f64, alpha: f64, beta: f64) -> Self {
        let t = |n: usize| vec![vec![vec![0.0; m]; 6]; n];
        Interpolant {
            m,
            gamma,
            alpha,
            beta,
            a: t(1),
            b: t(4),
            c: t(9),
            d: t(16),
        }
    }

    pub fn family(&self, f: Family) -> &Vec<Vec<Vec<f64>>> {
        match f {
            Family::E => &self.a,
            Family::F => &self.b,
            Family::G => &self.c,
            Family::H => &self.d,
        }
    }

    fn family_mut(&mut self, f: Family) -> &mut Vec<Vec<Vec<f64>>> {
        match f {
            Family::E => &mut self.a,
            Family::F => &mut self.b,
            Family::G => &mut self.c,
            Family::H => &mut self.d,
        }
    }

    /// Radial coefficients of block `i`, component `k`.
    pub fn radial(&self, f: Family, i: usize, k: usize) -> [f64; 6] {
        let t = &self.family(f)[i];
        std::array::from_fn(|l| t[l][k])
    }

    /// Largest `|Δ₀³ w|` coefficient obtained through the Laplacian-action matrices.
    pub fn max_trilaplacian(&self) -> f64 {
        let mut worst = 0.0f64;
        for f in Family::ALL {
            for i in 0..f.multiplicity() {
                for k in 0..self.m {
                    let c = apply_laplacian(f, &self.radial(f, i, k), 3);
                    worst = c.iter().fold(worst, |a, x| a.max(x.abs()));
                }
            }
        }
        worst
    }

    fn assemble(
        coeffs: &FormCoefficients,
        gamma: f64,
        alpha: f64,
        beta: f64,
        responses: impl Fn(Family) -> Result<([f64; 6], [f64; 6])>,
    ) -> Result<Self> {
        coeffs.validate()?;
        let mut out = Interpolant::zero(coeffs.m, gamma, alpha, beta);
        for f in Family::ALL {
            let (ri, ro) = responses(f)?;
            for i in 0..f.multiplicity() {
                let (u, v) = block_data(coeffs, f, i, alpha, beta);
                let blk = &mut out.family_mut(f)[i];
                for l in 0..6 {
                    for k in 0..coeffs.m {
                        blk[l][k] = ri[l] * u[k] + ro[l] * v[k];
                    }
                }
            }
        }
        Ok(out)
    }
}

fn check_scales(gamma: f64, alpha: f64, beta: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::OutsideDomain(format!(
            "γ = {gamma} must lie in (0, 1)"
        )));
    }
    if !(alpha > 0.0 && beta >= 0.0) {
        return Err(Error::Precondition(format!(
            "scales α = {alpha}, β = {beta} must be positive"
        )));
    }
    Ok(())
}

/// Exact interpolant from double-double solves of the four boundary systems.
pub fn solve_interpolant(
    coeffs: &FormCoefficients,
    gamma: f64,
    alpha: f64,
    beta: f64,
) -> Result<Interpolant> {
    solve_interpolant_with(coeffs, gamma, alpha, beta, Precision::DoubleDouble)
}

pub fn solve_interpolant_with(
    coeffs: &FormCoefficients,
    gamma: f64,
    alpha: f64,
    beta: f64,
    precision: Precision,
) -> Result<Interpolant> {
    check_scales(gamma, alpha, beta)?;
    Interpolant::assemble(coeffs, gamma, alpha, beta, |f| {
        let r = unit_responses_f64(f, gamma, precision)?;
        Ok((r.inner, r.outer))
    })
}

/// Which variant of the leading-order formulas to use for the `r^4` coefficient of the
/// radial family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Leading {
    /// `A₆ ≈ −γ²(ln γ + 1)`, as stated with the coefficient table.
    #[default]
    Stated,
    /// `A₆ ≈ −2γ²(ln γ + 1)`, the value the cofactor ratio actually produces.
    Corrected,
}

/// Leading-order unit responses `(inner, outer)` per member.
pub fn leading_responses(family: Family, g: f64, variant: Leading) -> ([f64; 6], [f64; 6]) {
    let l = g.ln();
    let g2 = g * g;
    let g4 = g2 * g2;
    match family {
        Family::E => {
            let a6 = match variant {
                Leading::Stated => -g2 * (l + 1.0),
                Leading::Corrected => -2.0 * g2 * (l + 1.0),
            };
            (
                [0.0; 6],
                [
                    -g4 / 2.0,
                    2.0 * g2 * l,
                    -2.0 * g2 * (1.0 + 16.0 * g2 * l * l),
                    0.5 * (1.0 + 4.0 * g2),
                    2.0 * g2 * (4.0 * l + 3.0),
                    a6,
                ],
            )
        }
        Family::F => (
            [
                0.0,
                1.0 / 6.0 - 3.0 / (8.0 * l * l),
                -0.5,
                (1.0 - 1.5 / l) / (2.0 * l),
                0.5 * (1.0 - 1.0 / l),
                -(1.0 + 0.75 / l) / 6.0,
            ],
            [0.0, 0.0, 0.0, 0.0, 1.0 / 6.0, 0.0],
        ),
        Family::G => {
            let a = 1.0 + 9.0 * g2;
            (
                [0.0, -4.5 * g4, 0.5 * a, -1.5, 1.5 * a, -0.5 * a],
                [0.0, 1.5 * g4, -1.5 * g2, 0.5 * a, -4.5 * g2, 1.5 * g2],
            )
        }
        Family::H => {
            let a = 1.0 + 36.0 * g4;
            (
                [
                    3.0 * g4 * g4,
                    -8.0 * g4 * g2,
                    a / 6.0,
                    -a,
                    4.0 / 3.0 * a,
                    -0.5 * a,
                ],
                [
                    -0.5 * g4 * g4,
                    4.0 / 3.0 * g4 * g2,
                    -g4,
                    a / 6.0,
                    -8.0 * g4,
                    3.0 * g4,
                ],
            )
        }
    }
}

/// Stated error orders (as functions of `γ`) for the inner and outer responses; `None`
/// where no remainder is stated for that data.
pub fn stated_error_orders(family: Family, g: f64) -> ([Option<f64>; 6], [Option<f64>; 6]) {
    let l = g.ln().abs();
    let p = |n: i32| g.powi(n);
    match family {
        Family::E => (
            [None; 6],
            [
                Some(p(6) * l),
                Some(p(4) * l.powi(3)),
                Some(p(4) * l),
                Some(p(4) * l.powi(4)),
                Some(p(4) * l.powi(3)),
                Some(p(4) * l.powi(3)),
            ],
        ),
        Family::F => (
            [
                Some(p(4) / l),
                Some(p(2)),
                Some(1.0 / l),
                Some(p(2) / l),
                Some(1.0 / (l * l)),
                Some(p(2) / (l * l)),
            ],
            [None, None, None, None, Some(1.0 / (l * l)), None],
        ),
        Family::G => (
            [
                Some(p(6)),
                Some(p(6)),
                Some(p(4)),
                Some(p(4)),
                Some(p(4)),
                None,
            ],
            [Some(p(6)), None, None, Some(p(4)), Some(p(4)), Some(p(4))],
        ),
        Family::H => (
            [
                Some(p(10)),
                Some(p(8)),
                Some(p(6)),
                Some(p(6)),
                Some(p(6)),
                Some(p(6)),
            ],
            [None, None, None, None, Some(p(6)), Some(p(6))],
        ),
    }
}

/// Interpolant built from the leading-order coefficient formulas.
pub fn asymptotic_interpolant(
    coeffs: &FormCoefficients,
    gamma: f64,
    alpha: f64,
    beta: f64,
) -> Result<Interpolant> {
    asymptotic_interpolant_with(coeffs, gamma, alpha, beta, Leading::Stated)
}

pub fn asymptotic_interpolant_with(
    coeffs: &FormCoefficients,
    gamma: f64,
    alpha: f64,
    beta: f64,
    variant: Leading,
) -> Result<Interpolant> {
    check_scales(gamma, alpha, beta)?;
    Interpolant::assemble(coeffs, gamma, alpha, beta, |f| {
        Ok(leading_responses(f, gamma, variant))
    })
}

/// One row of the exact-versus-leading comparison.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub family: Family,
    pub member: usize,
    /// `"inner"` or `"outer"` data.
    pub side: String,
    pub gammas: Vec<f64>,
    pub exact: Vec<f64>,
    pub leading: Vec<f64>,
    pub error_order: Vec<f64>,
    /// Slope of `ln|exact − leading|` against `ln(error order)`.
    pub fitted_exponent: f64,
    /// `max |exact − leading| / error order` over the grid.
    pub max_ratio: f64,
    /// Differences all at rounding level.
    pub negligible: bool,
}

impl AsymptoticRow {
    /// Error shrinks at least at 75% of the stated rate.
    pub fn consistent(&self) -> bool {
        self.negligible || self.fitted_exponent >= 0.75
    }
}

/// Compares exact unit responses with the leading formulas over a `γ` grid, for every
/// coefficient with a stated remainder.
pub fn asymptotic_comparison(
    family: Family,
    gammas: &[f64],
    variant: Leading,
) -> Result<Vec<AsymptoticRow>> {
    let exact: Vec<UnitResponses<f64>> = gammas
        .iter()
        .map(|&g| unit_responses_f64(family, g, Precision::DoubleDouble))
        .collect::<Result<_>>()?;
    let lead: Vec<_> = gammas
        .iter()
        .map(|&g| leading_responses(family, g, variant))
        .collect();
    let orders: Vec<_> = gammas
        .iter()
        .map(|&g| stated_error_orders(family, g))
        .collect();
    let mut rows = Vec::new();
    for side in 0..2 {
        for l in 0..6 {
            let ord: Option<Vec<f64>> = orders
                .iter()
                .map(|o| if side == 0 { o.0[l] } else { o.1[l] })
                .collect();
            let Some(ord) = ord else { continue };
            let ex: Vec<f64> = exact
                .iter()
                .map(|e| if side == 0 { e.inner[l] } else { e.outer[l] })
                .collect();
            let ld: Vec<f64> = lead
                .iter()
                .map(|e| if side == 0 { e.0[l] } else { e.1[l] })
                .collect();
            let diffs: Vec<f64> = ex.iter().zip(&ld).map(|(a, b)| (a - b).abs()).collect();
            let scale = ex
                .iter()
                .chain(&ld)
                .fold(0.0f64, |a, x| a.max(x.abs()))
                .max(1e-300);
            let negligible = diffs.iter().all(|d| *d <= 1e-13 * scale);
            let pts: Vec<(f64, f64)> = ord
                .iter()
                .zip(&diffs)
                .map(|(o, d)| (o.ln(), d.max(1e-300).ln()))
                .collect();
            let fitted = crate::inversion::fit_slope(&pts);
            let max_ratio = diffs
                .iter()
                .zip(&ord)
                .map(|(d, o)| d / o)
                .fold(0.0, f64::max);
            rows.push(AsymptoticRow {
                family,
                member: l,
                side: if side == 0 { "inner" } else { "outer" }.into(),
                gammas: gammas.to_vec(),
                exact: ex,
                leading: ld,
                error_order: ord,
                fitted_exponent: fitted,
                max_ratio,
                negligible,
            });
        }
    }
    Ok(rows)
}

/// Jets of `w` (one per codomain component) at a point of the closed annulus.
pub fn eval_w(interp: &Interpolant, z: [f64; 4], order: usize) -> Result<Vec<Jet>> {
    let r = norm4(z);
    let tol = 1e-12;
    if !(r >= interp.gamma * (1.0 - tol) && r <= 1.0 + tol) {
        return Err(Error::OutsideDomain(format!(
            "|z| = {r} outside [{}, 1]",
            interp.gamma
        )));
    }
    Ok(eval_w_unchecked(interp, &Jet::vars(z, order)))
}

/// `w` as jets without the annulus check (the formula is defined for all `z ≠ 0`).
pub fn eval_w_unchecked(interp: &Interpolant, x: &[Jet; 4]) -> Vec<Jet> {
    let order = x[0].order();
    let s = dot(x, x);
    let ln_r = s.ln() * 0.5;
    let mut out = vec![Jet::zero(order); interp.m];
    for f in Family::ALL {
        let h = f.degree() as i32;
        let ys: Vec<Jet> = if h == 0 {
            vec![Jet::constant(1.0, order)]
        } else {
            basis(h as usize)
                .expect("degree 1..3")
                .polynomials
                .iter()
                .map(|p| p.eval_jet(x))
                .collect()
        };
        let radial: Vec<Jet> = f
            .members()
            .iter()
            .map(|m| {
                let pw = s.powf((m.k - h) as f64 / 2.0);
                if m.log {
                    pw * ln_r
                } else {
                    pw
                }
            })
            .collect();
        for (i, y) in ys.iter().enumerate() {
            let blk = &interp.family(f)[i];
            for k in 0..interp.m {
                let mut acc = Jet::zero(order);
                for l in 0..6 {
                    let c = blk[l][k];
                    if c != 0.0 {
                        acc += radial[l] * c;
                    }
                }
                out[k] += acc * *y;
            }
        }
    }
    out
}

/// Smooth ramp `η` with `η(s) = 0` for `s ≤ √α/4` and `η(s) = 1` for `s ≥ 3√α/4`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Cutoff {
    pub alpha: f64,
}

pub fn cutoff_eta(alpha: f64) -> Result<Cutoff> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Precondition(format!(
            "α = {alpha} must lie in (0, 1)"
        )));
    }
    Ok(Cutoff { alpha })
}

impl Cutoff {
    /// `[η, η′, η″, η‴]` at `s`.
    pub fn derivatives(&self, s: f64) -> [f64; 4] {
        let sa = self.alpha.sqrt();
        let t0 = (s - sa / 4.0) / (sa / 2.0);
        if t0 <= 0.0 {
            return [0.0; 4];
        }
        if t0 >= 1.0 {
            return [1.0, 0.0, 0.0, 0.0];
        }
        let t = Jet::var(t0, 0, 3);
        let psi = |u: Jet| (-u.recip()).exp();
        let a = psi(t);
        let b = psi(1.0 - t);
        let v = a / (a + b);
        let c = v.coeffs();
        let k = 2.0 / sa;
        // coefficient of t^n is f^(n)/n!
        [
            c[0],
            c[1] * k,
            2.0 * c[mono(2)] * k * k,
            6.0 * c[mono(3)] * k * k * k,
        ]
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.derivatives(s)[0]
    }

    /// `max_s (|η| + √α|η′| + α|η″| + α^{3/2}|η‴|)` over a uniform grid on `[0, √α]`.
    pub fn bound_constant(&self, samples: usize) -> f64 {
        let sa = self.alpha.sqrt();
        (0..=samples)
            .map(|i| {
                let d = self.derivatives(sa * i as f64 / samples as f64);
                d[0].abs()
                    + sa * d[1].abs()
                    + self.alpha * d[2].abs()
                    + self.alpha * sa * d[3].abs()
            })
            .fold(0.0, f64::max)
    }
}

fn mono(n: u8) -> usize {
    crate::jet::mono_index([n, 0, 0, 0]).expect("order <= 4")
}
