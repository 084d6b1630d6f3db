//! Truncated multivariate Taylor jets in four variables.
//!
//! A [`Jet`] stores normalized Taylor coefficients `c_a = D^a f / a!` for all
//! multi-indices `|a| <= order` with `order <= 4`. Arithmetic is exact up to the
//! truncation order, so derivatives of compositions come out without finite
//! differences.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::LazyLock;

/// Number of independent variables.
pub const NVAR: usize = 4;
/// Highest supported truncation order.
pub const MAX_ORDER: usize = 4;
/// Number of monomials of degree at most [`MAX_ORDER`] in [`NVAR`] variables.
pub const NMONO: usize = 70;

const NONE: u8 = u8::MAX;

struct Tables {
    exps: Vec<[u8; NVAR]>,
    /// Number of monomials with degree `<= o`.
    len: [usize; MAX_ORDER + 1],
    lookup: Vec<u8>,
    /// Products `(i, j, k)` with `x^i x^j = x^k`, sorted by degree of `k`.
    mul: Vec<(u8, u8, u8)>,
    mul_len: [usize; MAX_ORDER + 1],
    /// `raise[k][v]` is the index of `x^k * x_v`.
    raise: Vec<[u8; NVAR]>,
    /// Multi-index factorials `a!`.
    fact: Vec<f64>,
}

fn key(e: &[u8; NVAR]) -> usize {
    e.iter()
        .fold(0, |acc, &x| acc * (MAX_ORDER + 1) + x as usize)
}

static TABLES: LazyLock<Tables> = LazyLock::new(|| {
    let mut exps = Vec::with_capacity(NMONO);
    let mut len = [0usize; MAX_ORDER + 1];
    for d in 0..=MAX_ORDER as u8 {
        // graded lexicographic: within a degree, larger leading exponents first
        for a in (0..=d).rev() {
            for b in (0..=d - a).rev() {
                for c in (0..=d - a - b).rev() {
                    exps.push([a, b, c, d - a - b - c]);
                }
            }
        }
        len[d as usize] = exps.len();
    }
    assert_eq!(exps.len(), NMONO);
    let mut lookup = vec![NONE; (MAX_ORDER + 1).pow(NVAR as u32)];
    for (i, e) in exps.iter().enumerate() {
        lookup[key(e)] = i as u8;
    }
    let deg = |e: &[u8; NVAR]| e.iter().map(|&x| x as usize).sum::<usize>();
    let mut mul = Vec::new();
    for (i, a) in exps.iter().enumerate() {
        for (j, b) in exps.iter().enumerate() {
            if deg(a) + deg(b) <= MAX_ORDER {
                let s = [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]];
                mul.push((i as u8, j as u8, lookup[key(&s)]));
            }
        }
    }
    mul.sort_by_key(|&(_, _, k)| deg(&exps[k as usize]));
    let mut mul_len = [0usize; MAX_ORDER + 1];
    for (o, slot) in mul_len.iter_mut().enumerate() {
        *slot = mul
            .iter()
            .filter(|&&(_, _, k)| deg(&exps[k as usize]) <= o)
            .count();
    }
    let raise = exps
        .iter()
        .map(|e| {
            let mut r = [NONE; NVAR];
            for (v, slot) in r.iter_mut().enumerate() {
                if deg(e) < MAX_ORDER {
                    let mut f = *e;
                    f[v] += 1;
                    *slot = lookup[key(&f)];
                }
            }
            r
        })
        .collect();
    let fact = exps
        .iter()
        .map(|e| {
            e.iter()
                .map(|&x| (1..=x as u32).product::<u32>() as f64)
                .product()
        })
        .collect();
    Tables {
        exps,
        len,
        lookup,
        mul,
        mul_len,
        raise,
        fact,
    }
});

/// Index of a multi-index in the coefficient array, if its degree is supported.
pub fn mono_index(e: [u8; NVAR]) -> Option<usize> {
    if e.iter().any(|&x| x as usize > MAX_ORDER) {
        return None;
    }
    let i = TABLES.lookup[key(&e)];
    (i != NONE).then_some(i as usize)
}

/// Multi-index at a coefficient position.
pub fn mono_exps(i: usize) -> [u8; NVAR] {
    TABLES.exps[i]
}

/// Number of monomials of degree at most `order`.
pub fn mono_count(order: usize) -> usize {
    TABLES.len[order]
}

/// A truncated Taylor expansion of a scalar function of four variables.
#[derive(Clone, Copy, Debug)]
pub struct Jet {
    order: u8,
    c: [f64; NMONO],
}

impl Jet {
    /// Constant jet.
    pub fn constant(v: f64, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order above {MAX_ORDER}");
        let mut c = [0.0; NMONO];
        c[0] = v;
        Jet {
            order: order as u8,
            c,
        }
    }

    /// Zero jet.
    pub fn zero(order: usize) -> Self {
        Self::constant(0.0, order)
    }

    /// Coordinate function `x_v` expanded around `at`.
    pub fn var(at: f64, v: usize, order: usize) -> Self {
        let mut j = Self::constant(at, order);
        if order >= 1 {
            j.c[1 + v] = 1.0;
        }
        j
    }

    /// All four coordinate jets at a point.
    pub fn vars(z: [f64; NVAR], order: usize) -> [Jet; NVAR] {
        std::array::from_fn(|v| Self::var(z[v], v, order))
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    fn n(&self) -> usize {
        TABLES.len[self.order as usize]
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Raw Taylor coefficients up to the truncation order.
    pub fn coeffs(&self) -> &[f64] {
        &self.c[..self.n()]
    }

    /// Builds a jet from raw Taylor coefficients.
    pub fn from_coeffs(coeffs: &[f64], order: usize) -> Self {
        let mut j = Self::zero(order);
        let n = j.n();
        j.c[..n].copy_from_slice(&coeffs[..n]);
        j
    }

    /// Partial derivative `D^a f` at the expansion point.
    pub fn derivative(&self, a: [u8; NVAR]) -> f64 {
        match mono_index(a) {
            Some(i) if i < self.n() => self.c[i] * TABLES.fact[i],
            _ => 0.0,
        }
    }

    /// Gradient at the expansion point.
    pub fn gradient(&self) -> [f64; NVAR] {
        std::array::from_fn(|v| if self.order >= 1 { self.c[1 + v] } else { 0.0 })
    }

    /// Hessian at the expansion point.
    pub fn hessian(&self) -> [[f64; NVAR]; NVAR] {
        std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                let mut e = [0u8; NVAR];
                e[a] += 1;
                e[b] += 1;
                self.derivative(e)
            })
        })
    }

    /// Third derivative tensor at the expansion point.
    pub fn third(&self) -> [[[f64; NVAR]; NVAR]; NVAR] {
        std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                std::array::from_fn(|c| {
                    let mut e = [0u8; NVAR];
                    e[a] += 1;
                    e[b] += 1;
                    e[c] += 1;
                    self.derivative(e)
                })
            })
        })
    }

    /// Jet of `∂f/∂x_v`, one order lower.
    pub fn partial(&self, v: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let mut out = Self::zero(self.order as usize - 1);
        for k in 0..out.n() {
            let up = TABLES.raise[k][v] as usize;
            out.c[k] = (TABLES.exps[k][v] as f64 + 1.0) * self.c[up];
        }
        out
    }

    /// Drops coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order as usize);
        let mut out = Self::zero(order);
        let n = out.n();
        out.c[..n].copy_from_slice(&self.c[..n]);
        out
    }

    /// Sum of squared Taylor coefficients; a cheap size measure for tests.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs().iter().map(|x| x * x).sum()
    }

    /// `g(self)` given Taylor coefficients `t[k] = g^(k)(a)/k!` of `g` at `a = self.value()`.
    pub fn compose(&self, t: &[f64]) -> Self {
        let order = self.order as usize;
        let mut h = *self;
        h.c[0] = 0.0;
        let mut out = Self::constant(t[0], order);
        let mut pw = Self::constant(1.0, order);
        for tk in t.iter().take(order + 1).skip(1) {
            pw *= h;
            out += pw * *tk;
        }
        out
    }

    pub fn recip(&self) -> Self {
        let a = self.value();
        let t: Vec<f64> = (0..=self.order as i32)
            .map(|k| (-1f64).powi(k) / a.powi(k + 1))
            .collect();
        self.compose(&t)
    }

    pub fn powf(&self, p: f64) -> Self {
        let a = self.value();
        let mut t = Vec::with_capacity(self.order as usize + 1);
        let mut binom = 1.0;
        for k in 0..=self.order as i32 {
            t.push(binom * a.powf(p - k as f64));
            binom *= (p - k as f64) / (k as f64 + 1.0);
        }
        self.compose(&t)
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn powi(&self, n: i32) -> Self {
        match n {
            0 => Self::constant(1.0, self.order as usize),
            n if n > 0 => {
                let mut out = *self;
                for _ in 1..n {
                    out *= *self;
                }
                out
            }
            n => self.recip().powi(-n),
        }
    }

    pub fn ln(&self) -> Self {
        let a = self.value();
        let t: Vec<f64> = (0..=self.order as i32)
            .map(|k| {
                if k == 0 {
                    a.ln()
                } else {
                    -(-1f64).powi(k) / (k as f64 * a.powi(k))
                }
            })
            .collect();
        self.compose(&t)
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        let mut t = Vec::with_capacity(self.order as usize + 1);
        let mut f = 1.0;
        for k in 0..=self.order as usize {
            if k > 0 {
                f *= k as f64;
            }
            t.push(e / f);
        }
        self.compose(&t)
    }
}

/// Euclidean dot product of jet vectors.
pub fn dot(a: &[Jet], b: &[Jet]) -> Jet {
    let order = a.iter().chain(b).map(Jet::order).min().unwrap_or(0);
    a.iter()
        .zip(b)
        .fold(Jet::zero(order), |acc, (x, y)| acc + *x * *y)
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        self.order = self.order.min(rhs.order);
        for k in 0..self.n() {
            self.c[k] += rhs.c[k];
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        self.order = self.order.min(rhs.order);
        for k in 0..self.n() {
            self.c[k] -= rhs.c[k];
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order) as usize;
        let mut out = Jet::zero(order);
        for &(i, j, k) in &TABLES.mul[..TABLES.mul_len[order]] {
            out.c[k as usize] += self.c[i as usize] * rhs.c[j as usize];
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for k in 0..self.n() {
            self.c[k] = -self.c[k];
        }
        self
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        for k in 0..self.n() {
            self.c[k] *= rhs;
        }
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self * (1.0 / rhs)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        rhs + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        -rhs + self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

impl MulAssign for Jet {
    fn mul_assign(&mut self, rhs: Jet) {
        *self = *self * rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn table_sizes() {
        assert_eq!(mono_count(0), 1);
        assert_eq!(mono_count(1), 5);
        assert_eq!(mono_count(2), 15);
        assert_eq!(mono_count(3), 35);
        assert_eq!(mono_count(4), 70);
        assert_eq!(TABLES.mul_len[3], 165);
        assert_eq!(TABLES.mul_len[4], 495);
    }

    #[test]
    fn product_rule_on_polynomial() {
        // f = x0^2 x1 + 3 x2 x3, evaluated at (1, 2, -1, 0.5)
        let z = [1.0, 2.0, -1.0, 0.5];
        let x = Jet::vars(z, 4);
        let f = x[0] * x[0] * x[1] + 3.0 * x[2] * x[3];
        assert!(close(f.value(), 2.0 - 1.5, 1e-15));
        assert!(close(f.derivative([1, 0, 0, 0]), 4.0, 1e-15));
        assert!(close(f.derivative([2, 1, 0, 0]), 2.0, 1e-15));
        assert!(close(f.derivative([0, 0, 1, 1]), 3.0, 1e-15));
        assert_eq!(f.derivative([3, 0, 0, 0]), 0.0);
    }

    #[test]
    fn univariate_functions_match_closed_forms() {
        let a = 0.7;
        let x = Jet::var(a, 0, 4);
        let d = |j: Jet, k: u8| j.derivative([k, 0, 0, 0]);
        let r = x.recip();
        assert!(close(d(r, 3), -6.0 / a.powi(4), 1e-13));
        let s = x.sqrt();
        assert!(close(d(s, 2), -0.25 * a.powf(-1.5), 1e-13));
        let l = x.ln();
        assert!(close(d(l, 4), -6.0 / a.powi(4), 1e-12));
        let e = x.exp();
        assert!(close(d(e, 4), a.exp(), 1e-13));
        let p = x.powf(-2.5);
        assert!(close(d(p, 3), -2.5 * -3.5 * -4.5 * a.powf(-5.5), 1e-12));
        let q = x.powi(-3);
        assert!(close(d(q, 2), 12.0 * a.powi(-5), 1e-12));
    }

    #[test]
    fn partial_lowers_order() {
        let x = Jet::vars([0.3, -0.2, 0.5, 1.1], 3);
        let f = (x[0] * x[1] + x[2] * x[2] * x[3]).exp();
        let fx = f.partial(0);
        assert_eq!(fx.order(), 2);
        assert!(close(fx.value(), f.derivative([1, 0, 0, 0]), 1e-14));
        assert!(close(
            fx.derivative([0, 1, 1, 0]),
            f.derivative([1, 1, 1, 0]),
            1e-12
        ));
    }

    #[test]
    fn mixed_order_truncates_to_minimum() {
        let a = Jet::var(1.0, 0, 3);
        let b = Jet::var(2.0, 1, 1);
        assert_eq!((a * b).order(), 1);
        assert_eq!((a + b).order(), 1);
    }
}
