//! The bilinear form `B_{σ,τ}(u, v) = ∫_{τ<|z|<σ} ⟨∇Δ₀u, ∇Δ₀v⟩ dz` on the radial
//! families, its closed-form Gram matrices, a quadrature cross-check, and the
//! energy ledger of the glued connected sum.
//!
//! Harmonics are normalized so that `∫_{S³} Y² = Vol(S³)`. For `u = a(r)Y`,
//! `v = b(r)Y` with `A, B` the radial parts of `Δ₀u, Δ₀v`,
//! `B(u, v) = Vol(S³) ∫ (A′B′ + h(h+2) AB / r²) r³ dr`.

use crate::error::{Error, Result};
use crate::harmonics::{basis, FormCoefficients};
use crate::jet::{dot, Jet};
use crate::quadrature::{domain_rule, pairwise_sum, Domain, QuadSpec, VOL_S3};
use crate::scalar::{Dd, Real};
use crate::triharmonic::{eval_w_unchecked, laplacian_action, unit_responses, Family, Interpolant};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// `coef · r^pow · (ln r)^log`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub pow: i32,
    pub log: u32,
}

/// Finite sum of [`Term`]s keyed by `(pow, log)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LogPoly(BTreeMap<(i32, u32), f64>);

impl LogPoly {
    pub fn add(&mut self, pow: i32, log: u32, c: f64) {
        if c != 0.0 {
            let e = self.0.entry((pow, log)).or_insert(0.0);
            *e += c;
            if *e == 0.0 {
                self.0.remove(&(pow, log));
            }
        }
    }

    pub fn terms(&self) -> Vec<Term> {
        self.0
            .iter()
            .map(|(&(pow, log), &coef)| Term { coef, pow, log })
            .collect()
    }

    pub fn mul(&self, o: &LogPoly) -> LogPoly {
        let mut out = LogPoly::default();
        for (&(p1, l1), c1) in &self.0 {
            for (&(p2, l2), c2) in &o.0 {
                out.add(p1 + p2, l1 + l2, c1 * c2);
            }
        }
        out
    }

    pub fn scale_pow(&self, shift: i32, c: f64) -> LogPoly {
        let mut out = LogPoly::default();
        for (&(p, l), v) in &self.0 {
            out.add(p + shift, l, v * c);
        }
        out
    }

    pub fn derivative(&self) -> LogPoly {
        let mut out = LogPoly::default();
        for (&(p, l), c) in &self.0 {
            out.add(p - 1, l, c * p as f64);
            if l > 0 {
                out.add(p - 1, l - 1, c * l as f64);
            }
        }
        out
    }

    /// An antiderivative (no constant term added).
    pub fn antiderivative(&self) -> LogPoly {
        let mut out = LogPoly::default();
        for (&(p, l), &c) in &self.0 {
            if p == -1 {
                out.add(0, l + 1, c / (l + 1) as f64);
            } else {
                // ∫ r^p ln^l = r^{p+1} Σ_j (−1)^j l!/(l−j)! ln^{l−j} / (p+1)^{j+1}
                let n = (p + 1) as f64;
                let mut coef = c / n;
                for j in 0..=l {
                    out.add(p + 1, l - j, coef);
                    coef *= -((l - j) as f64) / n;
                }
            }
        }
        out
    }
}

/// Which antiderivative table to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum GramSource {
    /// The tabulated brackets (pure constants dropped).
    #[default]
    Printed,
    /// Antiderivatives integrated here from the Laplacian action.
    Raw,
}

/// Overall constant of the tabulated Gram brackets.
pub fn gram_scale(family: Family) -> f64 {
    match family {
        Family::E | Family::F => 16.0 * VOL_S3,
        Family::G => 128.0 * VOL_S3,
        Family::H => 48.0 * VOL_S3,
    }
}

/// Tabulated upper triangle `(i, j, coef, pow, log)`, 1-based, before scaling.
fn printed_table(family: Family) -> &'static [(usize, usize, f64, i32, u32)] {
    match family {
        Family::E => &[
            (3, 3, -0.5, -2, 0),
            (3, 5, -2.0, 0, 1),
            (3, 6, -6.0, 2, 0),
            (5, 5, 2.0, 2, 0),
            (5, 6, 6.0, 4, 0),
            (6, 6, 24.0, 6, 0),
        ],
        Family::F => &[
            (2, 2, -3.0, -4, 0),
            (2, 4, 3.0, -2, 0),
            (2, 6, 24.0, 2, 0),
            (4, 4, 4.0, 0, 1),
            (4, 5, 3.0, 2, 0),
            (5, 5, 9.0, 4, 0),
            (5, 6, 24.0, 6, 0),
            (6, 6, 96.0, 8, 0),
        ],
        Family::G => &[
            (2, 2, -2.0, -6, 0),
            (2, 3, -2.0, -4, 0),
            (2, 6, 10.0, 2, 0),
            (3, 3, -3.0, -2, 0),
            (3, 5, -2.0, 2, 0),
            (5, 5, 4.0, 6, 0),
            (5, 6, 10.0, 8, 0),
            (6, 6, 30.0, 10, 0),
        ],
        Family::H => &[
            (2, 2, -15.0, -8, 0),
            (2, 3, -20.0, -6, 0),
            (2, 6, 60.0, 2, 0),
            (3, 3, -32.0, -4, 0),
            (3, 5, -20.0, 2, 0),
            (5, 5, 25.0, 8, 0),
            (5, 6, 60.0, 10, 0),
            (6, 6, 240.0, 12, 0),
        ],
    }
}

/// Antiderivative of each Gram entry, already multiplied by the family scale.
pub fn antiderivatives(family: Family, source: GramSource) -> [[Vec<Term>; 6]; 6] {
    let mut out: [[Vec<Term>; 6]; 6] = Default::default();
    match source {
        GramSource::Printed => {
            let s = gram_scale(family);
            for &(i, j, c, pow, log) in printed_table(family) {
                let t = Term {
                    coef: c * s,
                    pow,
                    log,
                };
                out[i - 1][j - 1].push(t);
                if i != j {
                    out[j - 1][i - 1].push(t);
                }
            }
        }
        GramSource::Raw => {
            let l = laplacian_action(family);
            let ms = family.members();
            let hh = {
                let h = family.degree() as f64;
                h * (h + 2.0)
            };
            // radial part of Δ₀(member_j)
            let lap: Vec<LogPoly> = (0..6)
                .map(|j| {
                    let mut p = LogPoly::default();
                    for i in 0..6 {
                        p.add(ms[i].k, ms[i].log as u32, l[i][j] as f64);
                    }
                    p
                })
                .collect();
            for i in 0..6 {
                for j in 0..6 {
                    let (a, b) = (&lap[i], &lap[j]);
                    let mut integrand = a.derivative().mul(&b.derivative()).scale_pow(3, VOL_S3);
                    for t in a.mul(b).scale_pow(1, hh * VOL_S3).terms() {
                        integrand.add(t.pow, t.log, t.coef);
                    }
                    out[i][j] = integrand.antiderivative().terms();
                }
            }
        }
    }
    out
}

enum Endpoint<T> {
    Finite(T),
    Divergent,
}

fn term_at<T: Real>(t: &Term, r: f64, r_t: T, ln_r: T) -> Endpoint<T> {
    if r.is_infinite() {
        return match (t.pow.signum(), t.log) {
            (-1, _) => Endpoint::Finite(T::zero()),
            (0, 0) => Endpoint::Finite(T::of(t.coef)),
            _ => Endpoint::Divergent,
        };
    }
    if r == 0.0 {
        return match (t.pow.signum(), t.log) {
            (1, _) => Endpoint::Finite(T::zero()),
            (0, 0) => Endpoint::Finite(T::of(t.coef)),
            _ => Endpoint::Divergent,
        };
    }
    let mut v = T::of(t.coef) * r_t.powi(t.pow);
    for _ in 0..t.log {
        v *= ln_r;
    }
    Endpoint::Finite(v)
}

/// `[F]^{σ}_{τ}` in arithmetic `T`; `None` if an endpoint term diverges.
fn bracket<T: Real>(terms: &[Term], sigma: f64, tau: f64, sig_t: T, tau_t: T) -> Option<T> {
    let ln = |r: f64, rt: T| {
        if r > 0.0 && r.is_finite() {
            rt.ln()
        } else {
            T::zero()
        }
    };
    let (ls, lt) = (ln(sigma, sig_t), ln(tau, tau_t));
    let mut acc = T::zero();
    for t in terms {
        match (term_at(t, sigma, sig_t, ls), term_at(t, tau, tau_t, lt)) {
            (Endpoint::Finite(a), Endpoint::Finite(b)) => acc += a - b,
            _ => return None,
        }
    }
    Some(acc)
}

/// Gram matrix of one family on the annulus `τ < r < σ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramMatrix {
    pub family: Family,
    pub sigma: f64,
    pub tau: f64,
    /// Entry `(i, j)` pairs members `i` and `j` (0-based); `NaN` where divergent.
    pub m: [[f64; 6]; 6],
    /// Entries (0-based) whose bracket diverges at an endpoint.
    pub divergent: Vec<(usize, usize)>,
}

fn check_radii(sigma: f64, tau: f64) -> Result<()> {
    if !(tau >= 0.0 && tau < sigma && !sigma.is_nan()) {
        return Err(Error::Precondition(format!(
            "need 0 <= τ < σ, got τ = {tau}, σ = {sigma}"
        )));
    }
    Ok(())
}

pub fn gram_matrix(family: Family, sigma: f64, tau: f64) -> Result<GramMatrix> {
    gram_matrix_from(family, sigma, tau, GramSource::Printed)
}

pub fn gram_matrix_from(
    family: Family,
    sigma: f64,
    tau: f64,
    source: GramSource,
) -> Result<GramMatrix> {
    check_radii(sigma, tau)?;
    let anti = antiderivatives(family, source);
    let mut m = [[0.0; 6]; 6];
    let mut divergent = Vec::new();
    for i in 0..6 {
        for j in 0..6 {
            match bracket(&anti[i][j], sigma, tau, sigma, tau) {
                Some(v) => m[i][j] = v,
                None => {
                    m[i][j] = f64::NAN;
                    divergent.push((i, j));
                }
            }
        }
    }
    Ok(GramMatrix {
        family,
        sigma,
        tau,
        m,
        divergent,
    })
}

impl GramMatrix {
    /// Entry `(i, j)` (0-based), or an error if it diverges.
    pub fn entry(&self, i: usize, j: usize) -> Result<f64> {
        if self.divergent.contains(&(i, j)) {
            Err(Error::NonIntegrable(i + 1, j + 1))
        } else {
            Ok(self.m[i][j])
        }
    }

    /// `xᵀ M y`, touching only entries with a nonzero coefficient product.
    pub fn form(&self, x: &[f64; 6], y: &[f64; 6]) -> Result<f64> {
        let mut s = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                if x[i] * y[j] != 0.0 {
                    s += x[i] * self.entry(i, j)? * y[j];
                }
            }
        }
        Ok(s)
    }
}

/// Gram matrix on a finite annulus evaluated in arithmetic `T` from the integrated brackets.
pub(crate) fn gram_in<T: Real>(family: Family, sigma: T, tau: T) -> [[T; 6]; 6] {
    let anti = antiderivatives(family, GramSource::Raw);
    let (s, t) = (sigma.to_f64(), tau.to_f64());
    std::array::from_fn(|i| {
        std::array::from_fn(|j| bracket(&anti[i][j], s, t, sigma, tau).expect("finite annulus"))
    })
}

fn form_in<T: Real>(g: &[[T; 6]; 6], x: &[T; 6], y: &[T; 6]) -> T {
    let mut s = T::zero();
    for i in 0..6 {
        for j in 0..6 {
            s += x[i] * g[i][j] * y[j];
        }
    }
    s
}

/// A vector-valued field given through its jets.
pub type Field<'a> = &'a (dyn Fn(&[Jet; 4]) -> Vec<Jet> + Sync);

fn grad_lap(u: &[Jet]) -> Vec<[f64; 4]> {
    u.iter()
        .map(|c| {
            let t = c.third();
            std::array::from_fn(|k| (0..4).map(|i| t[i][i][k]).sum())
        })
        .collect()
}

fn pair(a: &[[f64; 4]], b: &[[f64; 4]]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (0..4).map(|k| x[k] * y[k]).sum::<f64>())
        .sum()
}

fn annulus_sums(u: Field, v: Field, sigma: f64, tau: f64, spec: &QuadSpec) -> [f64; 3] {
    let (nodes, weights) = domain_rule(
        &Domain::Annulus {
            inner: tau,
            outer: sigma,
        },
        spec,
    );
    let vals: Vec<[f64; 3]> = nodes
        .par_iter()
        .zip(&weights)
        .map(|(z, w)| {
            let x = Jet::vars(*z, 3);
            let (gu, gv) = (grad_lap(&u(&x)), grad_lap(&v(&x)));
            [w * pair(&gu, &gv), w * pair(&gu, &gu), w * pair(&gv, &gv)]
        })
        .collect();
    std::array::from_fn(|k| pairwise_sum(&vals.iter().map(|v| v[k]).collect::<Vec<_>>()))
}

/// `B_{σ,τ}(u, v)` by tensor quadrature on a finite annulus, confirmed on a refined rule.
///
/// The refinement must agree to `quad.refine_tol` (default `1e-10`) relative to
/// `√(B(u,u) B(v,v))`.
pub fn bilinear_quadrature(
    u: Field,
    v: Field,
    sigma: f64,
    tau: f64,
    quad: &QuadSpec,
) -> Result<f64> {
    check_radii(sigma, tau)?;
    if !(tau > 0.0 && sigma.is_finite()) {
        return Err(Error::Precondition(
            "quadrature needs a finite annulus with τ > 0".into(),
        ));
    }
    let tol = quad.refine_tol.unwrap_or(1e-10);
    let coarse = annulus_sums(u, v, sigma, tau, quad);
    let fine = annulus_sums(u, v, sigma, tau, &quad.refined());
    let scale = (fine[1] * fine[2]).sqrt().max(1e-20);
    if (coarse[0] - fine[0]).abs() > tol * scale {
        return Err(Error::NotConverged {
            coarse: coarse[0],
            fine: fine[0],
        });
    }
    Ok(fine[0])
}

/// `member_index · Y` where `Y` is harmonic `harmonic` of the family's degree.
pub fn member_field(
    family: Family,
    index: usize,
    harmonic: usize,
) -> Result<impl Fn(&[Jet; 4]) -> Vec<Jet> + Sync> {
    if index >= 6 || harmonic >= family.multiplicity() {
        return Err(Error::Precondition(format!(
            "member {index} / harmonic {harmonic} out of range"
        )));
    }
    let h = family.degree();
    let y = if h == 0 {
        None
    } else {
        Some(basis(h)?.polynomials[harmonic].clone())
    };
    let m = family.members()[index];
    Ok(move |x: &[Jet; 4]| {
        let order = x[0].order();
        let s = dot(x, x);
        let mut f = s.powf((m.k - h as i32) as f64 / 2.0);
        if m.log {
            f *= s.ln() * 0.5;
        }
        let yv = y
            .as_ref()
            .map_or(Jet::constant(1.0, order), |p| p.eval_jet(x));
        vec![f * yv]
    })
}

/// All 36 entries of a family's Gram matrix by quadrature on a finite annulus.
pub fn gram_quadrature(
    family: Family,
    sigma: f64,
    tau: f64,
    quad: &QuadSpec,
) -> Result<[[f64; 6]; 6]> {
    check_radii(sigma, tau)?;
    if !(tau > 0.0 && sigma.is_finite()) {
        return Err(Error::Precondition(
            "quadrature needs a finite annulus with τ > 0".into(),
        ));
    }
    let fields: Vec<_> = (0..6)
        .map(|l| member_field(family, l, 0))
        .collect::<Result<_>>()?;
    let run = |spec: &QuadSpec| -> [[f64; 6]; 6] {
        let (nodes, weights) = domain_rule(
            &Domain::Annulus {
                inner: tau,
                outer: sigma,
            },
            spec,
        );
        let vals: Vec<[[f64; 6]; 6]> = nodes
            .par_iter()
            .zip(&weights)
            .map(|(z, w)| {
                let x = Jet::vars(*z, 3);
                let g: Vec<Vec<[f64; 4]>> = fields.iter().map(|f| grad_lap(&f(&x))).collect();
                std::array::from_fn(|i| std::array::from_fn(|j| w * pair(&g[i], &g[j])))
            })
            .collect();
        std::array::from_fn(|i| {
            std::array::from_fn(|j| pairwise_sum(&vals.iter().map(|v| v[i][j]).collect::<Vec<_>>()))
        })
    };
    let coarse = run(quad);
    let fine = run(&quad.refined());
    let tol = quad.refine_tol.unwrap_or(1e-10);
    // harmonic members carry only rounding noise; allow it against the largest diagonal
    let floor = 1e-12 * (0..6).map(|i| fine[i][i]).fold(0.0, f64::max);
    for i in 0..6 {
        for j in 0..6 {
            if (coarse[i][j] - fine[i][j]).abs() > tol * (fine[i][i] * fine[j][j]).sqrt() + floor {
                return Err(Error::NotConverged {
                    coarse: coarse[i][j],
                    fine: fine[i][j],
                });
            }
        }
    }
    Ok(fine)
}

/// Largest discrepancy between a Gram matrix and a reference (typically quadrature), with
/// the 1-based entry where it occurs. Entry `(i, j)` is measured against
/// `max(|ref_ij|, √(ref_ii ref_jj), 1e−6 · max_k ref_kk)`; the floor absorbs the rounding
/// noise that harmonic members (zero energy) pick up in quadrature.
pub fn gram_discrepancy(m: &[[f64; 6]; 6], reference: &[[f64; 6]; 6]) -> (f64, (usize, usize)) {
    let floor = 1e-6 * (0..6).map(|i| reference[i][i].abs()).fold(0.0, f64::max);
    let mut worst = (0.0, (1, 1));
    for i in 0..6 {
        for j in 0..6 {
            let scale = reference[i][j]
                .abs()
                .max((reference[i][i] * reference[j][j]).abs().sqrt())
                .max(floor);
            let e = (m[i][j] - reference[i][j]).abs() / scale.max(f64::MIN_POSITIVE);
            if e > worst.0 {
                worst = (e, (i + 1, j + 1));
            }
        }
    }
    worst
}

/// `B_{1,γ}(w, w)` as the sum over all harmonic blocks of `cᵀ Gram(family, 1, γ) c`.
///
/// Energies use the integrated brackets; they differ from the tabulated ones only in the
/// `(6,6)` entry of family `H` (`160r¹²` against a tabulated `240r¹²`).
pub fn interpolation_energy(interp: &Interpolant) -> Result<f64> {
    let mut total = 0.0;
    for f in Family::ALL {
        let g = gram_matrix_from(f, 1.0, interp.gamma, GramSource::Raw)?;
        for i in 0..f.multiplicity() {
            for k in 0..interp.m {
                let c = interp.radial(f, i, k);
                total += g.form(&c, &c)?;
            }
        }
    }
    Ok(total)
}

/// `B_{1,γ}(w, w)` by quadrature of the assembled field.
pub fn interpolation_energy_quadrature(interp: &Interpolant, quad: &QuadSpec) -> Result<f64> {
    let w = |x: &[Jet; 4]| eval_w_unchecked(interp, x);
    bilinear_quadrature(&w, &w, 1.0, interp.gamma, quad)
}

/// One contribution to `B_{1,γ}(w, w)`, with its leading-order formula where one is stated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockTerm {
    /// Which data enter: `"r0"`, `"p"`, `"p.r"`, `"r"`, `"q1"`, `"q1.s1"`, `"s1"`, `"q3"`, `"q3.s3"`, `"s3"`.
    pub name: String,
    pub exact: f64,
    pub leading: Option<f64>,
}

impl BlockTerm {
    pub fn ratio(&self) -> Option<f64> {
        self.leading.filter(|l| *l != 0.0).map(|l| self.exact / l)
    }
}

/// `B_{1,γ}(w, w)` split by data type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationEnergy {
    pub total: f64,
    pub terms: Vec<BlockTerm>,
}

fn sq_sum(v: &[Vec<f64>]) -> f64 {
    v.iter().flatten().map(|x| x * x).sum()
}

fn cross_sum(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(s, t)| s * t).sum::<f64>())
        .sum()
}

/// Unit energies `(xᵀGx, xᵀGy, yᵀGy)` for the inner (`x`) and outer (`y`) unit responses,
/// computed in double-double.
pub fn unit_energies(family: Family, gamma: f64) -> Result<[f64; 3]> {
    let g = Dd::of(gamma);
    let r = unit_responses::<Dd>(family, g, 1e-30)?;
    let gm = gram_in(family, Dd::of(1.0), g);
    Ok([
        form_in(&gm, &r.inner, &r.inner),
        form_in(&gm, &r.inner, &r.outer),
        form_in(&gm, &r.outer, &r.outer),
    ]
    .map(Real::to_f64))
}

/// Leading-order values of the unit energies `(inner², 2·cross, outer²)` per family; `None` where
/// no leading term is stated.
pub fn leading_unit_energies(family: Family, gamma: f64) -> [Option<f64>; 3] {
    let v = VOL_S3;
    let l = gamma.ln();
    let g2 = gamma * gamma;
    let g4 = g2 * g2;
    match family {
        Family::E => [None, None, Some(32.0 * v * g2)],
        Family::F => {
            let f = 2.0 / 3.0 - 1.5 / (l * l);
            [
                Some(3.0 * v / g4 * f * f),
                Some(8.0 / 3.0 * v),
                Some(4.0 * v),
            ]
        }
        Family::G => [Some(96.0 * v * (1.0 / g2 + 3.0)), Some(-192.0 * v), None],
        Family::H => [
            Some(v * (128.0 / 3.0 / g4 + 2368.0 / 3.0)),
            Some(-256.0 / 3.0 * v),
            None,
        ],
    }
}

fn term_names(family: Family) -> [&'static str; 3] {
    match family {
        Family::E => ["", "", "r0"],
        Family::F => ["q1", "q1.s1", "s1"],
        Family::G => ["p", "p.r", "r"],
        Family::H => ["q3", "q3.s3", "s3"],
    }
}

/// `B_{1,γ}(w, w)` for the solved interpolant, split into the contributions of each data type.
pub fn interpolation_energy_blocks(
    coeffs: &FormCoefficients,
    gamma: f64,
    alpha: f64,
    beta: f64,
) -> Result<InterpolationEnergy> {
    coeffs.validate()?;
    let mut terms = Vec::new();
    let mut total = 0.0;
    for f in Family::ALL {
        let [xx, xy, yy] = unit_energies(f, gamma)?;
        let lead = leading_unit_energies(f, gamma);
        let (uu, uv, vv, si, so) = match f {
            Family::E => (0.0, 0.0, coeffs.r0.iter().map(|x| x * x).sum(), 0.0, beta),
            Family::F => (
                sq_sum(&coeffs.q1),
                cross_sum(&coeffs.q1, &coeffs.s1),
                sq_sum(&coeffs.s1),
                alpha * alpha,
                beta * beta,
            ),
            Family::G => (
                sq_sum(&coeffs.p),
                cross_sum(&coeffs.p, &coeffs.r),
                sq_sum(&coeffs.r),
                alpha,
                beta,
            ),
            Family::H => (
                sq_sum(&coeffs.q3),
                cross_sum(&coeffs.q3, &coeffs.s3),
                sq_sum(&coeffs.s3),
                alpha * alpha,
                beta * beta,
            ),
        };
        let weights = [si * si * uu, si * so * uv, so * so * vv];
        let exact = [xx * weights[0], 2.0 * xy * weights[1], yy * weights[2]];
        for (n, name) in term_names(f).iter().enumerate() {
            if name.is_empty() {
                continue;
            }
            total += exact[n];
            terms.push(BlockTerm {
                name: name.to_string(),
                exact: exact[n],
                leading: lead[n].map(|l| l * weights[n]),
            });
        }
    }
    Ok(InterpolationEnergy { total, terms })
}

/// Exact-versus-leading comparison for each stated term with unit data (`α = β = 1`).
pub fn leading_term_checks(gamma: f64) -> Result<Vec<BlockTerm>> {
    let mut out = Vec::new();
    for f in Family::ALL {
        let [xx, xy, yy] = unit_energies(f, gamma)?;
        let exact = [xx, 2.0 * xy, yy];
        let lead = leading_unit_energies(f, gamma);
        for (n, name) in term_names(f).iter().enumerate() {
            if !name.is_empty() {
                out.push(BlockTerm {
                    name: name.to_string(),
                    exact: exact[n],
                    leading: lead[n],
                });
            }
        }
    }
    Ok(out)
}

/// Savings from the two pieces removed by the gluing, and the collar energies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Savings {
    /// `B_{∞,γ}(p̊_α, p̊_α)`.
    pub end: f64,
    /// `B_{1,0}(q_{β⁻¹}, q_{β⁻¹})`.
    pub disk: f64,
    /// `B_{γ,γ−√α}(p̊_α, p̊_α)`.
    pub collar_inner: f64,
    /// `B_{1+√α,1}(q_{β⁻¹}, q_{β⁻¹})`.
    pub collar_outer: f64,
    /// `α^{5/2} / γ³`, the order both collars are expected to respect.
    pub collar_order: f64,
}

/// Energy of the decaying end data `p̊_α` and the disk data `q_{β⁻¹}` from the Gram tables.
pub fn energy_savings(
    coeffs: &FormCoefficients,
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> Result<Savings> {
    coeffs.validate()?;
    if !(alpha > 0.0 && beta >= 0.0 && gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Precondition(format!(
            "bad scales α = {alpha}, β = {beta}, γ = {gamma}"
        )));
    }
    let sa = alpha.sqrt();
    if sa >= gamma {
        return Err(Error::Precondition(format!(
            "collar width √α = {sa} must be below γ = {gamma}"
        )));
    }
    let unit = |i: usize, c: f64| {
        let mut v = [0.0; 6];
        v[i] = c;
        v
    };
    // p̊_α = (α/2) p·G₃ + (α²/6)(q1·F₂ + q3·H₃)
    let end_on = |sigma: f64, tau: f64| -> Result<f64> {
        let g = gram_matrix_from(Family::G, sigma, tau, GramSource::Raw)?;
        let f = gram_matrix_from(Family::F, sigma, tau, GramSource::Raw)?;
        let h = gram_matrix_from(Family::H, sigma, tau, GramSource::Raw)?;
        let a2 = alpha * alpha / 6.0;
        Ok(
            sq_sum(&coeffs.p) * g.form(&unit(2, alpha / 2.0), &unit(2, alpha / 2.0))?
                + sq_sum(&coeffs.q1) * f.form(&unit(1, a2), &unit(1, a2))?
                + sq_sum(&coeffs.q3) * h.form(&unit(2, a2), &unit(2, a2))?,
        )
    };
    // q_{β⁻¹} = (β/2)(r0·E₄ + r·G₄) + (β²/6)(s1·F₅ + s3·H₄)
    let disk_on = |sigma: f64, tau: f64| -> Result<f64> {
        let e = gram_matrix_from(Family::E, sigma, tau, GramSource::Raw)?;
        let g = gram_matrix_from(Family::G, sigma, tau, GramSource::Raw)?;
        let f = gram_matrix_from(Family::F, sigma, tau, GramSource::Raw)?;
        let h = gram_matrix_from(Family::H, sigma, tau, GramSource::Raw)?;
        let (b1, b2) = (beta / 2.0, beta * beta / 6.0);
        let r0: f64 = coeffs.r0.iter().map(|x| x * x).sum();
        Ok(r0 * e.form(&unit(3, b1), &unit(3, b1))?
            + sq_sum(&coeffs.r) * g.form(&unit(3, b1), &unit(3, b1))?
            + sq_sum(&coeffs.s1) * f.form(&unit(4, b2), &unit(4, b2))?
            + sq_sum(&coeffs.s3) * h.form(&unit(3, b2), &unit(3, b2))?)
    };
    Ok(Savings {
        end: end_on(f64::INFINITY, gamma)?,
        disk: disk_on(1.0, 0.0)?,
        collar_inner: end_on(gamma, gamma - sa)?,
        collar_outer: disk_on(1.0 + sa, 1.0)?,
        collar_order: alpha.powf(2.5) / gamma.powi(3),
    })
}

/// Full ledger in the regime `α = γ⁸`, `β = tα`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub t: f64,
    pub savings: Savings,
    pub interp: InterpolationEnergy,
    /// `(B_{1,γ}(w,w) − end − disk) / 16`.
    pub difference_exact: f64,
    /// `18 Vol(S³) γ¹⁶ Σ|p|² − 12 t Vol(S³) γ¹⁶ Σ⟨p, r⟩`.
    pub difference_leading: f64,
}

pub fn energy_ledger(coeffs: &FormCoefficients, gamma: f64, t: f64) -> Result<EnergyLedger> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::OutsideDomain(format!(
            "γ = {gamma} must lie in (0, 1)"
        )));
    }
    if !t.is_finite() {
        return Err(Error::Precondition(format!("t = {t} must be finite")));
    }
    let alpha = gamma.powi(8);
    let beta = t * alpha;
    let savings = energy_savings(coeffs, alpha, beta.abs(), gamma)?;
    let interp = interpolation_energy_blocks(coeffs, gamma, alpha, beta)?;
    let difference_exact = (interp.total - savings.end - savings.disk) / 16.0;
    let g16 = gamma.powi(16);
    let difference_leading =
        18.0 * VOL_S3 * g16 * coeffs.p_norm_sq() - 12.0 * t * VOL_S3 * g16 * coeffs.p_dot_r();
    Ok(EnergyLedger {
        gamma,
        alpha,
        beta,
        t,
        savings,
        interp,
        difference_exact,
        difference_leading,
    })
}

/// `(exact_combination, leading)` of the local energy difference.
pub fn energy_difference(coeffs: &FormCoefficients, gamma: f64, t: f64) -> Result<(f64, f64)> {
    let l = energy_ledger(coeffs, gamma, t)?;
    Ok((l.difference_exact, l.difference_leading))
}
