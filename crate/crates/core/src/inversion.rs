//! Inversion `x ↦ x/|x|²` of immersions, the boundary residue that produces
//! the `−8π²` energy loss per preimage of the origin, and the expansion of
//! inverted graph germs at infinity.

use crate::error::{Error, Result};
use crate::geometry::{
    ambient_geometry, integrate_energy, inverse_jets, EnergyBreakdown, ImmersionPatch, ParamKind,
};
use crate::harmonics::{Bilinear, Trilinear};
use crate::jet::{dot, Jet};
use crate::quadrature::{norm4, pairwise_sum, sphere_quadrature, Domain, QuadSpec};
use nalgebra::{DMatrix, DVector, Matrix4};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// An immersion together with its inversion `Φ̂ = Φ/|Φ|²`.
#[derive(Clone, Debug)]
pub struct InvertedPatch {
    pub base: ImmersionPatch,
    pub inverted: ImmersionPatch,
}

/// `I ∘ Φ` as a parametric patch on the same parameter domain.
pub fn invert(patch: &ImmersionPatch) -> ImmersionPatch {
    let base = patch.clone();
    ImmersionPatch::parametric(
        patch.ambient_dim(),
        patch.jet_order(),
        patch.domain(),
        move |x| {
            let p = base.compose(x)?;
            let r2 = dot(&p, &p);
            if !(r2.value() > 0.0) {
                return Err(Error::InversionSingularity(x.map(|j| j.value())));
            }
            let inv = r2.recip();
            Ok(p.into_iter().map(|c| c * inv).collect())
        },
    )
}

/// Wraps a patch with its inversion.
pub fn invert_patch(patch: &ImmersionPatch) -> InvertedPatch {
    InvertedPatch {
        base: patch.clone(),
        inverted: invert(patch),
    }
}

impl InvertedPatch {
    /// Largest entrywise defect of `ĝ = |Φ|⁻⁴ g` at `z`.
    pub fn conformal_defect(&self, z: [f64; 4]) -> Result<f64> {
        let g = metric(&self.base, z)?;
        let gh = metric(&self.inverted, z)?;
        let p = self.base.position(z)?;
        let s = p.iter().map(|x| x * x).sum::<f64>().powi(-2);
        let scale = gh.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
        let mut worst = 0.0f64;
        for a in 0..4 {
            for b in 0..4 {
                worst = worst.max((gh[a][b] - s * g[a][b]).abs());
            }
        }
        Ok(worst / scale)
    }
}

fn metric(patch: &ImmersionPatch, z: [f64; 4]) -> Result<[[f64; 4]; 4]> {
    let j = patch.jets(z, 1)?;
    Ok(std::array::from_fn(|a| {
        std::array::from_fn(|b| j.iter().map(|c| c.gradient()[a] * c.gradient()[b]).sum())
    }))
}

fn det_jets(m: &[[Jet; 4]; 4]) -> Jet {
    // Gaussian elimination without pivoting; callers pass positive-definite matrices.
    let mut a = *m;
    let mut det = Jet::constant(1.0, m[0][0].order());
    for k in 0..4 {
        det *= a[k][k];
        let inv = a[k][k].recip();
        for i in k + 1..4 {
            let f = a[i][k] * inv;
            for j in k + 1..4 {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    det
}

fn check_germ(patch: &ImmersionPatch) -> Result<()> {
    if patch.kind() != ParamKind::Graph {
        return Err(Error::Precondition("a graph germ is required".into()));
    }
    let phi = patch.graph_jets([0.0; 4], 1)?;
    if phi
        .iter()
        .any(|p| p.value().abs() > 1e-12 || p.gradient().iter().any(|d| d.abs() > 1e-12))
    {
        return Err(Error::Precondition(
            "germ must satisfy φ(0) = 0 and Dφ(0) = 0".into(),
        ));
    }
    Ok(())
}

/// Pieces of the boundary residue on `|z| = r`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ResidueParts {
    /// `∫ ⟨η, ∇Δ ln|Φ|²⟩ dA`.
    pub laplacian_term: f64,
    /// `∫ T(∇ ln|Φ|², η) dA`.
    pub t_term: f64,
}

impl ResidueParts {
    pub fn total(&self) -> f64 {
        self.laplacian_term + self.t_term
    }
}

/// Residue integrand pieces at one point (already multiplied by `√det g`).
fn residue_point(patch: &ImmersionPatch, z: [f64; 4]) -> Result<[f64; 2]> {
    let phi = patch.jets(z, 3)?;
    let r2 = dot(&phi, &phi);
    if !(r2.value() > 0.0) {
        return Err(Error::InversionSingularity(z));
    }
    let f = r2.ln();
    let d1: [Vec<Jet>; 4] = std::array::from_fn(|a| phi.iter().map(|p| p.partial(a)).collect());
    let g: [[Jet; 4]; 4] = std::array::from_fn(|a| std::array::from_fn(|b| dot(&d1[a], &d1[b])));
    let gi = inverse_jets(&g).ok_or(Error::NotImmersion { point: z, det: 0.0 })?;
    let sq = det_jets(&g).sqrt();
    let df: [Jet; 4] = std::array::from_fn(|b| f.partial(b));
    let flux: [Jet; 4] =
        std::array::from_fn(|a| (0..4).fold(Jet::zero(2), |acc, b| acc + gi[a][b] * df[b]) * sq);
    let lap = (0..4).fold(Jet::zero(1), |acc, a| acc + flux[a].partial(a)) / sq.truncate(1);
    let dlap = lap.gradient();
    let r = norm4(z);
    let n: [f64; 4] = z.map(|x| x / r);
    let giv: [[f64; 4]; 4] = std::array::from_fn(|a| std::array::from_fn(|b| gi[a][b].value()));
    let mut term1 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            term1 += n[a] * giv[a][b] * dlap[b];
        }
    }
    let geo = ambient_geometry(&phi, z)?;
    let h2: f64 = geo.h.iter().map(|x| x * x).sum();
    let up_f: [f64; 4] = std::array::from_fn(|a| (0..4).map(|c| giv[a][c] * df[c].value()).sum());
    let up_n: [f64; 4] = std::array::from_fn(|b| (0..4).map(|d| giv[b][d] * n[d]).sum());
    let mut term2 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let hl: f64 = geo.h.iter().zip(&geo.l[a][b]).map(|(x, y)| x * y).sum();
            let t = 4.0 * hl - 6.0 * h2 * geo.g[a][b];
            term2 += t * up_f[a] * up_n[b];
        }
    }
    let w = sq.value();
    Ok([w * term1, w * term2])
}

fn sphere_integral<const K: usize>(
    r: f64,
    exactness: usize,
    f: impl Fn([f64; 4]) -> Result<[f64; K]>,
) -> Result<[f64; K]> {
    let q = sphere_quadrature(exactness);
    let mut cols = vec![Vec::with_capacity(q.nodes.len()); K];
    for (x, w) in q.nodes.iter().zip(&q.weights) {
        let v = f(x.map(|c| c * r))?;
        for k in 0..K {
            cols[k].push(v[k] * w * r.powi(3));
        }
    }
    Ok(std::array::from_fn(|k| pairwise_sum(&cols[k])))
}

/// Residue integral on `|z| = r`, split into its two terms.
pub fn residue_parts(patch: &ImmersionPatch, r: f64, exactness: usize) -> Result<ResidueParts> {
    if !(r > 0.0) || !patch.domain().contains([r, 0.0, 0.0, 0.0]) {
        return Err(Error::OutsideDomain(format!(
            "radius {r} not inside {:?}",
            patch.domain()
        )));
    }
    let [a, b] = sphere_integral(r, exactness, |z| residue_point(patch, z))?;
    Ok(ResidueParts {
        laplacian_term: a,
        t_term: b,
    })
}

/// `∫_{|z|=r} (⟨η, ∇Δ ln|Φ|²⟩ + T(∇ ln|Φ|², η)) dA_g`; tends to `−16π²` as `r → 0`.
pub fn residue_integral(patch: &ImmersionPatch, r: f64) -> Result<f64> {
    check_germ(patch)?;
    Ok(residue_parts(patch, r, 16)?.total())
}

/// `∫_{|z|=s} √g g^{ab} ∂_b|H|² n_a dA`, the flux of `∇|H|²` through a coordinate sphere.
pub fn mean_curvature_flux(patch: &ImmersionPatch, s: f64, exactness: usize) -> Result<f64> {
    let [v] = sphere_integral(s, exactness, |z| {
        let phi = patch.jets(z, 3)?;
        let d1: [Vec<Jet>; 4] =
            std::array::from_fn(|a| phi.iter().map(|p| p.partial(a).truncate(1)).collect());
        let geo = ambient_geometry(&phi, z)?;
        // ∂_c|H|² from the order-1 mean curvature jets
        let h2_grad = h2_gradient(&phi, &d1, z)?;
        let r = norm4(z);
        let mut acc = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                acc += geo.g_inv[a][b] * h2_grad[b] * z[a] / r;
            }
        }
        Ok([acc * geo.sqrt_det_g])
    })?;
    Ok(v)
}

fn h2_gradient(phi: &[Jet], d1: &[Vec<Jet>; 4], z: [f64; 4]) -> Result<[f64; 4]> {
    let n = phi.len();
    let d2: [[Vec<Jet>; 4]; 4] = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            phi.iter()
                .map(|p| p.partial(a).partial(b).truncate(1))
                .collect()
        })
    });
    let g: [[Jet; 4]; 4] = std::array::from_fn(|a| std::array::from_fn(|b| dot(&d1[a], &d1[b])));
    let gi = inverse_jets(&g).ok_or(Error::NotImmersion { point: z, det: 0.0 })?;
    let mut h = vec![Jet::zero(1); n];
    for a in 0..4 {
        for b in 0..4 {
            let t: [Jet; 4] = std::array::from_fn(|d| dot(&d1[d], &d2[a][b]));
            let gamma: [Jet; 4] =
                std::array::from_fn(|c| (0..4).fold(Jet::zero(1), |acc, d| acc + gi[c][d] * t[d]));
            for i in 0..n {
                let l = (0..4).fold(d2[a][b][i], |acc, c| acc - gamma[c] * d1[c][i]);
                h[i] += gi[a][b] * l * 0.25;
            }
        }
    }
    Ok(dot(&h, &h).gradient())
}

/// One row of the energy-identity check on the annulus `r < |z| < outer`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdentityRow {
    pub r: f64,
    pub energy_base: EnergyBreakdown,
    pub energy_inverted: EnergyBreakdown,
    pub residue_inner: f64,
    pub residue_outer: f64,
    pub flux_inverted: [f64; 2],
    pub flux_base: [f64; 2],
    /// Boundary-term prediction for `Ê − E` on the annulus.
    pub predicted: f64,
    /// `(Ê − E) − predicted`.
    pub defect: f64,
    /// Inner-boundary contribution, which tends to `−8π²` as `r → 0`.
    pub inner_contribution: f64,
}

/// Report of the inversion energy identity over a sequence of inner radii.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdentityReport {
    pub outer: f64,
    pub rows: Vec<IdentityRow>,
    pub limit_inner_contribution: f64,
}

impl IdentityReport {
    /// Whether every row closes to `tol` relative to the energy scale and the inner terms approach `−8π²`.
    pub fn passes(&self, tol: f64) -> bool {
        let last = self.rows.last().map_or(f64::INFINITY, |r| {
            (r.inner_contribution + 8.0 * PI * PI).abs()
        });
        let first = self
            .rows
            .first()
            .map_or(0.0, |r| (r.inner_contribution + 8.0 * PI * PI).abs());
        self.rows.iter().all(|r| {
            let scale = 1.0 + r.energy_base.e_mu_nu.abs() + r.energy_inverted.e_mu_nu.abs();
            r.defect.abs() <= tol * scale
        }) && last <= first + 1e-9
    }
}

/// Compares `E^(μ,ν)(Φ̂) − E^(μ,ν)(Φ)` on annuli `r < |z| < outer` with the boundary terms
/// (fluxes of `∇|H|²`, `∇|Ĥ|²` and the residue) that the identity predicts.
pub fn verify_energy_identity(
    patch: &ImmersionPatch,
    mu: f64,
    nu: f64,
    radii: &[f64],
    outer: f64,
    quad: &QuadSpec,
) -> Result<IdentityReport> {
    check_germ(patch)?;
    let inv = invert(patch);
    let ex = quad.sphere.max(12);
    let res_outer = residue_parts(patch, outer, ex)?.total();
    let fo_inv = mean_curvature_flux(&inv, outer, ex)?;
    let fo_base = mean_curvature_flux(patch, outer, ex)?;
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > 0.0 && r < outer) {
            return Err(Error::OutsideDomain(format!(
                "inner radius {r} must lie in (0, {outer})"
            )));
        }
        let dom = Domain::Annulus { inner: r, outer };
        let eb = integrate_energy(patch, &dom, mu, nu, quad)?;
        let ei = integrate_energy(&inv, &dom, mu, nu, quad)?;
        let res_inner = residue_parts(patch, r, ex)?.total();
        let fi_inv = mean_curvature_flux(&inv, r, ex)?;
        let fi_base = mean_curvature_flux(patch, r, ex)?;
        let outer_part = fo_inv - fo_base - 0.5 * res_outer;
        let inner_part = -fi_inv + fi_base + 0.5 * res_inner;
        let predicted = outer_part + inner_part;
        rows.push(IdentityRow {
            r,
            energy_base: eb,
            energy_inverted: ei,
            residue_inner: res_inner,
            residue_outer: res_outer,
            flux_inverted: [fi_inv, fo_inv],
            flux_base: [fi_base, fo_base],
            predicted,
            defect: (ei.e_mu_nu - eb.e_mu_nu) - predicted,
            inner_contribution: inner_part,
        });
    }
    Ok(IdentityReport {
        outer,
        rows,
        limit_inner_contribution: -8.0 * PI * PI,
    })
}

/// Leading data of an inverted graph germ at infinity together with the germ itself.
#[derive(Clone, Debug)]
pub struct InfinityExpansion {
    pub p: Bilinear,
    pub q: Trilinear,
    germ: ImmersionPatch,
}

/// Norms `|Dⁱφ̂(ζ)|`, `i = 0..3`, of the remainder at one point.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RemainderSample {
    pub radius: f64,
    pub norms: [f64; 4],
}

/// Extracts `P = D²φ(0)` and `Q = D³φ(0)` of a graph germ.
pub fn germ_forms(patch: &ImmersionPatch) -> Result<(Bilinear, Trilinear)> {
    check_germ(patch)?;
    let phi = patch.graph_jets([0.0; 4], 3)?;
    Ok((
        phi.iter().map(Jet::hessian).collect(),
        phi.iter().map(Jet::third).collect(),
    ))
}

/// Prepares the expansion of the inverted germ at infinity.
pub fn expansion_at_infinity(patch: &ImmersionPatch) -> Result<InfinityExpansion> {
    let (p, q) = germ_forms(patch)?;
    Ok(InfinityExpansion {
        p,
        q,
        germ: patch.clone(),
    })
}

impl InfinityExpansion {
    fn horizontal(&self, z: &[Jet; 4]) -> Result<([Jet; 4], Vec<Jet>)> {
        let phi = self.germ.compose(z)?;
        let r2 = dot(&phi, &phi);
        let inv = r2.recip();
        let h: [Jet; 4] = std::array::from_fn(|a| z[a] * inv);
        let u = phi[4..].iter().map(|v| *v * inv).collect();
        Ok((h, u))
    }

    /// Jets (in ζ) of the vertical part `û(ζ)` of the inverted germ, obtained by solving
    /// `z/|Φ(z)|² = ζ` for `z` with Newton's method lifted to jets.
    pub fn u_hat(&self, zeta: [f64; 4]) -> Result<Vec<Jet>> {
        let nz = norm4(zeta);
        if !(nz > 0.0) {
            return Err(Error::NotGraphical("ζ = 0".into()));
        }
        let mut z: [f64; 4] = zeta.map(|c| c / (nz * nz));
        let mut jac = Matrix4::zeros();
        let mut converged = false;
        for _ in 0..60 {
            if !self.germ.domain().contains(z) {
                return Err(Error::NotGraphical(format!(
                    "iterate {z:?} left the germ domain"
                )));
            }
            let (h, _) = self.horizontal(&Jet::vars(z, 1))?;
            jac = Matrix4::from_fn(|a, b| h[a].gradient()[b]);
            let res = nalgebra::Vector4::from_fn(|a, _| h[a].value() - zeta[a]);
            let step = jac
                .lu()
                .solve(&res)
                .ok_or_else(|| Error::NotGraphical("singular Jacobian".into()))?;
            for a in 0..4 {
                z[a] -= step[a];
            }
            if step.norm() <= 1e-15 * norm4(z) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NotGraphical(format!(
                "Newton iteration failed at ζ = {zeta:?}"
            )));
        }
        let jinv = jac
            .try_inverse()
            .ok_or_else(|| Error::NotGraphical("singular Jacobian".into()))?;
        let zeta_j = Jet::vars(zeta, 3);
        let mut zj: [Jet; 4] = std::array::from_fn(|a| Jet::constant(z[a], 3));
        for _ in 0..6 {
            let (h, _) = self.horizontal(&zj)?;
            let res: [Jet; 4] = std::array::from_fn(|a| h[a] - zeta_j[a]);
            zj = std::array::from_fn(|a| (0..4).fold(zj[a], |acc, b| acc - res[b] * jinv[(a, b)]));
        }
        Ok(self.horizontal(&zj)?.1)
    }

    /// `½P(ζ̂,ζ̂) + ⅙Q(ζ̂,ζ̂,ζ̂)|ζ|⁻¹` as jets.
    pub fn leading(&self, zeta: [f64; 4]) -> Vec<Jet> {
        let v = Jet::vars(zeta, 3);
        let inv_r = dot(&v, &v).powf(-0.5);
        let u: [Jet; 4] = std::array::from_fn(|a| v[a] * inv_r);
        self.p
            .iter()
            .zip(&self.q)
            .map(|(p, q)| {
                let mut s2 = Jet::zero(3);
                let mut s3 = Jet::zero(3);
                for a in 0..4 {
                    for b in 0..4 {
                        s2 += u[a] * u[b] * p[a][b];
                        for c in 0..4 {
                            s3 += u[a] * u[b] * u[c] * q[a][b][c];
                        }
                    }
                }
                s2 * 0.5 + s3 * inv_r / 6.0
            })
            .collect()
    }

    /// Remainder `φ̂ = û − leading` as jets.
    pub fn remainder(&self, zeta: [f64; 4]) -> Result<Vec<Jet>> {
        let u = self.u_hat(zeta)?;
        Ok(u.iter()
            .zip(self.leading(zeta))
            .map(|(a, b)| *a - b)
            .collect())
    }

    /// `|Dⁱφ̂(ζ)|` for `i = 0..3` (Frobenius norms over all components).
    pub fn remainder_norms(&self, zeta: [f64; 4]) -> Result<RemainderSample> {
        let rem = self.remainder(zeta)?;
        let mut norms = [0.0; 4];
        for j in &rem {
            norms[0] += j.value().powi(2);
            norms[1] += j.gradient().iter().map(|x| x * x).sum::<f64>();
            norms[2] += j.hessian().iter().flatten().map(|x| x * x).sum::<f64>();
            norms[3] += j
                .third()
                .iter()
                .flatten()
                .flatten()
                .map(|x| x * x)
                .sum::<f64>();
        }
        Ok(RemainderSample {
            radius: norm4(zeta),
            norms: norms.map(f64::sqrt),
        })
    }

    /// Least-squares log-log slopes of `|Dⁱφ̂|` along `direction` at the given radii.
    pub fn decay_exponents(&self, direction: [f64; 4], radii: &[f64]) -> Result<[f64; 4]> {
        let d = norm4(direction);
        let samples: Vec<RemainderSample> = radii
            .iter()
            .map(|&s| self.remainder_norms(direction.map(|c| c * s / d)))
            .collect::<Result<_>>()?;
        Ok(std::array::from_fn(|i| {
            let pts: Vec<(f64, f64)> = samples
                .iter()
                .map(|s| (s.radius.ln(), s.norms[i].max(1e-300).ln()))
                .collect();
            fit_slope(&pts)
        }))
    }

    /// `Σ_i |ζ|^{i+2} |Dⁱφ̂(ζ)|` over the given points; bounded for a genuine `|ζ|⁻²` remainder.
    pub fn weighted_profile(&self, zetas: &[[f64; 4]]) -> Result<Vec<(f64, f64)>> {
        zetas
            .iter()
            .map(|z| {
                let s = self.remainder_norms(*z)?;
                Ok((
                    s.radius,
                    (0..4)
                        .map(|i| s.radius.powi(i as i32 + 2) * s.norms[i])
                        .sum(),
                ))
            })
            .collect()
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let a = DMatrix::from_fn(pts.len(), 2, |i, j| if j == 0 { 1.0 } else { pts[i].0 });
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let sol = (a.transpose() * &a)
        .lu()
        .solve(&(a.transpose() * b))
        .expect("distinct abscissae");
    sol[1]
}

/// Richardson extrapolation of values `v(h)` assumed to behave like `v₀ + c·h^p + …`
/// with `h` decreasing by a constant ratio; returns `(limit, error estimate)`.
pub fn richardson(hs: &[f64], vs: &[f64], p: f64) -> (f64, f64) {
    let mut table: Vec<f64> = vs.to_vec();
    let mut hs: Vec<f64> = hs.to_vec();
    let mut last_diff = f64::INFINITY;
    let mut order = p;
    while table.len() > 1 {
        let next: Vec<f64> = (0..table.len() - 1)
            .map(|i| {
                let ratio = (hs[i] / hs[i + 1]).powf(order);
                (ratio * table[i + 1] - table[i]) / (ratio - 1.0)
            })
            .collect();
        last_diff = (next[next.len() - 1] - table[table.len() - 1]).abs();
        hs.remove(0);
        table = next;
        order += 1.0;
    }
    (table[0], last_diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::fixtures::*;
    use crate::geometry::fundamental_data;

    fn traceless_p() -> Vec<[[f64; 4]; 4]> {
        let mut p = [[0.0; 4]; 4];
        p[0][0] = 1.0;
        p[1][1] = 1.0;
        p[2][2] = -1.0;
        p[3][3] = -1.0;
        p[0][2] = 0.4;
        p[2][0] = 0.4;
        vec![p]
    }

    #[test]
    fn unit_sphere_is_fixed() {
        let f = sphere_chart(1.0, true);
        let inv = invert(&f);
        let z = [0.3, 0.1, -0.2, 0.4];
        let a = f.position(z).unwrap();
        let b = inv.position(z).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn plane_inverts_to_sphere_through_origin() {
        let plane = ImmersionPatch::graph(1, 4, Domain::Ball { radius: 10.0 }, |x| {
            Ok(vec![Jet::constant(1.0, x[0].order())])
        });
        let inv = invert(&plane);
        for z in [[0.0; 4], [1.0, 2.0, -0.5, 3.0], [7.0, 0.0, 0.0, 0.0]] {
            let p = inv.position(z).unwrap();
            let d2: f64 = p[..4].iter().map(|x| x * x).sum::<f64>() + (p[4] - 0.5).powi(2);
            assert!((d2 - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn singularity_reported() {
        let germ = quadratic_germ(traceless_p(), None, Domain::Ball { radius: 1.0 });
        let inv = invert(&germ);
        assert!(matches!(
            inv.position([0.0; 4]),
            Err(Error::InversionSingularity(_))
        ));
    }

    #[test]
    fn conformal_factor_and_involution() {
        let germ = quadratic_germ(traceless_p(), None, Domain::Ball { radius: 1.0 });
        let ip = invert_patch(&germ);
        let z = [0.2, -0.3, 0.1, 0.25];
        assert!(ip.conformal_defect(z).unwrap() < 1e-12);
        let twice = invert(&ip.inverted);
        let a = germ.jets(z, 3).unwrap();
        let b = twice.jets(z, 3).unwrap();
        for (x, y) in a.iter().zip(&b) {
            for (cx, cy) in x.coeffs().iter().zip(y.coeffs()) {
                assert!((cx - cy).abs() < 1e-9 * (1.0 + cx.abs()));
            }
        }
    }

    #[test]
    fn traceless_quartic_density_is_invariant() {
        let germ = quadratic_germ(traceless_p(), None, Domain::Ball { radius: 1.0 });
        let inv = invert(&germ);
        let z = [0.2, -0.3, 0.1, 0.25];
        let a = fundamental_data(&germ, z).unwrap().densities();
        let b = fundamental_data(&inv, z).unwrap().densities();
        assert!((a.l4 - b.l4).abs() < 1e-8 * a.l4.abs().max(1e-12));
        assert!((a.l2sq - b.l2sq).abs() < 1e-8 * a.l2sq.abs().max(1e-12));
    }

    #[test]
    fn flat_residue_is_exact() {
        let f = flat(1, Domain::Ball { radius: 1.0 });
        for r in [0.5, 0.1, 1e-3] {
            let v = residue_integral(&f, r).unwrap();
            assert!((v + 16.0 * PI * PI).abs() < 1e-12 * 16.0 * PI * PI, "{v}");
        }
    }

    #[test]
    fn residue_rejects_bad_radius() {
        let f = flat(1, Domain::Ball { radius: 1.0 });
        assert!(residue_integral(&f, 2.0).is_err());
        assert!(residue_integral(&f, 0.0).is_err());
    }

    #[test]
    fn flat_germ_identity() {
        let f = flat(1, Domain::Ball { radius: 1.0 });
        let rep =
            verify_energy_identity(&f, 0.1, 0.1, &[0.1, 0.05], 0.5, &QuadSpec::order(8)).unwrap();
        for row in &rep.rows {
            assert!(row.energy_base.e_mu_nu.abs() < 1e-20);
            assert!(row.energy_inverted.e_mu_nu.abs() < 1e-12);
            assert!(row.defect.abs() < 1e-9);
        }
    }

    #[test]
    fn sphere_germ_identity_closes() {
        let g = sphere_germ(Domain::Ball { radius: 0.45 });
        let rep =
            verify_energy_identity(&g, 0.0, 0.0, &[0.2, 0.1, 0.05], 0.3, &QuadSpec::order(12))
                .unwrap();
        for row in &rep.rows {
            assert!(row.energy_inverted.e_mu_nu.abs() < 1e-8);
            assert!(
                row.defect.abs() < 1e-6 * (1.0 + row.energy_base.e_mu_nu.abs()),
                "{}",
                row.defect
            );
        }
        let last = rep.rows.last().unwrap().inner_contribution;
        assert!((last + 8.0 * PI * PI).abs() < 0.01);
    }

    #[test]
    fn flat_germ_expansion_vanishes() {
        let f = flat(1, Domain::Ball { radius: 1.0 });
        let e = expansion_at_infinity(&f).unwrap();
        let s = e.remainder_norms([10.0, 3.0, 0.0, 1.0]).unwrap();
        assert!(s.norms.iter().all(|x| *x < 1e-15));
    }

    #[test]
    fn richardson_recovers_limit() {
        let hs = [0.1, 0.01, 0.001];
        let vs: Vec<f64> = hs.iter().map(|h| 3.0 + 2.0 * h + 5.0 * h * h).collect();
        let (lim, _) = richardson(&hs, &vs, 1.0);
        assert!((lim - 3.0).abs() < 1e-12);
    }
}
