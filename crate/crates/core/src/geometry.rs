//! Pointwise extrinsic geometry of immersed 4-dimensional patches in Rⁿ and
//! the integrated fourth-order energies.
//!
//! All quantities are computed frame-free from the jets of the immersion: with
//! `g = DΦᵀDΦ` and Christoffel symbols `Γ`, the second fundamental form is
//! `L_ab = ∂_a∂_bΦ − Γ^c_ab ∂_cΦ`, `H = ¼ g^{ab} L_ab` and `∇⊥_a H` is the normal
//! projection of `∂_a H`. A normal frame is built only to report components.

use crate::error::{Error, Result};
use crate::jet::{dot, Jet};
use crate::quadrature::{integrate_vec, Domain, QuadSpec};
use nalgebra::{DMatrix, Matrix4};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Jet evaluator: coordinate jets in, component jets out.
pub type JetMap = Arc<dyn Fn(&[Jet; 4]) -> Result<Vec<Jet>> + Send + Sync>;

/// How the patch is parametrized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamKind {
    /// `Φ(z) = (z, φ(z))`; the evaluator returns `φ`.
    Graph,
    /// The evaluator returns `Φ` directly.
    Parametric,
}

/// A parametrized 4-dimensional patch in Rⁿ with exact derivative jets.
#[derive(Clone)]
pub struct ImmersionPatch {
    ambient_dim: usize,
    kind: ParamKind,
    map: JetMap,
    jet_order: usize,
    domain: Domain,
}

impl fmt::Debug for ImmersionPatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImmersionPatch")
            .field("ambient_dim", &self.ambient_dim)
            .field("kind", &self.kind)
            .field("jet_order", &self.jet_order)
            .field("domain", &self.domain)
            .finish()
    }
}

impl ImmersionPatch {
    /// Graph patch `Φ = (z, φ(z))` with `φ: R⁴ → R^codim`.
    pub fn graph<F>(codim: usize, jet_order: usize, domain: Domain, phi: F) -> Self
    where
        F: Fn(&[Jet; 4]) -> Result<Vec<Jet>> + Send + Sync + 'static,
    {
        ImmersionPatch {
            ambient_dim: 4 + codim,
            kind: ParamKind::Graph,
            map: Arc::new(phi),
            jet_order,
            domain,
        }
    }

    /// General parametric patch `Φ: R⁴ → Rⁿ`.
    pub fn parametric<F>(ambient_dim: usize, jet_order: usize, domain: Domain, map: F) -> Self
    where
        F: Fn(&[Jet; 4]) -> Result<Vec<Jet>> + Send + Sync + 'static,
    {
        ImmersionPatch {
            ambient_dim,
            kind: ParamKind::Parametric,
            map: Arc::new(map),
            jet_order,
            domain,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim - 4
    }

    pub fn kind(&self) -> ParamKind {
        self.kind
    }

    pub fn jet_order(&self) -> usize {
        self.jet_order
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Same map on a different parameter domain.
    pub fn with_domain(&self, domain: Domain) -> Self {
        ImmersionPatch {
            domain,
            ..self.clone()
        }
    }

    fn check_point(&self, z: [f64; 4]) -> Result<()> {
        if self.domain.contains(z) {
            Ok(())
        } else {
            Err(Error::OutsideDomain(format!(
                "{z:?} not in {:?}",
                self.domain
            )))
        }
    }

    fn check_order(&self, order: usize) -> Result<()> {
        if order > self.jet_order {
            return Err(Error::Precondition(format!(
                "jets of order {order} requested, patch supplies {}",
                self.jet_order
            )));
        }
        Ok(())
    }

    /// Jets of `Φ` composed with arbitrary coordinate jets.
    pub fn compose(&self, x: &[Jet; 4]) -> Result<Vec<Jet>> {
        let inner = (self.map)(x)?;
        Ok(match self.kind {
            ParamKind::Graph => x.iter().copied().chain(inner).collect(),
            ParamKind::Parametric => inner,
        })
    }

    /// Jets of `Φ` at `z` up to `order`.
    pub fn jets(&self, z: [f64; 4], order: usize) -> Result<Vec<Jet>> {
        self.check_point(z)?;
        self.check_order(order)?;
        self.compose(&Jet::vars(z, order))
    }

    /// Jets of the graph function `φ` at `z`.
    pub fn graph_jets(&self, z: [f64; 4], order: usize) -> Result<Vec<Jet>> {
        if self.kind != ParamKind::Graph {
            return Err(Error::Precondition("patch is not a graph".into()));
        }
        self.check_point(z)?;
        self.check_order(order)?;
        (self.map)(&Jet::vars(z, order))
    }

    /// `Φ(z)`.
    pub fn position(&self, z: [f64; 4]) -> Result<Vec<f64>> {
        Ok(self.jets(z, 0)?.iter().map(Jet::value).collect())
    }

    /// `x ↦ Q x + shift` applied to the image, with `Q` an n×n matrix (row-major).
    pub fn transformed(&self, q: Vec<Vec<f64>>, shift: Vec<f64>) -> Self {
        let inner = self.clone();
        let n = self.ambient_dim;
        ImmersionPatch::parametric(n, self.jet_order, self.domain, move |x| {
            let p = inner.compose(x)?;
            let order = p[0].order();
            Ok((0..n)
                .map(|i| {
                    (0..n).fold(Jet::constant(shift[i], order), |acc, j| {
                        acc + p[j] * q[i][j]
                    })
                })
                .collect())
        })
    }

    /// `λΦ`.
    pub fn dilated(&self, lambda: f64) -> Self {
        let inner = self.clone();
        ImmersionPatch::parametric(self.ambient_dim, self.jet_order, self.domain, move |x| {
            Ok(inner.compose(x)?.into_iter().map(|j| j * lambda).collect())
        })
    }
}

/// Pointwise geometric data at one parameter point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FundamentalData {
    pub g: [[f64; 4]; 4],
    pub g_inv: [[f64; 4]; 4],
    pub sqrt_det_g: f64,
    /// Orthonormal normal vectors in Rⁿ.
    pub normal_frame: Vec<Vec<f64>>,
    /// `L[β][a][b]` in the normal frame.
    pub l: Vec<[[f64; 4]; 4]>,
    pub h: Vec<f64>,
    /// `nabla_perp_h[β][a]`.
    pub nabla_perp_h: Vec<[f64; 4]>,
    pub l_traceless: Vec<[[f64; 4]; 4]>,
}

/// The five energy integrands, each multiplied by `√det g`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyDensity {
    pub grad_h: f64,
    pub hl: f64,
    pub h4: f64,
    pub l4: f64,
    pub l2sq: f64,
    /// Pointwise `Q₄` with the exact divergence `−2Δ|H|²` dropped, times `√det g`.
    pub q4_mod: f64,
}

impl EnergyDensity {
    pub fn e_gr(&self) -> f64 {
        self.grad_h - self.hl + 7.0 * self.h4
    }

    pub fn e_mu_nu(&self, mu: f64, nu: f64) -> f64 {
        self.e_gr() + mu * self.l4 + nu * self.l2sq
    }
}

/// Integrated energies over a domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub i_grad_h: f64,
    pub i_hl: f64,
    pub i_h4: f64,
    pub i_l4: f64,
    pub i_l2sq: f64,
    pub e_gr: f64,
    pub mu: f64,
    pub nu: f64,
    pub e_mu_nu: f64,
}

impl EnergyBreakdown {
    pub fn assemble(i: [f64; 5], mu: f64, nu: f64) -> Self {
        let e_gr = i[0] - i[1] + 7.0 * i[2];
        EnergyBreakdown {
            i_grad_h: i[0],
            i_hl: i[1],
            i_h4: i[2],
            i_l4: i[3],
            i_l2sq: i[4],
            e_gr,
            mu,
            nu,
            e_mu_nu: e_gr + mu * i[3] + nu * i[4],
        }
    }

    /// Componentwise sum, e.g. over the charts of an atlas.
    pub fn add(&self, o: &Self) -> Self {
        Self::assemble(
            [
                self.i_grad_h + o.i_grad_h,
                self.i_hl + o.i_hl,
                self.i_h4 + o.i_h4,
                self.i_l4 + o.i_l4,
                self.i_l2sq + o.i_l2sq,
            ],
            self.mu,
            self.nu,
        )
    }
}

pub(crate) fn mat4(m: &[[f64; 4]; 4]) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| m[i][j])
}

pub(crate) fn arr4(m: &Matrix4<f64>) -> [[f64; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

/// Inverse of a 4×4 matrix of order-`k` jets, built from the value inverse by
/// the Neumann-type identity `G⁻¹ = G₀⁻¹ Σ_j (−ΔG G₀⁻¹)^j`, exact to order `k`.
pub(crate) fn inverse_jets(g: &[[Jet; 4]; 4]) -> Option<[[Jet; 4]; 4]> {
    let order = g[0][0].order();
    let g0 = Matrix4::from_fn(|i, j| g[i][j].value());
    let gi0 = g0.try_inverse()?;
    let c = |i: usize, j: usize| Jet::constant(gi0[(i, j)], order);
    // E = ΔG · G₀⁻¹ has no constant term, so E^{order+1} vanishes.
    let e: [[Jet; 4]; 4] = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            (0..4).fold(Jet::zero(order), |acc, k| {
                acc + (g[i][k] - g[i][k].value()) * gi0[(k, j)]
            })
        })
    });
    let mut sum: [[Jet; 4]; 4] = std::array::from_fn(|i| {
        std::array::from_fn(|j| Jet::constant(if i == j { 1.0 } else { 0.0 }, order))
    });
    let mut pw = sum;
    for _ in 0..order {
        pw = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                (0..4).fold(Jet::zero(order), |acc, k| acc - pw[i][k] * e[k][j])
            })
        });
        for i in 0..4 {
            for j in 0..4 {
                sum[i][j] += pw[i][j];
            }
        }
    }
    Some(std::array::from_fn(|i| {
        std::array::from_fn(|j| (0..4).fold(Jet::zero(order), |acc, k| acc + c(i, k) * sum[k][j]))
    }))
}

/// First-order jet: value and gradient.
#[derive(Clone, Copy, Debug, Default)]
struct D1 {
    v: f64,
    d: [f64; 4],
}

impl D1 {
    /// `∂^e f` and its gradient, read from the Taylor coefficients.
    fn derivative_of(j: &Jet, e: [u8; 4]) -> Self {
        let up = |k: usize| {
            let mut f = e;
            f[k] += 1;
            j.derivative(f)
        };
        D1 {
            v: j.derivative(e),
            d: std::array::from_fn(up),
        }
    }

    fn mul(self, o: D1) -> D1 {
        D1 {
            v: self.v * o.v,
            d: std::array::from_fn(|k| self.v * o.d[k] + self.d[k] * o.v),
        }
    }

    fn axpy(self, c: D1, x: D1) -> D1 {
        let p = c.mul(x);
        D1 {
            v: self.v + p.v,
            d: std::array::from_fn(|k| self.d[k] + p.d[k]),
        }
    }

    fn neg(self) -> D1 {
        D1 {
            v: -self.v,
            d: self.d.map(|x| -x),
        }
    }
}

fn unit(axes: &[usize]) -> [u8; 4] {
    let mut e = [0u8; 4];
    axes.iter().for_each(|&a| e[a] += 1);
    e
}

fn dot1(a: &[D1], b: &[D1]) -> D1 {
    a.iter()
        .zip(b)
        .fold(D1::default(), |acc, (x, y)| acc.axpy(*x, *y))
}

/// `G⁻¹` to first order: value `G₀⁻¹`, derivative `−G₀⁻¹ ∂G G₀⁻¹`.
fn inverse_d1(g: &[[D1; 4]; 4], gi0: &Matrix4<f64>) -> [[D1; 4]; 4] {
    let dk: [Matrix4<f64>; 4] = std::array::from_fn(|k| {
        let dg = Matrix4::from_fn(|i, j| g[i][j].d[k]);
        -(gi0 * dg * gi0)
    });
    std::array::from_fn(|i| {
        std::array::from_fn(|j| D1 {
            v: gi0[(i, j)],
            d: std::array::from_fn(|k| dk[k][(i, j)]),
        })
    })
}

/// Ambient-vector geometry at a point, before choosing a normal frame.
pub(crate) struct AmbientGeometry {
    pub dphi: Vec<[f64; 4]>,
    pub g: [[f64; 4]; 4],
    pub g_inv: [[f64; 4]; 4],
    pub sqrt_det_g: f64,
    /// `l[a][b]` ambient vectors.
    pub l: [[Vec<f64>; 4]; 4],
    pub h: Vec<f64>,
    pub grad_perp_h: [Vec<f64>; 4],
}

pub(crate) fn ambient_geometry(phi: &[Jet], z: [f64; 4]) -> Result<AmbientGeometry> {
    let n = phi.len();
    let d1: [Vec<D1>; 4] = std::array::from_fn(|a| {
        phi.iter()
            .map(|p| D1::derivative_of(p, unit(&[a])))
            .collect()
    });
    let d2: [[Vec<D1>; 4]; 4] = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            phi.iter()
                .map(|p| D1::derivative_of(p, unit(&[a, b])))
                .collect()
        })
    });
    let g: [[D1; 4]; 4] = std::array::from_fn(|a| std::array::from_fn(|b| dot1(&d1[a], &d1[b])));
    let g0 = Matrix4::from_fn(|i, j| g[i][j].v);
    let det = g0.determinant();
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::NotImmersion { point: z, det });
    }
    let gi = inverse_d1(
        &g,
        &g0.try_inverse()
            .ok_or(Error::NotImmersion { point: z, det })?,
    );
    // t[d][a][b] = <∂_dΦ, ∂_a∂_bΦ>
    let t: [[[D1; 4]; 4]; 4] = std::array::from_fn(|d| {
        std::array::from_fn(|a| std::array::from_fn(|b| dot1(&d1[d], &d2[a][b])))
    });
    let mut l: [[Vec<D1>; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| Vec::new()));
    for a in 0..4 {
        for b in a..4 {
            let gamma: [D1; 4] = std::array::from_fn(|c| {
                (0..4).fold(D1::default(), |acc, d| acc.axpy(gi[c][d], t[d][a][b]))
            });
            let v: Vec<D1> = (0..n)
                .map(|i| (0..4).fold(d2[a][b][i], |acc, c| acc.axpy(gamma[c].neg(), d1[c][i])))
                .collect();
            l[b][a] = v.clone();
            l[a][b] = v;
        }
    }
    let h: Vec<D1> = (0..n)
        .map(|i| {
            let mut s = D1::default();
            for a in 0..4 {
                for b in 0..4 {
                    s = s.axpy(gi[a][b], l[a][b][i]);
                }
            }
            D1 {
                v: 0.25 * s.v,
                d: s.d.map(|x| 0.25 * x),
            }
        })
        .collect();
    let dphi: Vec<[f64; 4]> = (0..n)
        .map(|i| std::array::from_fn(|a| d1[a][i].v))
        .collect();
    let g_inv: [[f64; 4]; 4] = std::array::from_fn(|a| std::array::from_fn(|b| gi[a][b].v));
    let project = |v: &[f64]| -> Vec<f64> {
        let tv: [f64; 4] = std::array::from_fn(|a| (0..n).map(|i| dphi[i][a] * v[i]).sum());
        (0..n)
            .map(|i| {
                let mut s = v[i];
                for a in 0..4 {
                    for b in 0..4 {
                        s -= dphi[i][a] * g_inv[a][b] * tv[b];
                    }
                }
                s
            })
            .collect()
    };
    let grad_perp_h: [Vec<f64>; 4] = std::array::from_fn(|c| {
        let dh: Vec<f64> = h.iter().map(|x| x.d[c]).collect();
        project(&dh)
    });
    Ok(AmbientGeometry {
        dphi,
        g: arr4(&g0),
        g_inv,
        sqrt_det_g: det.sqrt(),
        l: std::array::from_fn(|a| std::array::from_fn(|b| l[a][b].iter().map(|x| x.v).collect())),
        h: h.iter().map(|x| x.v).collect(),
        grad_perp_h,
    })
}

fn normal_frame(geo: &AmbientGeometry, graph: bool) -> Vec<Vec<f64>> {
    let n = geo.dphi.len();
    let m = n - 4;
    let order: Vec<usize> = if graph {
        (4..n).chain(0..4).collect()
    } else {
        (0..n).collect()
    };
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(m);
    // tangent basis orthonormalized first so that normal candidates can be projected
    let mut tang: Vec<Vec<f64>> = Vec::with_capacity(4);
    for a in 0..4 {
        let mut v: Vec<f64> = (0..n).map(|i| geo.dphi[i][a]).collect();
        for _ in 0..2 {
            for u in &tang {
                let c: f64 = v.iter().zip(u).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        tang.push(v.into_iter().map(|x| x / nv).collect());
    }
    for k in order {
        if frame.len() == m {
            break;
        }
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        for _ in 0..2 {
            for u in tang.iter().chain(frame.iter()) {
                let c: f64 = v.iter().zip(u).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nv > 1e-6 {
            frame.push(v.into_iter().map(|x| x / nv).collect());
        }
    }
    frame
}

/// Fundamental forms, mean curvature and `∇⊥H` at `z`.
pub fn fundamental_data(patch: &ImmersionPatch, z: [f64; 4]) -> Result<FundamentalData> {
    let phi = patch.jets(z, 3)?;
    fundamental_data_from_jets(&phi, z, patch.kind() == ParamKind::Graph)
}

pub(crate) fn fundamental_data_from_jets(
    phi: &[Jet],
    z: [f64; 4],
    graph: bool,
) -> Result<FundamentalData> {
    let geo = ambient_geometry(phi, z)?;
    let frame = normal_frame(&geo, graph);
    let comp = |v: &[f64], nu: &[f64]| v.iter().zip(nu).map(|(x, y)| x * y).sum::<f64>();
    let l: Vec<[[f64; 4]; 4]> = frame
        .iter()
        .map(|nu| std::array::from_fn(|a| std::array::from_fn(|b| comp(&geo.l[a][b], nu))))
        .collect();
    let h: Vec<f64> = frame.iter().map(|nu| comp(&geo.h, nu)).collect();
    let nabla_perp_h: Vec<[f64; 4]> = frame
        .iter()
        .map(|nu| std::array::from_fn(|a| comp(&geo.grad_perp_h[a], nu)))
        .collect();
    let l_traceless = l
        .iter()
        .zip(&h)
        .map(|(lb, hb)| {
            std::array::from_fn(|a| std::array::from_fn(|b| lb[a][b] - geo.g[a][b] * hb))
        })
        .collect();
    Ok(FundamentalData {
        g: geo.g,
        g_inv: geo.g_inv,
        sqrt_det_g: geo.sqrt_det_g,
        normal_frame: frame,
        l,
        h,
        nabla_perp_h,
        l_traceless,
    })
}

/// `g^{ac} g^{bd} A_ab B_cd`.
fn contract2(gi: &[[f64; 4]; 4], a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> f64 {
    let gi = mat4(gi);
    let (a, b) = (mat4(a), mat4(b));
    (gi * a * gi * b.transpose()).trace()
}

impl FundamentalData {
    /// `g^{ab} L_ab`, componentwise.
    pub fn trace_l(&self) -> Vec<f64> {
        let gi = mat4(&self.g_inv);
        self.l.iter().map(|lb| (gi * mat4(lb)).trace()).collect()
    }

    /// Trace of the traceless part, componentwise.
    pub fn trace_l_traceless(&self) -> Vec<f64> {
        let gi = mat4(&self.g_inv);
        self.l_traceless
            .iter()
            .map(|lb| (gi * mat4(lb)).trace())
            .collect()
    }

    /// Re-expresses all normal components in the frame `ν'_α = Σ_β O_αβ ν_β`.
    pub fn remix(&self, o: &[Vec<f64>]) -> Self {
        let m = self.h.len();
        let mix_s = |v: &[f64]| -> Vec<f64> {
            (0..m)
                .map(|a| (0..m).map(|b| o[a][b] * v[b]).sum())
                .collect()
        };
        let mix_t = |t: &[[[f64; 4]; 4]]| -> Vec<[[f64; 4]; 4]> {
            (0..m)
                .map(|a| {
                    std::array::from_fn(|i| {
                        std::array::from_fn(|j| (0..m).map(|b| o[a][b] * t[b][i][j]).sum())
                    })
                })
                .collect()
        };
        let n = self.normal_frame.first().map_or(0, Vec::len);
        FundamentalData {
            normal_frame: (0..m)
                .map(|a| {
                    (0..n)
                        .map(|k| (0..m).map(|b| o[a][b] * self.normal_frame[b][k]).sum())
                        .collect()
                })
                .collect(),
            l: mix_t(&self.l),
            h: mix_s(&self.h),
            nabla_perp_h: (0..m)
                .map(|a| {
                    std::array::from_fn(|i| (0..m).map(|b| o[a][b] * self.nabla_perp_h[b][i]).sum())
                })
                .collect(),
            l_traceless: mix_t(&self.l_traceless),
            ..self.clone()
        }
    }

    /// All energy integrands times `√det g`, from normal-frame components.
    pub fn densities(&self) -> EnergyDensity {
        let gi = &self.g_inv;
        let m = self.h.len();
        let h2: f64 = self.h.iter().map(|x| x * x).sum();
        let mut grad_h = 0.0;
        for b in 0..m {
            for i in 0..4 {
                for j in 0..4 {
                    grad_h += gi[i][j] * self.nabla_perp_h[b][i] * self.nabla_perp_h[b][j];
                }
            }
        }
        let hl: [[f64; 4]; 4] = std::array::from_fn(|i| {
            std::array::from_fn(|j| (0..m).map(|b| self.h[b] * self.l[b][i][j]).sum())
        });
        let hl_sq = contract2(gi, &hl, &hl);
        let lo_sq: f64 = self.l_traceless.iter().map(|t| contract2(gi, t, t)).sum();
        let gim = mat4(gi);
        let mut lo2 = Matrix4::zeros();
        for t in &self.l_traceless {
            let tm = mat4(t);
            lo2 += tm * gim * tm;
        }
        let lo2 = arr4(&lo2);
        let l2sq = contract2(gi, &lo2, &lo2);
        let shifted: [[f64; 4]; 4] =
            std::array::from_fn(|i| std::array::from_fn(|j| hl[i][j] - 0.5 * h2 * self.g[i][j]));
        let q4 = -2.0 * contract2(gi, &shifted, &shifted) + 2.0 * grad_h + 8.0 * h2 * h2;
        let w = self.sqrt_det_g;
        EnergyDensity {
            grad_h: w * grad_h,
            hl: w * hl_sq,
            h4: w * h2 * h2,
            l4: w * lo_sq * lo_sq,
            l2sq: w * l2sq,
            q4_mod: w * q4,
        }
    }
}

/// Energy integrands at a point.
pub fn energy_density(patch: &ImmersionPatch, z: [f64; 4]) -> Result<EnergyDensity> {
    Ok(fundamental_data(patch, z)?.densities())
}

/// `E_GR` and `E^(μ,ν)` with their five ingredients over `domain`.
pub fn integrate_energy(
    patch: &ImmersionPatch,
    domain: &Domain,
    mu: f64,
    nu: f64,
    quad: &QuadSpec,
) -> Result<EnergyBreakdown> {
    let i: [f64; 5] = integrate_vec(domain, quad, |z| {
        let d = energy_density(patch, z)?;
        Ok([d.grad_h, d.hl, d.h4, d.l4, d.l2sq])
    })?;
    Ok(EnergyBreakdown::assemble(i, mu, nu))
}

/// A collection of charts; `closed` marks atlases that tile a closed manifold.
#[derive(Clone, Debug)]
pub struct Atlas {
    pub charts: Vec<ImmersionPatch>,
    pub closed: bool,
}

impl Atlas {
    /// Sum of the chart energies, each chart integrated over its own domain.
    pub fn integrate_energy(&self, mu: f64, nu: f64, quad: &QuadSpec) -> Result<EnergyBreakdown> {
        let mut total = EnergyBreakdown::assemble([0.0; 5], mu, nu);
        for c in &self.charts {
            total = total.add(&integrate_energy(c, &c.domain(), mu, nu, quad)?);
        }
        Ok(total)
    }
}

/// Outcome of the `∫Q₄ = 2E_GR` check.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Q4Report {
    pub q4_integral: f64,
    pub e_gr: f64,
    pub defect: f64,
}

/// Integrates `Q₄` (modulo the exact divergence) over a closed atlas and compares with `2E_GR`.
pub fn verify_q4_identity(atlas: &Atlas, quad: &QuadSpec) -> Result<Q4Report> {
    if !atlas.closed || atlas.charts.is_empty() {
        return Err(Error::AtlasNotClosed);
    }
    let mut q4 = 0.0;
    let mut e = 0.0;
    for c in &atlas.charts {
        let v: [f64; 2] = integrate_vec(&c.domain(), quad, |z| {
            let d = energy_density(c, z)?;
            Ok([d.q4_mod, d.e_gr()])
        })?;
        q4 += v[0];
        e += v[1];
    }
    Ok(Q4Report {
        q4_integral: q4,
        e_gr: e,
        defect: q4 - 2.0 * e,
    })
}

/// Returns `(| |∇⊥H|²√det G − |∇Δ₀φ|²/16 |, |Dφ|²|D³φ|² + |D²φ|⁴)` for a graph.
pub fn approximation_discrepancy(patch: &ImmersionPatch, z: [f64; 4]) -> Result<(f64, f64)> {
    let phi = patch.graph_jets(z, 3)?;
    let d1: f64 = phi
        .iter()
        .map(|p| p.gradient().iter().map(|x| x * x).sum::<f64>())
        .sum();
    if d1 > 1.0 {
        return Err(Error::HypothesisViolated(format!(
            "|Dφ| = {} > 1",
            d1.sqrt()
        )));
    }
    let d2: f64 = phi
        .iter()
        .map(|p| p.hessian().iter().flatten().map(|x| x * x).sum::<f64>())
        .sum();
    let d3: f64 = phi
        .iter()
        .map(|p| {
            p.third()
                .iter()
                .flatten()
                .flatten()
                .map(|x| x * x)
                .sum::<f64>()
        })
        .sum();
    let grad_lap: f64 = phi
        .iter()
        .map(|p| {
            let lap = (0..4).fold(Jet::zero(1), |acc, a| acc + p.partial(a).partial(a));
            lap.gradient().iter().map(|x| x * x).sum::<f64>()
        })
        .sum();
    let fd = fundamental_data(patch, z)?;
    let d = fd.densities();
    Ok(((d.grad_h - grad_lap / 16.0).abs(), d1 * d3 + d2 * d2))
}

/// Dense orthogonal matrix helpers used by the property tests and fixtures.
pub fn rotation_matrix(n: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = a.qr().q();
    (0..n)
        .map(|i| (0..n).map(|j| q[(i, j)]).collect())
        .collect()
}

pub mod fixtures {
    //! Explicit immersions with analytic jets.

    use super::*;
    use crate::jet::NVAR;

    /// The flat graph `φ ≡ 0` with codimension `m`.
    pub fn flat(m: usize, domain: Domain) -> ImmersionPatch {
        ImmersionPatch::graph(m, 4, domain, move |x| Ok(vec![Jet::zero(x[0].order()); m]))
    }

    /// Hemisphere chart of the round sphere of radius `radius` in R⁵ via inverse
    /// stereographic projection over the unit ball; `north` selects the sign of the last coordinate.
    pub fn sphere_chart(radius: f64, north: bool) -> ImmersionPatch {
        let sign = if north { 1.0 } else { -1.0 };
        ImmersionPatch::parametric(5, 4, Domain::Ball { radius: 1.0 }, move |x| {
            let r2 = dot(x, x);
            let inv = (r2 + 1.0).recip();
            let mut out: Vec<Jet> = x.iter().map(|xi| *xi * inv * (2.0 * radius)).collect();
            out.push((1.0 - r2) * inv * (sign * radius));
            Ok(out)
        })
    }

    /// Two-chart atlas of the round sphere of the given radius.
    pub fn sphere_atlas(radius: f64) -> Atlas {
        Atlas {
            charts: vec![sphere_chart(radius, true), sphere_chart(radius, false)],
            closed: true,
        }
    }

    /// Graph chart `φ(z) = 1 − √(1 − |z|²)` of the unit sphere touching the origin.
    pub fn unit_sphere_graph(domain: Domain) -> ImmersionPatch {
        ImmersionPatch::graph(1, 4, domain, |x| {
            let r2 = dot(x, x);
            Ok(vec![1.0 - (1.0 - r2).sqrt()])
        })
    }

    /// Germ of the sphere of radius ½ centred at `(0,0,0,0,½)`, through the origin:
    /// `φ(z) = ½ − √(¼ − |z|²)`. Its inversion is the hyperplane `x₅ = 1`.
    pub fn sphere_germ(domain: Domain) -> ImmersionPatch {
        ImmersionPatch::graph(1, 4, domain, |x| {
            let r2 = dot(x, x);
            Ok(vec![0.5 - (0.25 - r2).sqrt()])
        })
    }

    /// `φ(z) = ½P(z,z) + ⅙Q(z,z,z)` with component tables `P[k]`, `Q[k]`.
    pub fn quadratic_germ(
        p: Vec<[[f64; 4]; 4]>,
        q: Option<Vec<[[[f64; 4]; 4]; 4]>>,
        domain: Domain,
    ) -> ImmersionPatch {
        let m = p.len();
        ImmersionPatch::graph(m, 4, domain, move |x| {
            let order = x[0].order();
            Ok((0..m)
                .map(|k| {
                    let mut s = Jet::zero(order);
                    for a in 0..NVAR {
                        for b in 0..NVAR {
                            if p[k][a][b] != 0.0 {
                                s += x[a] * x[b] * (0.5 * p[k][a][b]);
                            }
                        }
                    }
                    if let Some(q) = &q {
                        for a in 0..NVAR {
                            for b in 0..NVAR {
                                for c in 0..NVAR {
                                    if q[k][a][b][c] != 0.0 {
                                        s += x[a] * x[b] * x[c] * (q[k][a][b][c] / 6.0);
                                    }
                                }
                            }
                        }
                    }
                    s
                })
                .collect())
        })
    }

    /// One monomial term of a polynomial graph.
    #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
    pub struct PolyTerm {
        pub multi_index: [u8; 4],
        pub coeff: Vec<f64>,
    }

    /// Polynomial graph immersion as read from JSON.
    #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
    pub struct PolynomialGraph {
        pub codim: usize,
        pub terms: Vec<PolyTerm>,
    }

    impl PolynomialGraph {
        pub fn validate(&self) -> Result<()> {
            if self.codim == 0 {
                return Err(Error::Dimension("codim must be positive".into()));
            }
            for t in &self.terms {
                if t.coeff.len() != self.codim {
                    return Err(Error::Dimension(format!(
                        "term {:?} has {} coefficients",
                        t.multi_index,
                        t.coeff.len()
                    )));
                }
            }
            Ok(())
        }

        pub fn to_patch(&self, domain: Domain) -> Result<ImmersionPatch> {
            self.validate()?;
            let pg = self.clone();
            Ok(ImmersionPatch::graph(self.codim, 4, domain, move |x| {
                let order = x[0].order();
                let mut out = vec![Jet::zero(order); pg.codim];
                for t in &pg.terms {
                    let mut mono = Jet::constant(1.0, order);
                    for v in 0..NVAR {
                        for _ in 0..t.multi_index[v] {
                            mono *= x[v];
                        }
                    }
                    for (o, c) in out.iter_mut().zip(&t.coeff) {
                        *o += mono * *c;
                    }
                }
                Ok(out)
            }))
        }
    }
}
