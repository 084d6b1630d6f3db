//! `w4`: command-line front end for the w4 numerical laboratory.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use w4_core::bilinear::{gram_discrepancy, gram_matrix_from, gram_quadrature, GramSource};
use w4_core::geometry::fixtures::{
    flat, quadratic_germ, sphere_germ, unit_sphere_graph, PolynomialGraph,
};
use w4_core::geometry::{integrate_energy, ImmersionPatch};
use w4_core::inversion::{germ_forms, residue_integral, richardson, verify_energy_identity};
use w4_core::pipeline::run_connected_sum;
use w4_core::rotation::{search_s, TracelessFormTuple};
use w4_core::triharmonic::solve_interpolant;
use w4_core::{Bilinear, ConnectedSumSpec, Domain, Family, FormCoefficients, QuadSpec, Trilinear};

mod output;

#[derive(Parser)]
#[command(
    name = "w4",
    version,
    about = "Fourth-order Willmore energies and connected-sum margins for 4-dimensional immersions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate E_GR and E^(μ,ν) of an immersion over a domain.
    Energy {
        #[arg(long)]
        immersion: PathBuf,
        /// `ball:R`, `annulus:r,R`, `exterior:R` or `box:x0,y0,z0,w0,x1,y1,z1,w1`.
        #[arg(long, value_parser = parse_domain)]
        domain: Option<Domain>,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 0.0)]
        nu: f64,
        #[arg(long, default_value_t = 24)]
        quad: usize,
        /// Also integrate at the next refinement and require agreement to this relative tolerance.
        #[arg(long)]
        check: Option<f64>,
    },
    /// Residue integral of a graph germ over small spheres, as CSV.
    Residue {
        #[arg(long)]
        immersion: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.01,0.001")]
        radii: Vec<f64>,
        /// Require the Richardson limit to equal −16π² within this relative tolerance.
        #[arg(long)]
        verify: Option<f64>,
    },
    /// Inversion data of a graph germ and, with --verify, the annulus energy identity.
    Invert {
        #[arg(long)]
        immersion: PathBuf,
        #[arg(long)]
        verify: bool,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.02")]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 0.25)]
        outer: f64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 0.0)]
        nu: f64,
        #[arg(long, default_value_t = 24)]
        quad: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Solve the triharmonic interpolation problem on the neck annulus.
    Triharmonic {
        #[arg(long)]
        forms: PathBuf,
        #[arg(long)]
        gamma: f64,
        /// Defaults to γ⁸.
        #[arg(long)]
        alpha: Option<f64>,
        /// Defaults to 3α.
        #[arg(long)]
        beta: Option<f64>,
        /// Require Δ₀³w = 0 to this tolerance relative to the largest coefficient.
        #[arg(long)]
        verify: Option<f64>,
    },
    /// Gram matrix of a radial family on (τ, σ); `inf` is accepted for σ.
    Gram {
        #[arg(long, value_parser = Family::from_tag)]
        family: Family,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        tau: f64,
        /// Use brackets integrated from the member functions instead of the tabulated ones.
        #[arg(long)]
        integrated: bool,
        /// Compare with 4D quadrature (finite annuli only).
        #[arg(long)]
        quad_check: bool,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Rotation alignment: orthogonal (S, T) with a positive pairing.
    Rotate {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        r: PathBuf,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Connected-sum energy margins over a γ grid.
    Connect {
        #[arg(long)]
        spec: PathBuf,
        /// Write the convergence table here instead of after the JSON.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Require a negative margin at the smallest γ.
        #[arg(long)]
        verify: bool,
    },
}

/// Immersion input formats.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ImmersionInput {
    /// Graph of a vector polynomial.
    Polynomial(PolynomialGraph),
    /// `½P(z,z) + ⅙Q(z,z,z)`.
    Germ { p: Bilinear, q: Option<Trilinear> },
    /// Sphere of radius ½ through the origin.
    SphereGerm,
    /// Unit sphere touching the origin.
    SphereGraph,
    /// Flat graph in codimension `m`.
    Flat { m: usize },
}

/// Boundary forms of both germs, or their harmonic coefficients.
#[derive(Deserialize)]
#[serde(untagged)]
enum FormsInput {
    Coefficients(FormCoefficients),
    Forms {
        p: Bilinear,
        q: Trilinear,
        r: Bilinear,
        s: Trilinear,
    },
}

fn parse_domain(s: &str) -> std::result::Result<Domain, String> {
    let (kind, rest) = s.split_once(':').ok_or("expected kind:values")?;
    let v: Vec<f64> = rest
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    let want = |n: usize| {
        if v.len() == n {
            Ok(())
        } else {
            Err(format!("{kind} takes {n} values, got {}", v.len()))
        }
    };
    match kind {
        "ball" => want(1).map(|_| Domain::Ball { radius: v[0] }),
        "annulus" => want(2).map(|_| Domain::Annulus {
            inner: v[0],
            outer: v[1],
        }),
        "exterior" => want(1).map(|_| Domain::Exterior { radius: v[0] }),
        "box" => want(8).map(|_| Domain::Box {
            lo: [v[0], v[1], v[2], v[3]],
            hi: [v[4], v[5], v[6], v[7]],
        }),
        _ => Err(format!("unknown domain kind {kind}")),
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_patch(path: &Path, domain: Domain) -> Result<ImmersionPatch> {
    Ok(match read_json::<ImmersionInput>(path)? {
        ImmersionInput::Polynomial(pg) => pg.to_patch(domain)?,
        ImmersionInput::Germ { p, q } => quadratic_germ(p, q, domain),
        ImmersionInput::SphereGerm => sphere_germ(domain),
        ImmersionInput::SphereGraph => unit_sphere_graph(domain),
        ImmersionInput::Flat { m } => flat(m, domain),
    })
}

#[derive(Serialize)]
struct GramOutput {
    family: Family,
    /// Infinite radii are written as the string `"inf"`.
    sigma: output::Radius,
    tau: f64,
    source: &'static str,
    matrix: [[f64; 6]; 6],
    divergent: Vec<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    quad_check: Option<QuadCheck>,
}

#[derive(Serialize)]
struct QuadCheck {
    quadrature: [[f64; 6]; 6],
    max_rel_err: f64,
    worst_entry: (usize, usize),
    tol: f64,
    pass: bool,
}

#[derive(Serialize)]
struct InvertOutput {
    p: Bilinear,
    q: Trilinear,
    #[serde(skip_serializing_if = "Option::is_none")]
    identity: Option<w4_core::inversion::IdentityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pass: Option<bool>,
}

#[derive(Serialize)]
struct TriharmonicOutput {
    interpolant: w4_core::Interpolant,
    max_trilaplacian: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pass: Option<bool>,
}

fn run(cli: Cli) -> Result<bool> {
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Energy {
            immersion,
            domain,
            mu,
            nu,
            quad,
            check,
        } => {
            let patch = load_patch(&immersion, domain.unwrap_or(Domain::Ball { radius: 1.0 }))?;
            let dom = domain.unwrap_or_else(|| patch.domain());
            let mut spec = QuadSpec::order(quad);
            if let Some(tol) = check {
                spec = spec.with_check(tol);
            }
            let e = integrate_energy(&patch, &dom, mu, nu, &spec)?;
            output::json(&mut out, &e)?;
            Ok(true)
        }
        Command::Residue {
            immersion,
            radii,
            verify,
        } => {
            let patch = load_patch(
                &immersion,
                Domain::Ball {
                    radius: radii.iter().cloned().fold(0.0, f64::max) * 2.0,
                },
            )?;
            let target = -16.0 * PI * PI;
            let vals: Vec<f64> = radii
                .iter()
                .map(|&r| residue_integral(&patch, r))
                .collect::<Result<_, _>>()?;
            writeln!(out, "r,value,value_plus_16pi2")?;
            for (r, v) in radii.iter().zip(&vals) {
                writeln!(
                    out,
                    "{},{},{}",
                    output::num(*r),
                    output::num(*v),
                    output::num(v - target)
                )?;
            }
            match verify {
                Some(tol) => {
                    let (lim, _) = if radii.len() >= 2 {
                        richardson(&radii, &vals, 2.0)
                    } else {
                        (vals[0], 0.0)
                    };
                    let err = (lim - target).abs() / target.abs();
                    eprintln!(
                        "richardson limit {} (relative error {:.3e}, tolerance {tol:e})",
                        output::num(lim),
                        err
                    );
                    Ok(err <= tol)
                }
                None => Ok(true),
            }
        }
        Command::Invert {
            immersion,
            verify,
            radii,
            outer,
            mu,
            nu,
            quad,
            tol,
        } => {
            let patch = load_patch(&immersion, Domain::Ball { radius: outer })?;
            let (p, q) = germ_forms(&patch)?;
            let identity = if verify {
                Some(verify_energy_identity(
                    &patch,
                    mu,
                    nu,
                    &radii,
                    outer,
                    &QuadSpec::order(quad),
                )?)
            } else {
                None
            };
            let pass = identity.as_ref().map(|r| r.passes(tol));
            output::json(
                &mut out,
                &InvertOutput {
                    p,
                    q,
                    identity,
                    pass,
                },
            )?;
            Ok(pass.unwrap_or(true))
        }
        Command::Triharmonic {
            forms,
            gamma,
            alpha,
            beta,
            verify,
        } => {
            let coeffs = match read_json::<FormsInput>(&forms)? {
                FormsInput::Coefficients(c) => c,
                FormsInput::Forms { p, q, r, s } => FormCoefficients::from_forms(&p, &q, &r, &s)?,
            };
            let alpha = alpha.unwrap_or(gamma.powi(8));
            let beta = beta.unwrap_or(3.0 * alpha);
            let interp = solve_interpolant(&coeffs, gamma, alpha, beta)?;
            let lap = interp.max_trilaplacian();
            let pass = verify.map(|tol| lap <= tol);
            output::json(
                &mut out,
                &TriharmonicOutput {
                    interpolant: interp,
                    max_trilaplacian: lap,
                    pass,
                },
            )?;
            Ok(pass.unwrap_or(true))
        }
        Command::Gram {
            family,
            sigma,
            tau,
            integrated,
            quad_check,
            tol,
        } => {
            let source = if integrated {
                GramSource::Raw
            } else {
                GramSource::Printed
            };
            let g = gram_matrix_from(family, sigma, tau, source)?;
            let check = if quad_check {
                if !sigma.is_finite() || tau <= 0.0 {
                    bail!("--quad-check needs a finite annulus 0 < τ < σ < ∞");
                }
                let spec = QuadSpec {
                    radial: 24,
                    sphere: 10,
                    refine_tol: Some(1e-10),
                };
                let q = gram_quadrature(family, sigma, tau, &spec)?;
                let worst = gram_discrepancy(&g.m, &q);
                Some(QuadCheck {
                    quadrature: q,
                    max_rel_err: worst.0,
                    worst_entry: worst.1,
                    tol,
                    pass: worst.0 <= tol,
                })
            } else {
                None
            };
            let pass = check.as_ref().is_none_or(|c| c.pass);
            let divergent = g.divergent.iter().map(|&(i, j)| (i + 1, j + 1)).collect();
            let src = if integrated {
                "integrated"
            } else {
                "tabulated"
            };
            output::json(
                &mut out,
                &GramOutput {
                    family,
                    sigma: output::Radius(sigma),
                    tau,
                    source: src,
                    matrix: g.m,
                    divergent,
                    quad_check: check,
                },
            )?;
            Ok(pass)
        }
        Command::Rotate {
            p,
            r,
            restarts,
            seed,
        } => {
            let p = TracelessFormTuple::from_bilinear(&read_json::<Bilinear>(&p)?)?;
            let r = TracelessFormTuple::from_bilinear(&read_json::<Bilinear>(&r)?)?;
            let res = search_s(&p, &r, restarts, seed)?;
            output::json(&mut out, &res)?;
            Ok(true)
        }
        Command::Connect { spec, csv, verify } => {
            let spec: ConnectedSumSpec = read_json(&spec)?;
            let report = run_connected_sum(&spec)?;
            output::json(&mut out, &report)?;
            let table = report.to_csv();
            match csv {
                Some(path) => std::fs::write(&path, table)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => write!(out, "\n{table}")?,
            }
            Ok(!verify || report.verdict)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
