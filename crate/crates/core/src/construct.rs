//! The counterexample construction: choice of τ and Θ, the touching constant
//! c_τ, the glued supersolution u_{ε,τ} = min{c_τφ^τ, φ₁/ε} and the scalings
//! A and ε that place the two functions at the prescribed norms t₁ and t₂.

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, h1_norm_sq, restrict, Field, OperatorPair};
use crate::eigensolve::{eigenvalue_ratio, principal_eigenpair, EigenPair};
use crate::error::{Error, Result};
use crate::geometry::{mesh, mesh_enlarged, DomainSpec, Mesh, Point};
use crate::mcatalog::{eval_m, IncreasingPair, MFunctionSpec};
use crate::verify::Counterexample;

/// Relative margin demanded above M(t₁)/M(t₂) when accepting τ.
pub const TAU_SAFETY: f64 = 1e-3;
pub const TAU_HALVINGS: usize = 40;
/// Relative accuracy of A²‖u_{ε,τ}‖² = t₂.
pub const EPSILON_NORM_TOL: f64 = 1e-6;
pub const EPSILON_FLOOR: f64 = 1e-12;
/// Upper cap on α in the weak comparison variant.
pub const WEAK_ALPHA_CAP: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    Ssm,
    StrongCp,
    WeakCp,
}

/// Ω with its mesh, operators and principal eigenpair (φ₁, λ₁).
#[derive(Debug, Clone)]
pub struct InnerProblem {
    pub domain: DomainSpec,
    pub h: f64,
    pub mesh: Mesh,
    pub ops: OperatorPair,
    pub eigen: EigenPair,
    pub norm_phi1_sq: f64,
}

impl InnerProblem {
    pub fn new(domain: &DomainSpec, h: f64) -> Result<InnerProblem> {
        let mesh = mesh(domain, h)?;
        let ops = assemble(&mesh);
        let eigen = principal_eigenpair(&ops, &mesh)?;
        let norm_phi1_sq = h1_norm_sq(&eigen.phi, &ops)?;
        Ok(InnerProblem { domain: domain.clone(), h, mesh, ops, eigen, norm_phi1_sq })
    }
}

/// Ω^τ with its eigenpair (φ^τ, λ^τ) and φ^τ interpolated onto the Ω mesh.
#[derive(Debug, Clone)]
pub struct EnlargedProblem {
    pub tau: f64,
    pub domain: DomainSpec,
    pub mesh: Mesh,
    pub ops: OperatorPair,
    pub eigen: EigenPair,
    pub phi_restricted: Field,
    /// λ^τ/λ₁
    pub ratio: f64,
}

pub fn solve_enlarged(inner: &InnerProblem, tau: f64) -> Result<EnlargedProblem> {
    let (domain, mesh) = mesh_enlarged(&inner.domain, tau, inner.h)?;
    let ops = assemble(&mesh);
    let eigen = principal_eigenpair(&ops, &mesh)?;
    let phi_restricted = restrict(&eigen.phi, &mesh, &inner.mesh)?;
    let ratio = eigenvalue_ratio(&inner.eigen, &eigen)?;
    Ok(EnlargedProblem { tau, domain, mesh, ops, eigen, phi_restricted, ratio })
}

/// Default starting τ: a quarter of the inradius of Ω.
pub fn default_initial_tau(domain: &DomainSpec) -> f64 {
    0.25 * domain.inradius()
}

/// Halves τ from `tau0` until λ^τ/λ₁ > M(t₁)/M(t₂)·(1 + safety).
pub fn select_tau(pair: &IncreasingPair, inner: &InnerProblem, tau0: Option<f64>) -> Result<EnlargedProblem> {
    if !(pair.m1 < pair.m2) {
        return Err(Error::NotIncreasing { t1: pair.t1, t2: pair.t2, m1: pair.m1, m2: pair.m2 });
    }
    let target = pair.m1 / pair.m2 * (1.0 + TAU_SAFETY);
    let mut tau = tau0.unwrap_or_else(|| default_initial_tau(&inner.domain));
    if !(tau > 0.0) {
        return Err(Error::PreconditionViolated(format!("initial tau must be positive, got {tau}")));
    }
    for _ in 0..=TAU_HALVINGS {
        match solve_enlarged(inner, tau) {
            Ok(outer) if outer.ratio > target => return Ok(outer),
            Ok(_) => {}
            Err(Error::DegenerateElement { .. }) => break,
            Err(e) => return Err(e),
        }
        tau *= 0.5;
    }
    Err(Error::NoAdmissibleTau { attempts: TAU_HALVINGS, target })
}

/// Midpoint of the open interval (λ₁M(t₁), λ^τM(t₂)).
pub fn select_theta(lambda1: f64, lambda_tau: f64, m1: f64, m2: f64) -> Result<f64> {
    let (lo, hi) = (lambda1 * m1, lambda_tau * m2);
    if !(lo < hi) {
        return Err(Error::EmptyInterval { lo, hi });
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone)]
pub struct TouchingData {
    pub c_tau: f64,
    pub p_tilde: usize,
    pub p_tilde_coords: Point,
    /// c_τφ^τ|_Ω − φ₁
    pub gap: Field,
}

/// c_τ = max over interior nodes of φ₁/φ^τ|_Ω, attained at p̃ (smallest index
/// on ties).
pub fn compute_c_tau(phi1: &EigenPair, phi_tau_restricted: &Field, mesh: &Mesh) -> Result<TouchingData> {
    let (p1, pt) = (phi1.phi.values(), phi_tau_restricted.values());
    if phi_tau_restricted.mesh_id() != mesh.id() || phi1.phi.mesh_id() != mesh.id() {
        return Err(Error::DimensionMismatch("eigenfunctions must live on the Ω mesh".into()));
    }
    let boundary = mesh.boundary_mask();
    if let Some(i) = (0..pt.len()).find(|&i| !(pt[i] > 0.0 || (boundary[i] && pt[i] == 0.0))) {
        return Err(Error::PositivityFailure(format!(
            "restricted outer eigenfunction is {} at node {i}",
            pt[i]
        )));
    }
    let mut best: Option<(usize, f64)> = None;
    for i in mesh.interior_nodes() {
        let r = p1[i] / pt[i];
        if best.is_none_or(|b| r > b.1) {
            best = Some((i, r));
        }
    }
    let (p_tilde, c_tau) = best.ok_or_else(|| Error::MeshTooCoarse("no interior node".into()))?;
    let gap = phi_tau_restricted.zip_with(&phi1.phi, |t, p| c_tau * t - p)?;
    Ok(TouchingData { c_tau, p_tilde, p_tilde_coords: mesh.nodes()[p_tilde], gap })
}

#[derive(Debug, Clone)]
pub struct GluedFunction {
    pub epsilon: f64,
    pub values: Field,
    /// Nodes of Ω^τ_ε, where φ₁/ε < c_τφ^τ.
    pub inner_set: Vec<bool>,
}

pub fn glue(touch: &TouchingData, phi1: &EigenPair, phi_tau_restricted: &Field, epsilon: f64) -> Result<GluedFunction> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::PreconditionViolated(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    let c = touch.c_tau;
    let inner_set = phi1
        .phi
        .values()
        .iter()
        .zip(phi_tau_restricted.values())
        .map(|(&p, &t)| p / epsilon < c * t)
        .collect();
    let values = phi_tau_restricted.zip_with(&phi1.phi, |t, p| (c * t).min(p / epsilon))?;
    Ok(GluedFunction { epsilon, values, inner_set })
}

/// A with ‖Aαφ₁‖² = t₁.
pub fn select_scale_a(alpha: f64, norm_phi1_sq: f64, t1: f64) -> f64 {
    t1.sqrt() / (alpha * norm_phi1_sq.sqrt())
}

/// Chooses ε with A²‖u_{ε,τ}‖² = t₂ by bisection in log ε.
pub fn select_epsilon(
    builder: impl Fn(f64) -> Result<GluedFunction>,
    a: f64,
    t2: f64,
    ops: &OperatorPair,
) -> Result<(f64, GluedFunction)> {
    let target = t2 / (a * a);
    let norm = |g: &GluedFunction| h1_norm_sq(&g.values, ops);
    let close = |n: f64| (n - target).abs() <= EPSILON_NORM_TOL * target;

    let at_one = builder(1.0)?;
    let n_one = norm(&at_one)?;
    if close(n_one) {
        return Ok((1.0, at_one));
    }
    if n_one > target {
        return Err(Error::PreconditionViolated(format!(
            "A²‖u_(1,τ)‖² = {} already exceeds t₂ = {t2}",
            a * a * n_one
        )));
    }
    let mut eps_lo = 0.1;
    loop {
        let g = builder(eps_lo)?;
        let n = norm(&g)?;
        if close(n) {
            return Ok((eps_lo, g));
        }
        if n > target {
            break;
        }
        eps_lo /= 10.0;
        if eps_lo < EPSILON_FLOOR {
            return Err(Error::BracketFailure { epsilon_lo: eps_lo });
        }
    }
    let (mut lo, mut hi) = (eps_lo.ln(), 0.0_f64);
    let mut last = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let eps = mid.exp();
        let g = builder(eps)?;
        let n = norm(&g)?;
        if close(n) {
            return Ok((eps, g));
        }
        if n > target {
            lo = mid;
        } else {
            hi = mid;
        }
        last = Some((eps, n));
        if hi - lo < 1e-15 {
            break;
        }
    }
    Err(Error::BracketFailure { epsilon_lo: last.map(|l| l.0).unwrap_or(eps_lo) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleParams {
    pub mode: Mode,
    pub tau: f64,
    pub theta: f64,
    pub theta_interval: [f64; 2],
    pub alpha: f64,
    /// M(t₂)λ^τ/(M(t₁)λ₁); the weak variant needs 1 < α below this.
    pub alpha_upper: f64,
    #[serde(rename = "A")]
    pub a_scale: f64,
    pub epsilon: f64,
    pub t1: f64,
    pub t2: f64,
    pub m1: f64,
    pub m2: f64,
    pub lambda1: f64,
    pub lambda_tau: f64,
    pub eigenvalue_ratio: f64,
    pub c_tau: f64,
    pub p_tilde: usize,
    pub p_tilde_coords: Point,
    pub norm_phi1_sq: f64,
    pub norm_u_sq: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BuildOptions {
    /// Target element size; the domain default when absent.
    pub h: Option<f64>,
    /// Starting τ for the halving search; a quarter of the inradius when absent.
    pub tau0: Option<f64>,
}

pub fn build_counterexample(
    domain: &DomainSpec,
    m: &MFunctionSpec,
    t1: f64,
    t2: f64,
    mode: Mode,
    opts: BuildOptions,
) -> Result<Counterexample> {
    domain.validate()?;
    m.validate(t2)?;
    if !(t1 > 0.0 && t2 > t1) {
        return Err(Error::PreconditionViolated(format!("need 0 < t1 < t2, got t1 = {t1}, t2 = {t2}")));
    }
    let h = opts.h.unwrap_or_else(|| domain.default_h());
    let inner = InnerProblem::new(domain, h)?;
    let (m1, m2) = (eval_m(m, t1)?, eval_m(m, t2)?);
    let outer = match IncreasingPair::new(m, t1, t2) {
        Ok(pair) => select_tau(&pair, &inner, opts.tau0)?,
        Err(Error::NotIncreasing { .. }) => {
            // λ^τ ≤ λ₁ and M(t₁) ≥ M(t₂) leave no room for Θ at any τ.
            let tau = opts.tau0.unwrap_or_else(|| default_initial_tau(domain));
            let outer = solve_enlarged(&inner, tau)?;
            select_theta(inner.eigen.lambda, outer.eigen.lambda, m1, m2)?;
            unreachable!("Θ interval cannot be open when M(t1) >= M(t2) and λ^τ <= λ₁");
        }
        Err(e) => return Err(e),
    };
    let touching = compute_c_tau(&inner.eigen, &outer.phi_restricted, &inner.mesh)?;
    let (lambda1, lambda_tau) = (inner.eigen.lambda, outer.eigen.lambda);
    let theta = select_theta(lambda1, lambda_tau, m1, m2)?;
    let alpha_upper = m2 * lambda_tau / (m1 * lambda1);
    let alpha = match mode {
        Mode::Ssm | Mode::StrongCp => 1.0,
        Mode::WeakCp => alpha_upper.sqrt().min(WEAK_ALPHA_CAP),
    };
    let a_scale = select_scale_a(alpha, inner.norm_phi1_sq, t1);
    let (epsilon, glued) = select_epsilon(
        |eps| glue(&touching, &inner.eigen, &outer.phi_restricted, eps),
        a_scale,
        t2,
        &inner.ops,
    )?;
    let norm_u_sq = h1_norm_sq(&glued.values, &inner.ops)?;
    let params = CounterexampleParams {
        mode,
        tau: outer.tau,
        theta,
        theta_interval: [lambda1 * m1, lambda_tau * m2],
        alpha,
        alpha_upper,
        a_scale,
        epsilon,
        t1,
        t2,
        m1,
        m2,
        lambda1,
        lambda_tau,
        eigenvalue_ratio: outer.ratio,
        c_tau: touching.c_tau,
        p_tilde: touching.p_tilde,
        p_tilde_coords: touching.p_tilde_coords,
        norm_phi1_sq: inner.norm_phi1_sq,
        norm_u_sq,
    };
    let lower = inner.eigen.phi.scaled(a_scale * alpha);
    let upper = glued.values.scaled(a_scale);
    Ok(Counterexample { lower, upper, params, inner, outer, touching, glued })
}
