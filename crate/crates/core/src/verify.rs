//! Discrete weak-form checks of the constructed pair, the positive solution
//! set of the nonlocal linear problem and the resulting failure
//! certificates. Every inequality is tested against the nonnegative nodal
//! hat functions and reported as a mass-normalized density per node.

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::assembly::{h1_norm_sq, Field, OperatorPair};
use crate::construct::{CounterexampleParams, EnlargedProblem, GluedFunction, InnerProblem, Mode, TouchingData};
use crate::eigensolve::EigenPair;
use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::mcatalog::{eval_m, MFunctionSpec};
use crate::numeric::bisect;

pub const STRICT_MARGIN_TOL: f64 = 1e-8;
pub const WEAK_SUPERSOLUTION_TOL: f64 = 1e-8;
pub const ORDERING_TOL: f64 = 1e-9;
/// Relative to max ū.
pub const TOUCH_TOL: f64 = 1e-9;
/// Relative to Θ.
pub const FORCED_RESIDUAL_TOL: f64 = 1e-6;
pub const ROOT_RESIDUAL_TOL: f64 = 1e-9;
pub const ROOT_REL_TOL: f64 = 1e-12;
pub const SCAN_POINTS: usize = 4096;

/// An ordered pair (u̲, ū) or comparison pair (ℓ, w) on the Ω mesh, with
/// everything used to build it.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub lower: Field,
    pub upper: Field,
    pub params: CounterexampleParams,
    pub inner: InnerProblem,
    pub outer: EnlargedProblem,
    pub touching: TouchingData,
    pub glued: GluedFunction,
}

impl Counterexample {
    pub fn eigen_inner(&self) -> &EigenPair {
        &self.inner.eigen
    }

    pub fn eigen_outer(&self) -> &EigenPair {
        &self.outer.eigen
    }
}

fn density_min(ops: &OperatorPair, rows: impl Fn(usize) -> f64) -> f64 {
    ops.interior()
        .iter()
        .map(|&i| rows(i) / ops.lumped_mass()[i])
        .fold(f64::INFINITY, f64::min)
}

/// min over interior rows of (K u − coeff·Mm u)_i / (Mm·1)_i.
pub fn check_weak_supersolution(u: &Field, coeff: f64, ops: &OperatorPair) -> Result<f64> {
    let ku = ops.apply_stiffness(u)?;
    let mu = ops.apply_mass(u)?;
    Ok(density_min(ops, |i| ku[i] - coeff * mu[i]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ordering {
    pub min_gap: f64,
    pub touch_nodes: Vec<usize>,
}

/// min of ū − u̲ over all nodes and the interior nodes where the gap is
/// within the touch tolerance.
pub fn check_pair_ordering(cex: &Counterexample) -> Result<Ordering> {
    let gap = cex.upper.zip_with(&cex.lower, |u, l| u - l)?;
    let tol = TOUCH_TOL * cex.upper.values().iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let min_gap = gap.values().iter().copied().fold(f64::INFINITY, f64::min);
    let touch_nodes = cex.inner.ops.interior().iter().copied().filter(|&i| gap.values()[i] <= tol).collect();
    Ok(Ordering { min_gap, touch_nodes })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrictMargins {
    pub sub: f64,
    pub sup: f64,
}

/// Density margins of Θ u̲ > M(‖u̲‖²)(−Δu̲) and M(‖ū‖²)(−Δū) > Θ ū, with M
/// evaluated at the actual discrete norms of the two fields.
pub fn check_strict_inequalities(cex: &Counterexample, m: &MFunctionSpec) -> Result<StrictMargins> {
    let ops = &cex.inner.ops;
    let theta = cex.params.theta;
    let m_lower = eval_m(m, h1_norm_sq(&cex.lower, ops)?)?;
    let m_upper = eval_m(m, h1_norm_sq(&cex.upper, ops)?)?;
    let (kl, ml) = (ops.apply_stiffness(&cex.lower)?, ops.apply_mass(&cex.lower)?);
    let (ku, mu) = (ops.apply_stiffness(&cex.upper)?, ops.apply_mass(&cex.upper)?);
    Ok(StrictMargins {
        sub: density_min(ops, |i| theta * ml[i] - m_lower * kl[i]),
        sup: density_min(ops, |i| m_upper * ku[i] - theta * mu[i]),
    })
}

/// Density margin of M(‖ℓ‖²)(−Δℓ) < M(‖w‖²)(−Δw).
pub fn comparison_margin(cex: &Counterexample, m: &MFunctionSpec) -> Result<f64> {
    let ops = &cex.inner.ops;
    let m_lower = eval_m(m, h1_norm_sq(&cex.lower, ops)?)?;
    let m_upper = eval_m(m, h1_norm_sq(&cex.upper, ops)?)?;
    let kl = ops.apply_stiffness(&cex.lower)?;
    let ku = ops.apply_stiffness(&cex.upper)?;
    Ok(density_min(ops, |i| m_upper * ku[i] - m_lower * kl[i]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    pub s: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSet {
    pub roots: Vec<Root>,
    pub s_max: f64,
    pub n_scan: usize,
    /// g vanishes on a whole stretch of the scan (constant M at Θ = Mλ₁).
    pub degenerate: bool,
}

/// Roots of g(s) = M(s²‖φ₁‖²)λ₁ − Θ on (0, s_max].
pub fn nonlocal_linear_solution_set(
    m: &MFunctionSpec,
    lambda1: f64,
    norm_phi1_sq: f64,
    theta: f64,
    s_max: f64,
) -> Result<SolutionSet> {
    if !(s_max > 0.0 && s_max.is_finite()) {
        return Err(Error::PreconditionViolated(format!("scan range must be positive, got {s_max}")));
    }
    let g = |s: f64| eval_m(m, s * s * norm_phi1_sq).map(|v| v * lambda1 - theta);
    let zero_tol = ROOT_RESIDUAL_TOL * theta.abs();
    let grid: Vec<f64> = (1..=SCAN_POINTS).map(|k| s_max * k as f64 / SCAN_POINTS as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&s| g(s)).collect::<Result<_>>()?;
    let degenerate = values.windows(2).any(|w| w[0].abs() <= zero_tol && w[1].abs() <= zero_tol);

    let mut roots = Vec::new();
    let mut push = |s: f64| -> Result<()> {
        let residual = g(s)?.abs();
        roots.push(Root { s, residual });
        Ok(())
    };
    if !degenerate {
        let left = s_max * 1e-9;
        let mut prev = (left, g(left)?);
        for (&s, &v) in grid.iter().zip(&values) {
            if v == 0.0 {
                push(s)?;
            } else if prev.1 != 0.0 && prev.1.signum() != v.signum() {
                let f = |x: f64| g(x).unwrap_or(f64::NAN);
                push(bisect(f, prev.0, s, ROOT_REL_TOL, 0.0))?;
            }
            prev = (s, v);
        }
    }
    Ok(SolutionSet { roots, s_max, n_scan: SCAN_POINTS, degenerate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginCheck {
    #[serde(skip)]
    pub name: &'static str,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub required: bool,
    pub pass: bool,
}

impl MarginCheck {
    fn new(name: &'static str, value: f64, relation: Relation, threshold: f64) -> MarginCheck {
        let pass = match relation {
            Relation::Gt => value > threshold,
            Relation::Ge => value >= threshold,
            Relation::Le => value <= threshold,
        };
        MarginCheck { name, value, relation, threshold, required: false, pass }
    }
}

/// Margin checks keyed by name in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Margins(pub Vec<MarginCheck>);

impl Margins {
    pub fn get(&self, name: &str) -> Option<&MarginCheck> {
        self.0.iter().find(|c| c.name == name)
    }

    pub fn value(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, |c| c.value)
    }
}

impl Serialize for Margins {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for c in &self.0 {
            map.serialize_entry(c.name, c)?;
        }
        map.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CertVerdict {
    CertifiedFailure,
    NotCertified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub strict_margin: f64,
    pub weak_supersolution: f64,
    pub ordering: f64,
    pub touch_relative: f64,
    pub forced_residual_relative: f64,
    pub root_residual_relative: f64,
    pub scan_points: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            strict_margin: STRICT_MARGIN_TOL,
            weak_supersolution: WEAK_SUPERSOLUTION_TOL,
            ordering: ORDERING_TOL,
            touch_relative: TOUCH_TOL,
            forced_residual_relative: FORCED_RESIDUAL_TOL,
            root_residual_relative: ROOT_RESIDUAL_TOL,
            scan_points: SCAN_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshInfo {
    pub domain: DomainSpec,
    pub h: f64,
    pub nodes: usize,
    pub cells: usize,
    pub interior_nodes: usize,
    pub eigen_iterations: usize,
    pub eigen_residual: f64,
    pub eigen_density_residual: f64,
}

impl MeshInfo {
    fn of(domain: &DomainSpec, mesh: &crate::geometry::Mesh, ops: &OperatorPair, eigen: &EigenPair) -> MeshInfo {
        MeshInfo {
            domain: domain.clone(),
            h: mesh.h(),
            nodes: mesh.node_count(),
            cells: mesh.cells().len(),
            interior_nodes: ops.interior().len(),
            eigen_iterations: eigen.iterations,
            eigen_residual: eigen.residual,
            eigen_density_residual: eigen.density_residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub m: MFunctionSpec,
    pub inner_mesh: MeshInfo,
    pub outer_mesh: MeshInfo,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    /// Also present, and serialized, within the flattened parameters.
    #[serde(skip)]
    pub mode: Mode,
    pub verdict: CertVerdict,
    pub failed: Vec<String>,
    #[serde(flatten)]
    pub params: CounterexampleParams,
    pub margins: Margins,
    /// The multiple sφ₁ pinned by touching at p̃: s = Aα.
    pub forced_s: f64,
    pub forced_residual: f64,
    pub solution_set: SolutionSet,
    /// Roots s with u̲ ≤ sφ₁ ≤ ū nodally.
    pub admissible_roots: Vec<f64>,
    pub touch_nodes: Vec<usize>,
    pub provenance: Provenance,
}

pub fn certify(cex: &Counterexample, m: &MFunctionSpec) -> Result<Certificate> {
    let p = &cex.params;
    let ops = &cex.inner.ops;
    let mesh = &cex.inner.mesh;
    let phi1 = &cex.inner.eigen.phi;
    let (lower, upper) = (cex.lower.values(), cex.upper.values());
    let upper_max = upper.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let touch_tol = TOUCH_TOL * upper_max;
    let pt = p.p_tilde;

    let strict = check_strict_inequalities(cex, m)?;
    let ordering = check_pair_ordering(cex)?;
    let comparison = comparison_margin(cex, m)?;
    let supersolution = check_weak_supersolution(&cex.upper, p.lambda_tau, ops)?;
    let boundary = mesh
        .boundary_mask()
        .iter()
        .enumerate()
        .filter(|&(_, &b)| b)
        .map(|(i, _)| lower[i].abs().max(upper[i].abs()))
        .fold(0.0_f64, f64::max);

    let forced_s = p.a_scale * p.alpha;
    let g_forced = eval_m(m, forced_s * forced_s * p.norm_phi1_sq)? * p.lambda1 - p.theta;
    let s_max = 2.0 * upper_max.max(forced_s);
    let solution_set = nonlocal_linear_solution_set(m, p.lambda1, p.norm_phi1_sq, p.theta, s_max)?;
    let slack = touch_tol;
    let admissible_roots: Vec<f64> = solution_set
        .roots
        .iter()
        .map(|r| r.s)
        .filter(|&s| {
            (0..mesh.node_count()).all(|i| {
                let v = s * phi1.values()[i];
                lower[i] <= v + slack && v <= upper[i] + slack
            })
        })
        .collect();

    use Relation::*;
    let mut checks = vec![
        MarginCheck::new("sub_strict", strict.sub, Gt, STRICT_MARGIN_TOL),
        MarginCheck::new("super_strict", strict.sup, Gt, STRICT_MARGIN_TOL),
        MarginCheck::new("ordering_min_gap", ordering.min_gap, Ge, -ORDERING_TOL),
        MarginCheck::new("touch_gap_at_p_tilde", (upper[pt] - lower[pt]).abs(), Le, touch_tol),
        MarginCheck::new("weak_supersolution_min", supersolution, Ge, -WEAK_SUPERSOLUTION_TOL),
        MarginCheck::new("comparison_strict", comparison, Gt, STRICT_MARGIN_TOL),
        MarginCheck::new("boundary_max_abs", boundary, Le, 0.0),
        MarginCheck::new("forced_value_residual", g_forced.abs(), Gt, FORCED_RESIDUAL_TOL * p.theta),
        MarginCheck::new("admissible_root_count", admissible_roots.len() as f64, Le, 0.0),
        MarginCheck::new("solution_set_degenerate", f64::from(u8::from(solution_set.degenerate)), Le, 0.0),
        MarginCheck::new("weak_cp_violation", lower[pt] - upper[pt], Gt, TOUCH_TOL),
        MarginCheck::new("alpha_window", (p.alpha - 1.0).min(p.alpha_upper - p.alpha), Gt, 0.0),
    ];
    let required: &[&str] = match p.mode {
        Mode::Ssm => &[
            "sub_strict",
            "super_strict",
            "ordering_min_gap",
            "touch_gap_at_p_tilde",
            "weak_supersolution_min",
            "boundary_max_abs",
            "forced_value_residual",
            "admissible_root_count",
            "solution_set_degenerate",
        ],
        Mode::StrongCp => &[
            "sub_strict",
            "super_strict",
            "comparison_strict",
            "ordering_min_gap",
            "touch_gap_at_p_tilde",
            "weak_supersolution_min",
            "boundary_max_abs",
        ],
        Mode::WeakCp => &["comparison_strict", "boundary_max_abs", "weak_cp_violation", "alpha_window"],
    };
    for c in &mut checks {
        c.required = required.contains(&c.name);
    }
    let failed: Vec<String> = checks.iter().filter(|c| c.required && !c.pass).map(|c| c.name.to_string()).collect();
    let verdict = if failed.is_empty() { CertVerdict::CertifiedFailure } else { CertVerdict::NotCertified };

    Ok(Certificate {
        mode: p.mode,
        verdict,
        failed,
        params: p.clone(),
        margins: Margins(checks),
        forced_s,
        forced_residual: g_forced.abs(),
        solution_set,
        admissible_roots,
        touch_nodes: ordering.touch_nodes,
        provenance: Provenance {
            m: m.clone(),
            inner_mesh: MeshInfo::of(&cex.inner.domain, &cex.inner.mesh, &cex.inner.ops, &cex.inner.eigen),
            outer_mesh: MeshInfo::of(&cex.outer.domain, &cex.outer.mesh, &cex.outer.ops, &cex.outer.eigen),
            tolerances: Tolerances::default(),
        },
    })
}

/// The reversed pair ℓ = t₂φ̂₁ > w = t₁φ̂₁ whose right-hand sides compare the
/// other way when M(t²)t fails to increase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NecessityReport {
    pub t1: f64,
    pub t2: f64,
    /// M(t₁²)t₁ and M(t₂²)t₂.
    pub products: [f64; 2],
    pub lambda1: f64,
    /// min over interior rows of (M(t₁²)t₁ − M(t₂²)t₂)(Kφ̂₁)_i/(Mm·1)_i.
    pub rhs_margin: f64,
    /// min over interior nodes of ℓ − w.
    pub ordering_margin: f64,
    /// min over interior rows of (Mm φ̂₁)_i/(Mm·1)_i.
    pub min_density: f64,
    pub degenerate: bool,
}

pub fn demonstrate_product_necessity(
    m: &MFunctionSpec,
    t1: f64,
    t2: f64,
    phi1: &EigenPair,
    ops: &OperatorPair,
) -> Result<NecessityReport> {
    if !(t1 > 0.0 && t2 > t1) {
        return Err(Error::PreconditionViolated(format!("need 0 < t1 < t2, got t1 = {t1}, t2 = {t2}")));
    }
    let p1 = eval_m(m, t1 * t1)? * t1;
    let p2 = eval_m(m, t2 * t2)? * t2;
    if !(p1 >= p2) {
        return Err(Error::PreconditionViolated(format!(
            "M(t²)t increases from {p1} at t1 = {t1} to {p2} at t2 = {t2}"
        )));
    }
    let norm = h1_norm_sq(&phi1.phi, ops)?.sqrt();
    let unit = phi1.phi.scaled(1.0 / norm);
    let ell = unit.scaled(t2);
    let w = unit.scaled(t1);
    let k_ell = ops.apply_stiffness(&ell)?;
    let k_w = ops.apply_stiffness(&w)?;
    // −M(‖ℓ‖²)Δℓ versus −M(‖w‖²)Δw with ‖ℓ‖ = t₂ and ‖w‖ = t₁.
    let (m_ell, m_w) = (eval_m(m, t2 * t2)?, eval_m(m, t1 * t1)?);
    let rhs_margin = density_min(ops, |i| m_w * k_w[i] - m_ell * k_ell[i]);
    let ordering_margin =
        ops.interior().iter().map(|&i| ell.values()[i] - w.values()[i]).fold(f64::INFINITY, f64::min);
    let mu = ops.apply_mass(&unit)?;
    let min_density = density_min(ops, |i| mu[i]);
    Ok(NecessityReport {
        t1,
        t2,
        products: [p1, p2],
        lambda1: phi1.lambda,
        rhs_margin,
        ordering_margin,
        min_density,
        degenerate: p1 == p2,
    })
}
