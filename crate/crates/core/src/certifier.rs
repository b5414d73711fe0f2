//! Exponential-stability certificates over the restricted signal class.
//!
//! Two sufficient tests are implemented. The exact-commutation test needs
//! `ρ e^{λm} < 1` and every commutator `E_ij^{p,q}` (unstable `i`, stable `j`,
//! `p, q ∈ {1, δ}`) to vanish. The approximate-commutation test replaces the
//! vanishing requirement by
//!
//! ```text
//! ρ e^{λm} + (Σ ζ_{p,q} ε_{p,q}) e^{λ(N(m+Δ-1)+1)} <= 1
//! ```
//!
//! Either one yields a bound `‖W‖ <= c e^{-λ|W|}` on admissible products.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{DerivedParams, IndexPartition, SwitchedFamily};

/// Smallest rate tried by [`best_lambda`].
pub const LAMBDA_FLOOR: f64 = 1e-9;
/// Bisection stops once the bracket is narrower than this.
pub const LAMBDA_RESOLUTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    CertifiedTheorem1,
    CertifiedTheorem2,
    NotCertified,
    AssumptionViolated,
}

impl Verdict {
    pub fn is_certified(self) -> bool {
        matches!(
            self,
            Verdict::CertifiedTheorem1 | Verdict::CertifiedTheorem2
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::CertifiedTheorem1 => "CertifiedTheorem1",
            Verdict::CertifiedTheorem2 => "CertifiedTheorem2",
            Verdict::NotCertified => "NotCertified",
            Verdict::AssumptionViolated => "AssumptionViolated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub lambda: f64,
    pub c: f64,
    pub m: u32,
    pub rho: f64,
    #[serde(rename = "M")]
    pub max_norm: f64,
    #[serde(rename = "K1")]
    pub k1: u32,
    #[serde(rename = "K2")]
    pub k2: u32,
    /// Left side of the approximate-commutation inequality; for the exact
    /// test this is `ρ e^{λm}`.
    pub lhs_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    /// Every intermediate value, in computation order. Serialized as an
    /// object keyed by label.
    #[serde(serialize_with = "ordered_map")]
    pub audit: Vec<(String, f64)>,
}

fn ordered_map<S: serde::Serializer>(
    entries: &[(String, f64)],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_map(entries.iter().map(|(k, v)| (k, v)))
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        self.verdict.is_certified()
    }

    pub fn audit_value(&self, label: &str) -> Option<f64> {
        self.audit.iter().find(|(l, _)| l == label).map(|(_, v)| *v)
    }
}

/// Supremum of rates with `ρ e^{λm} < 1`, i.e. `-ln(ρ) / m`.
pub fn lambda_max(rho: f64, m: u32) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rho must lie in (0, 1), got {rho}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    Ok(-rho.ln() / f64::from(m))
}

/// Threshold below which a commutator norm counts as zero.
pub fn default_zero_tolerance(max_norm: f64, min_dwell: u32) -> f64 {
    1e-12 * max_norm.powi(2 * min_dwell as i32).max(1.0)
}

/// `N(m + Δ - 1) + 1`, the product length covered by the induction basis.
pub fn basis_length(n: usize, m: u32, max_dwell: u32) -> u32 {
    n as u32 * (m + max_dwell - 1) + 1
}

/// `c = max(1, (M e^λ)^L)` with `L = N(m + Δ - 1) + 1`.
///
/// Any product obeys `‖W‖ <= M^{|W|}`, so `‖W‖ e^{λ|W|} <= (M e^λ)^{|W|}`,
/// which is at most `c` for every `|W| <= L`.
pub fn overshoot_constant(
    max_norm: f64,
    lambda: f64,
    n: usize,
    m: u32,
    max_dwell: u32,
) -> Result<f64> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    let len = basis_length(n, m, max_dwell);
    let growth = max_norm * lambda.exp();
    if growth <= 1.0 {
        return Ok(1.0);
    }
    let c = growth.powi(len as i32);
    if !c.is_finite() {
        return Err(Error::Overflow {
            base: growth,
            exponent: len,
        });
    }
    Ok(c)
}

/// `Σ ζ_{p,q} ε_{p,q} · e^{λ(N(m+Δ-1)+1)} + ρ e^{λm}`.
pub fn theorem2_lhs(dp: &DerivedParams, n: usize, max_dwell: u32, lambda: f64) -> f64 {
    let contraction = dp.rho * (lambda * f64::from(dp.m)).exp();
    let exchange = dp.zeta.dot(&dp.eps);
    let window = (lambda * f64::from(basis_length(n, dp.m, max_dwell))).exp();
    contraction + exchange * window
}

fn check_preconditions(part: &IndexPartition, dp: &DerivedParams, lambda: f64) -> Result<()> {
    if part.stable.is_empty() {
        return Err(Error::AssumptionViolated(
            "no Schur stable subsystem; the restricted signal class is empty".into(),
        ));
    }
    if dp.rho.is_nan() || dp.rho >= 1.0 {
        return Err(Error::AssumptionViolated(format!(
            "rho = {} is not below 1",
            dp.rho
        )));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    Ok(())
}

struct Draft<'a> {
    fam: &'a SwitchedFamily,
    dp: &'a DerivedParams,
    lambda: f64,
    audit: Vec<(String, f64)>,
}

impl<'a> Draft<'a> {
    fn new(fam: &'a SwitchedFamily, dp: &'a DerivedParams, lambda: f64) -> Self {
        let mut audit = Vec::new();
        let mut push = |l: &str, v: f64| audit.push((l.to_string(), v));
        push("N", fam.len() as f64);
        push("delta", f64::from(fam.min_dwell()));
        push("Delta", f64::from(fam.max_dwell()));
        push("M", dp.max_norm);
        push("m", f64::from(dp.m));
        push("rho", dp.rho);
        push("K1", f64::from(dp.k1));
        push("K2", f64::from(dp.k2));
        push("lambda", lambda);
        if let Ok(lmax) = lambda_max(dp.rho, dp.m) {
            push("lambda_max", lmax);
        }
        push(
            "rho_exp_lambda_m",
            dp.rho * (lambda * f64::from(dp.m)).exp(),
        );
        Self {
            fam,
            dp,
            lambda,
            audit,
        }
    }

    fn push(&mut self, label: &str, value: f64) {
        self.audit.push((label.to_string(), value));
    }

    fn finish(
        mut self,
        verdict: Verdict,
        lhs_value: f64,
        failure: Option<String>,
    ) -> Result<Certificate> {
        let c = overshoot_constant(
            self.dp.max_norm,
            self.lambda,
            self.fam.len(),
            self.dp.m,
            self.fam.max_dwell(),
        )?;
        self.push(
            "L",
            f64::from(basis_length(
                self.fam.len(),
                self.dp.m,
                self.fam.max_dwell(),
            )),
        );
        self.push("c", c);
        Ok(Certificate {
            verdict,
            lambda: self.lambda,
            c,
            m: self.dp.m,
            rho: self.dp.rho,
            max_norm: self.dp.max_norm,
            k1: self.dp.k1,
            k2: self.dp.k2,
            lhs_value,
            failure,
            audit: self.audit,
        })
    }
}

/// Exact-commutation test. Commutators with norm at most `tol_zero` count as
/// vanishing; with no unstable subsystem the commutator condition is vacuous.
pub fn check_theorem1(
    fam: &SwitchedFamily,
    part: &IndexPartition,
    dp: &DerivedParams,
    lambda: f64,
    tol_zero: f64,
) -> Result<Certificate> {
    check_preconditions(part, dp, lambda)?;
    let mut draft = Draft::new(fam, dp, lambda);
    let contraction = dp.rho * (lambda * f64::from(dp.m)).exp();
    let largest = dp.eps.max();
    draft.push("tol_zero", tol_zero);
    draft.push("max_commutator_norm", largest);

    let failure = if contraction >= 1.0 {
        Some(format!("rho*exp(lambda*m) = {contraction} is not below 1"))
    } else if !part.unstable.is_empty() && largest > tol_zero {
        Some(format!(
            "largest commutator norm {largest:e} exceeds tol_zero {tol_zero:e}"
        ))
    } else {
        None
    };
    let verdict = match failure {
        None => Verdict::CertifiedTheorem1,
        Some(_) => Verdict::NotCertified,
    };
    draft.finish(verdict, contraction, failure)
}

/// Approximate-commutation test with `ε_{p,q}` taken from `dp.eps`.
pub fn check_theorem2(
    fam: &SwitchedFamily,
    part: &IndexPartition,
    dp: &DerivedParams,
    lambda: f64,
) -> Result<Certificate> {
    check_preconditions(part, dp, lambda)?;
    let mut draft = Draft::new(fam, dp, lambda);
    let labels = ["delta_delta", "one_delta", "delta_one", "one_one"];
    for (label, v) in labels.iter().zip(dp.zeta.entries()) {
        draft.push(&format!("zeta_{label}"), v);
    }
    for (label, v) in labels.iter().zip(dp.eps.entries()) {
        draft.push(&format!("eps_{label}"), v);
    }
    let window = (lambda * f64::from(basis_length(fam.len(), dp.m, fam.max_dwell()))).exp();
    draft.push("exchange_sum", dp.zeta.dot(&dp.eps));
    draft.push("exp_lambda_window", window);

    let contraction = dp.rho * (lambda * f64::from(dp.m)).exp();
    let lhs = theorem2_lhs(dp, fam.len(), fam.max_dwell(), lambda);
    draft.push("lhs", lhs);

    let failure = if contraction >= 1.0 {
        Some(format!("rho*exp(lambda*m) = {contraction} is not below 1"))
    } else if lhs > 1.0 {
        Some(format!("inequality left side {lhs} exceeds 1"))
    } else {
        None
    };
    let verdict = match failure {
        None => Verdict::CertifiedTheorem2,
        Some(_) => Verdict::NotCertified,
    };
    draft.finish(verdict, lhs, failure)
}

/// Largest rate (to within [`LAMBDA_RESOLUTION`]) accepted by
/// [`check_theorem2`]. The left side is strictly increasing in `λ`, so the
/// feasible set is an interval starting at zero and bisection applies.
pub fn best_lambda(
    fam: &SwitchedFamily,
    part: &IndexPartition,
    dp: &DerivedParams,
) -> Result<Certificate> {
    check_preconditions(part, dp, LAMBDA_FLOOR)?;
    let upper = lambda_max(dp.rho, dp.m)?;
    let feasible = |lambda: f64| {
        dp.rho * (lambda * f64::from(dp.m)).exp() < 1.0
            && theorem2_lhs(dp, fam.len(), fam.max_dwell(), lambda) <= 1.0
    };
    if upper <= LAMBDA_FLOOR || !feasible(LAMBDA_FLOOR) {
        return check_theorem2(fam, part, dp, LAMBDA_FLOOR);
    }
    let (mut lo, mut hi) = (LAMBDA_FLOOR, upper);
    while hi - lo > LAMBDA_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    check_theorem2(fam, part, dp, lo)
}

/// Exact test first, approximate test as fallback. Without a rate the
/// largest rate accepted by the approximate test is used.
pub fn certify(
    fam: &SwitchedFamily,
    part: &IndexPartition,
    dp: &DerivedParams,
    lambda: Option<f64>,
) -> Result<Certificate> {
    let lambda = match lambda {
        Some(l) => l,
        None => {
            let best = best_lambda(fam, part, dp)?;
            if !best.is_certified() {
                return Ok(best);
            }
            best.lambda
        }
    };
    let tol = default_zero_tolerance(dp.max_norm, fam.min_dwell());
    let first = check_theorem1(fam, part, dp, lambda, tol)?;
    if first.is_certified() {
        return Ok(first);
    }
    check_theorem2(fam, part, dp, lambda)
}
