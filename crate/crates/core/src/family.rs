//! The subsystem family and every scalar the certificate conditions consume.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{commutator, Matrix};

/// Spectral radii at or above `1 - SCHUR_MARGIN` count as not Schur stable.
pub const SCHUR_MARGIN: f64 = 1e-9;

/// Lower clamp for `rho`, keeping `-ln(rho)` finite when every stable
/// subsystem is nilpotent by its `m`-th power.
pub const RHO_FLOOR: f64 = 1e-12;

/// Subsystem matrices `A_1..A_N` together with the admissible dwell window.
///
/// Subsystem indices are 0-based in the API; anything rendered for people
/// (JSON, CSV, tables) adds one.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedFamily {
    matrices: Vec<Matrix>,
    min_dwell: u32,
    max_dwell: u32,
}

impl SwitchedFamily {
    pub fn new(matrices: Vec<Matrix>, min_dwell: u32, max_dwell: u32) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidFamily("at least one matrix is required".into()))?;
        let dim = first.dim();
        if let Some((i, m)) = matrices.iter().enumerate().find(|(_, m)| m.dim() != dim) {
            return Err(Error::InvalidFamily(format!(
                "matrix {} is {}x{}, expected {dim}x{dim}",
                i + 1,
                m.dim(),
                m.dim()
            )));
        }
        if min_dwell == 0 {
            return Err(Error::InvalidFamily(
                "minimum dwell must be at least 1".into(),
            ));
        }
        if min_dwell >= max_dwell {
            return Err(Error::InvalidFamily(format!(
                "minimum dwell {min_dwell} must be strictly below maximum dwell {max_dwell}"
            )));
        }
        Ok(Self {
            matrices,
            min_dwell,
            max_dwell,
        })
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn matrix(&self, index: usize) -> &Matrix {
        &self.matrices[index]
    }

    /// Number of subsystems `N`.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// State dimension `d`.
    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    /// `δ`
    pub fn min_dwell(&self) -> u32 {
        self.min_dwell
    }

    /// `Δ`
    pub fn max_dwell(&self) -> u32 {
        self.max_dwell
    }

    /// `M = max_i ‖A_i‖`.
    pub fn max_norm(&self) -> Result<f64> {
        self.matrices
            .iter()
            .try_fold(0.0f64, |acc, m| Ok(acc.max(m.spectral_norm()?)))
    }
}

/// Split of the index set into Schur stable and unstable subsystems.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexPartition {
    pub stable: Vec<usize>,
    pub unstable: Vec<usize>,
}

impl IndexPartition {
    pub fn is_stable(&self, index: usize) -> bool {
        self.stable.binary_search(&index).is_ok()
    }
}

pub fn spectral_radii(fam: &SwitchedFamily) -> Result<Vec<f64>> {
    fam.matrices().iter().map(Matrix::spectral_radius).collect()
}

pub fn classify(fam: &SwitchedFamily) -> Result<IndexPartition> {
    let mut part = IndexPartition {
        stable: Vec::new(),
        unstable: Vec::new(),
    };
    for (i, r) in spectral_radii(fam)?.into_iter().enumerate() {
        if r < 1.0 - SCHUR_MARGIN {
            part.stable.push(i);
        } else {
            part.unstable.push(i);
        }
    }
    Ok(part)
}

/// Smallest `m` in `[δ, Δ]` such that `‖A_j^n‖ < 1` for every stable `j` and
/// every `n` in `[m, Δ]`, and `ρ`, the largest of those norms.
pub fn find_m_rho(fam: &SwitchedFamily, part: &IndexPartition) -> Result<(u32, f64)> {
    if part.stable.is_empty() {
        return Err(Error::AssumptionViolated(
            "no Schur stable subsystem; the restricted signal class is empty".into(),
        ));
    }
    let (lo, hi) = (fam.min_dwell(), fam.max_dwell());
    // worst[n - lo] = max_j ‖A_j^n‖
    let mut worst = vec![0.0f64; (hi - lo + 1) as usize];
    for &j in &part.stable {
        let a = fam.matrix(j);
        let mut power = a.pow(lo);
        for n in lo..=hi {
            if n > lo {
                power = power.mul(a)?;
            }
            let slot = &mut worst[(n - lo) as usize];
            *slot = slot.max(power.spectral_norm()?);
        }
    }

    let mut m = None;
    let mut rho = 0.0f64;
    for n in (lo..=hi).rev() {
        let w = worst[(n - lo) as usize];
        if w >= 1.0 {
            break;
        }
        rho = rho.max(w);
        m = Some(n);
    }
    match m {
        Some(m) => Ok((m, rho.max(RHO_FLOOR))),
        None => Err(Error::AssumptionViolated(format!(
            "max over stable subsystems of ‖A^{hi}‖ is {:.6} >= 1; no dwell m in [{lo}, {hi}] is contractive",
            worst[(hi - lo) as usize]
        ))),
    }
}

/// One value per exponent pair `(p, q)` with `p, q ∈ {1, δ}`; `p` is the power
/// on the unstable matrix and `q` the power on the stable one.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PairTable {
    pub delta_delta: f64,
    pub one_delta: f64,
    pub delta_one: f64,
    pub one_one: f64,
}

impl PairTable {
    /// Entries in the order (δ,δ), (1,δ), (δ,1), (1,1).
    pub fn entries(&self) -> [f64; 4] {
        [
            self.delta_delta,
            self.one_delta,
            self.delta_one,
            self.one_one,
        ]
    }

    pub fn exponents(delta: u32) -> [(u32, u32); 4] {
        [(delta, delta), (1, delta), (delta, 1), (1, 1)]
    }

    fn entry_mut(&mut self, slot: usize) -> &mut f64 {
        match slot {
            0 => &mut self.delta_delta,
            1 => &mut self.one_delta,
            2 => &mut self.delta_one,
            _ => &mut self.one_one,
        }
    }

    pub fn dot(&self, other: &PairTable) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn max(&self) -> f64 {
        self.entries().into_iter().fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> PairTable {
        PairTable {
            delta_delta: f(self.delta_delta),
            one_delta: f(self.one_delta),
            delta_one: f(self.delta_one),
            one_one: f(self.one_one),
        }
    }
}

/// Exchange-term weights `ζ_{p,q}(δ, Δ)`.
pub fn zeta_table(
    max_norm: f64,
    n: usize,
    m: u32,
    min_dwell: u32,
    max_dwell: u32,
) -> Result<PairTable> {
    if n == 0 || m == 0 || min_dwell == 0 || max_dwell == 0 || max_norm.is_nan() || max_norm < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "zeta weights need positive inputs (M = {max_norm}, N = {n}, m = {m}, δ = {min_dwell}, Δ = {max_dwell})"
        )));
    }
    if m < min_dwell {
        return Err(Error::InvalidArgument(format!(
            "m = {m} is below the minimum dwell {min_dwell}"
        )));
    }
    let k1 = m / min_dwell;
    let k2 = max_dwell / min_dwell;
    let m_rest = m - k1 * min_dwell;
    let dwell_rest = max_dwell - k2 * min_dwell;

    let base = (n as u32 - 1) * (m + max_dwell - 1);
    let span = m + max_dwell;
    let weighted = |count: u32, exponent: u32| -> Result<f64> {
        if count == 0 {
            return Ok(0.0);
        }
        let power = max_norm.powi(exponent as i32);
        let value = f64::from(count) * power;
        if !value.is_finite() {
            return Err(Error::Overflow {
                base: max_norm,
                exponent,
            });
        }
        Ok(value)
    };
    Ok(PairTable {
        delta_delta: weighted(k1 * k2, base + span - 2 * min_dwell)?,
        one_delta: weighted(k1 * dwell_rest, base + span - min_dwell - 1)?,
        delta_one: weighted(m_rest * k2, base + span - min_dwell - 1)?,
        one_one: weighted(m_rest * dwell_rest, base + span - 2)?,
    })
}

/// `‖E_ij^{p,q}‖` for one unstable `i`, stable `j` and exponent pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommutatorNorm {
    pub unstable: usize,
    pub stable: usize,
    pub p: u32,
    pub q: u32,
    pub norm: f64,
}

pub fn commutator_norms(
    fam: &SwitchedFamily,
    part: &IndexPartition,
) -> Result<Vec<CommutatorNorm>> {
    let mut out = Vec::with_capacity(part.unstable.len() * part.stable.len() * 4);
    for &i in &part.unstable {
        for &j in &part.stable {
            for (p, q) in PairTable::exponents(fam.min_dwell()) {
                let e = commutator(fam.matrix(i), p, fam.matrix(j), q)?;
                out.push(CommutatorNorm {
                    unstable: i,
                    stable: j,
                    p,
                    q,
                    norm: e.spectral_norm()?,
                });
            }
        }
    }
    Ok(out)
}

/// Tightest `ε_{p,q}`: the largest commutator norm over unstable/stable pairs.
/// All zero when either side of the partition is empty.
pub fn eps_table(fam: &SwitchedFamily, part: &IndexPartition) -> Result<PairTable> {
    let mut table = PairTable::default();
    for (k, c) in commutator_norms(fam, part)?.into_iter().enumerate() {
        let slot = table.entry_mut(k % 4);
        *slot = slot.max(c.norm);
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedParams {
    /// `M`
    pub max_norm: f64,
    pub m: u32,
    pub rho: f64,
    pub k1: u32,
    pub k2: u32,
    pub zeta: PairTable,
    pub eps: PairTable,
}

impl DerivedParams {
    pub fn derive(fam: &SwitchedFamily, part: &IndexPartition) -> Result<Self> {
        let (m, rho) = find_m_rho(fam, part)?;
        let max_norm = fam.max_norm()?;
        Ok(Self {
            max_norm,
            m,
            rho,
            k1: m / fam.min_dwell(),
            k2: fam.max_dwell() / fam.min_dwell(),
            zeta: zeta_table(max_norm, fam.len(), m, fam.min_dwell(), fam.max_dwell())?,
            eps: eps_table(fam, part)?,
        })
    }
}
