//! Balance-sheet network: institutions, cross-holdings, book equity, shocks.
//!
//! An institution's balance sheet splits into an external part (claims on
//! and obligations to entities outside the network) and an internal part
//! (debt claims on other institutions in the network). Internal positions
//! are stored as a holdings matrix: entry `(i, j)` is the face value of
//! debt issued by `j` and held by `i`. Internal liabilities are implicit,
//! institution `j` owes the column total `sum_i holdings[i][j]`.
//!
//! Book equity is the face-value balance:
//!
//! ```text
//! E_i = external_assets_i + sum_j holdings[i][j]
//!     - external_liabilities_i - sum_j holdings[j][i]
//! ```
//!
//! Liabilities are carried at face value throughout; revaluation under
//! stress touches only the asset side.

use std::fmt;

use thiserror::Error;

/// One node of the network. Funds are flagged for reporting and for the
/// synthetic generator's concentration targets; the valuation dynamics
/// treat funds and banks identically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Institution {
    pub id: String,
    pub is_fund: bool,
}

impl Institution {
    pub fn bank(id: impl Into<String>) -> Self {
        Institution { id: id.into(), is_fund: false }
    }

    pub fn fund(id: impl Into<String>) -> Self {
        Institution { id: id.into(), is_fund: true }
    }
}

/// Equity levels per institution, in currency units. Negative entries are
/// meaningful (insolvency depth) and are carried unmodified.
#[derive(Debug, Clone, PartialEq)]
pub struct EquityVector(Vec<f64>);

impl EquityVector {
    pub fn new(values: Vec<f64>) -> Self {
        EquityVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// `sum_i |E_i|`.
    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|x| x.abs()).sum()
    }

    /// `max_i |E_i - other_i|`. Panics if lengths differ.
    pub fn max_abs_diff(&self, other: &EquityVector) -> f64 {
        assert_eq!(self.len(), other.len(), "equity vector length mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// True when every entry is `<=` the corresponding entry of `other`.
    pub fn le(&self, other: &EquityVector) -> bool {
        assert_eq!(self.len(), other.len(), "equity vector length mismatch");
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl std::ops::Index<usize> for EquityVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for EquityVector {
    fn from(values: Vec<f64>) -> Self {
        EquityVector(values)
    }
}

/// Proportional devaluation of external assets: each institution's
/// external assets are scaled by `1 - a_i` with `a_i` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockScenario {
    magnitudes: Magnitudes,
}

#[derive(Debug, Clone, PartialEq)]
enum Magnitudes {
    Uniform(f64),
    PerInstitution(Vec<f64>),
}

impl ShockScenario {
    /// The same devaluation fraction for every institution.
    pub fn uniform(a: f64) -> Result<Self, NetworkError> {
        check_magnitude(a)?;
        Ok(ShockScenario { magnitudes: Magnitudes::Uniform(a) })
    }

    /// A separate devaluation fraction per institution.
    pub fn per_institution(a: Vec<f64>) -> Result<Self, NetworkError> {
        for &x in &a {
            check_magnitude(x)?;
        }
        Ok(ShockScenario { magnitudes: Magnitudes::PerInstitution(a) })
    }

    fn magnitude(&self, i: usize) -> f64 {
        match &self.magnitudes {
            Magnitudes::Uniform(a) => *a,
            Magnitudes::PerInstitution(v) => v[i],
        }
    }

    fn len(&self) -> Option<usize> {
        match &self.magnitudes {
            Magnitudes::Uniform(_) => None,
            Magnitudes::PerInstitution(v) => Some(v.len()),
        }
    }
}

fn check_magnitude(a: f64) -> Result<(), NetworkError> {
    if !a.is_finite() || !(0.0..=1.0).contains(&a) {
        return Err(NetworkError::ShockOutOfRange { magnitude: a });
    }
    Ok(())
}

/// A single structural violation found while checking raw network data.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Empty,
    DimensionMismatch { what: String, expected: usize, got: usize },
    DuplicateId { id: String },
    BlankId { index: usize },
    NegativeExternalAssets { id: String, value: f64 },
    NegativeExternalLiabilities { id: String, value: f64 },
    NegativeHolding { holder: String, issuer: String, value: f64 },
    SelfHolding { id: String, value: f64 },
    NonFinite { where_: String, value: f64 },
    UnknownInstitution { id: String, role: &'static str },
    DuplicateHolding { holder: String, issuer: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "network has no institutions"),
            Violation::DimensionMismatch { what, expected, got } => {
                write!(f, "{what}: expected length {expected}, got {got}")
            }
            Violation::DuplicateId { id } => write!(f, "duplicate institution id '{id}'"),
            Violation::BlankId { index } => write!(f, "institution {index} has a blank id"),
            Violation::NegativeExternalAssets { id, value } => {
                write!(f, "institution '{id}' has negative external assets ({value})")
            }
            Violation::NegativeExternalLiabilities { id, value } => {
                write!(f, "institution '{id}' has negative external liabilities ({value})")
            }
            Violation::NegativeHolding { holder, issuer, value } => {
                write!(f, "negative holding: '{holder}' holds {value} of '{issuer}'")
            }
            Violation::SelfHolding { id, value } => {
                write!(f, "institution '{id}' holds its own debt ({value})")
            }
            Violation::NonFinite { where_, value } => {
                write!(f, "non-finite value {value} in {where_}")
            }
            Violation::UnknownInstitution { id, role } => {
                write!(f, "holding references unknown {role} '{id}'")
            }
            Violation::DuplicateHolding { holder, issuer } => {
                write!(f, "duplicate holding for pair ('{holder}', '{issuer}')")
            }
        }
    }
}

/// Result of structural validation. Empty means the data is admissible.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "network is valid");
        }
        writeln!(f, "{} violation(s):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid network: {report}")]
    Invalid { report: ValidationReport },
    #[error("shock magnitude {magnitude} outside [0, 1]")]
    ShockOutOfRange { magnitude: f64 },
    #[error("shock vector has length {got}, network has {expected} institutions")]
    ShockLengthMismatch { expected: usize, got: usize },
}

/// Checks raw balance-sheet data for structural admissibility and reports
/// every violation found, not just the first.
pub fn validate_parts(
    institutions: &[Institution],
    external_assets: &[f64],
    external_liabilities: &[f64],
    holdings: &[Vec<f64>],
) -> ValidationReport {
    let mut violations = Vec::new();
    let n = institutions.len();

    if n == 0 {
        violations.push(Violation::Empty);
    }
    if external_assets.len() != n {
        violations.push(Violation::DimensionMismatch {
            what: "external assets".into(),
            expected: n,
            got: external_assets.len(),
        });
    }
    if external_liabilities.len() != n {
        violations.push(Violation::DimensionMismatch {
            what: "external liabilities".into(),
            expected: n,
            got: external_liabilities.len(),
        });
    }
    if holdings.len() != n {
        violations.push(Violation::DimensionMismatch {
            what: "holdings matrix rows".into(),
            expected: n,
            got: holdings.len(),
        });
    }
    for (i, row) in holdings.iter().enumerate() {
        if row.len() != n {
            violations.push(Violation::DimensionMismatch {
                what: format!("holdings matrix row {i}"),
                expected: n,
                got: row.len(),
            });
        }
    }

    let mut seen = std::collections::HashSet::new();
    for (i, inst) in institutions.iter().enumerate() {
        if inst.id.trim().is_empty() {
            violations.push(Violation::BlankId { index: i });
        } else if !seen.insert(inst.id.as_str()) {
            violations.push(Violation::DuplicateId { id: inst.id.clone() });
        }
    }

    let id_of = |i: usize| -> String {
        institutions.get(i).map(|inst| inst.id.clone()).unwrap_or_else(|| format!("#{i}"))
    };

    for (i, &x) in external_assets.iter().enumerate() {
        if !x.is_finite() {
            violations.push(Violation::NonFinite { where_: format!("external assets of '{}'", id_of(i)), value: x });
        } else if x < 0.0 {
            violations.push(Violation::NegativeExternalAssets { id: id_of(i), value: x });
        }
    }
    for (i, &x) in external_liabilities.iter().enumerate() {
        if !x.is_finite() {
            violations.push(Violation::NonFinite { where_: format!("external liabilities of '{}'", id_of(i)), value: x });
        } else if x < 0.0 {
            violations.push(Violation::NegativeExternalLiabilities { id: id_of(i), value: x });
        }
    }
    for (i, row) in holdings.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if !x.is_finite() {
                violations.push(Violation::NonFinite {
                    where_: format!("holding of '{}' on '{}'", id_of(i), id_of(j)),
                    value: x,
                });
            } else if i == j && x != 0.0 {
                violations.push(Violation::SelfHolding { id: id_of(i), value: x });
            } else if x < 0.0 {
                violations.push(Violation::NegativeHolding {
                    holder: id_of(i),
                    issuer: id_of(j),
                    value: x,
                });
            }
        }
    }

    ValidationReport { violations }
}

/// A validated balance-sheet network. Construction rejects structurally
/// inadmissible data, so every instance satisfies: nonnegative entries,
/// zero holdings diagonal, consistent dimensions, unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct FinancialNetwork {
    institutions: Vec<Institution>,
    external_assets: Vec<f64>,
    external_liabilities: Vec<f64>,
    // Row-major n x n; entry (i, j) is the claim of holder i on issuer j.
    internal: Vec<f64>,
    n: usize,
}

impl FinancialNetwork {
    pub fn from_parts(
        institutions: Vec<Institution>,
        external_assets: Vec<f64>,
        external_liabilities: Vec<f64>,
        holdings: Vec<Vec<f64>>,
    ) -> Result<Self, NetworkError> {
        let report = validate_parts(&institutions, &external_assets, &external_liabilities, &holdings);
        if !report.is_valid() {
            return Err(NetworkError::Invalid { report });
        }
        let n = institutions.len();
        let mut internal = Vec::with_capacity(n * n);
        for row in &holdings {
            internal.extend_from_slice(row);
        }
        Ok(FinancialNetwork { institutions, external_assets, external_liabilities, internal, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn institutions(&self) -> &[Institution] {
        &self.institutions
    }

    pub fn institution(&self, i: usize) -> &Institution {
        &self.institutions[i]
    }

    /// Index of the institution with the given id, if present.
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.institutions.iter().position(|inst| inst.id == id)
    }

    pub fn external_assets(&self) -> &[f64] {
        &self.external_assets
    }

    pub fn external_liabilities(&self) -> &[f64] {
        &self.external_liabilities
    }

    /// Face value of debt issued by `issuer` and held by `holder`.
    pub fn holding(&self, holder: usize, issuer: usize) -> f64 {
        self.internal[holder * self.n + issuer]
    }

    /// Claims of `holder` on every issuer, indexed by issuer.
    pub fn holdings_row(&self, holder: usize) -> &[f64] {
        &self.internal[holder * self.n..(holder + 1) * self.n]
    }

    /// `sum_j holdings[i][j]` per institution i.
    pub fn internal_asset_totals(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.holdings_row(i).iter().sum()).collect()
    }

    /// `sum_i holdings[i][j]` per institution j.
    pub fn internal_liability_totals(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.n];
        for i in 0..self.n {
            let row = self.holdings_row(i);
            for (j, t) in totals.iter_mut().enumerate() {
                *t += row[j];
            }
        }
        totals
    }

    /// External plus internal liabilities per institution. Liabilities sit
    /// at face value, so this is invariant under shocks and revaluation.
    pub fn total_liabilities(&self) -> Vec<f64> {
        let internal = self.internal_liability_totals();
        self.external_liabilities
            .iter()
            .zip(internal)
            .map(|(ext, int)| ext + int)
            .collect()
    }

    /// Face-value equity `E_i = A^e_i + sum_j holdings[i][j] - L^e_i - sum_j holdings[j][i]`.
    pub fn book_equity(&self) -> EquityVector {
        // Accumulation order (external net, then holdings in row order, then
        // internal liabilities) matches the solver map, so an unshocked
        // network is bitwise a fixed point.
        let internal_liab = self.internal_liability_totals();
        let mut equity = Vec::with_capacity(self.n);
        for (i, liab) in internal_liab.iter().enumerate() {
            let mut acc = self.external_assets[i] - self.external_liabilities[i];
            for &h in self.holdings_row(i) {
                acc += h;
            }
            acc -= liab;
            equity.push(acc);
        }
        EquityVector(equity)
    }

    /// Assets implied by an equity level: `A_i = E_i + total_liabilities_i`.
    /// Holds at any point of a revaluation because liabilities stay at face
    /// value. Panics if `equity` has the wrong length.
    pub fn current_assets(&self, equity: &EquityVector) -> Vec<f64> {
        assert_eq!(equity.len(), self.n, "equity vector length mismatch");
        self.total_liabilities()
            .iter()
            .zip(equity.iter())
            .map(|(l, e)| e + l)
            .collect()
    }

    /// Returns a new network with external assets scaled by `1 - a_i`.
    /// Internal holdings and all liabilities are untouched.
    pub fn apply_shock(&self, scenario: &ShockScenario) -> Result<FinancialNetwork, NetworkError> {
        if let Some(len) = scenario.len() {
            if len != self.n {
                return Err(NetworkError::ShockLengthMismatch { expected: self.n, got: len });
            }
        }
        let mut shocked = self.clone();
        for (i, x) in shocked.external_assets.iter_mut().enumerate() {
            *x *= 1.0 - scenario.magnitude(i);
        }
        Ok(shocked)
    }

    /// Re-checks the construction invariants. Always empty for a network
    /// built through [`FinancialNetwork::from_parts`]; exposed so callers
    /// can produce a report for diagnostics.
    pub fn validate(&self) -> ValidationReport {
        let rows: Vec<Vec<f64>> = (0..self.n).map(|i| self.holdings_row(i).to_vec()).collect();
        validate_parts(&self.institutions, &self.external_assets, &self.external_liabilities, &rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::random_network;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_bank_network() -> FinancialNetwork {
        // Bank 0 holds 20 of bank 1's debt; nobody holds bank 0's debt.
        FinancialNetwork::from_parts(
            vec![Institution::bank("A"), Institution::bank("B")],
            vec![100.0, 100.0],
            vec![80.0, 70.0],
            vec![vec![0.0, 20.0], vec![0.0, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn book_equity_single_institution() {
        let net = FinancialNetwork::from_parts(
            vec![Institution::bank("solo")],
            vec![100.0],
            vec![90.0],
            vec![vec![0.0]],
        )
        .unwrap();
        assert_eq!(net.book_equity().as_slice(), &[10.0]);
    }

    #[test]
    fn book_equity_two_bank_cross_holding() {
        let net = two_bank_network();
        assert_eq!(net.book_equity().as_slice(), &[40.0, 10.0]);
    }

    #[test]
    fn book_equity_all_zero_network() {
        let net = FinancialNetwork::from_parts(
            vec![Institution::bank("a"), Institution::bank("b"), Institution::bank("c")],
            vec![0.0; 3],
            vec![0.0; 3],
            vec![vec![0.0; 3]; 3],
        )
        .unwrap();
        assert_eq!(net.book_equity().as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn current_assets_at_book_equity_returns_total_assets() {
        let net = FinancialNetwork::from_parts(
            vec![Institution::bank("solo")],
            vec![100.0],
            vec![90.0],
            vec![vec![0.0]],
        )
        .unwrap();
        let assets = net.current_assets(&net.book_equity());
        assert_eq!(assets, vec![100.0]);

        let net = two_bank_network();
        let assets = net.current_assets(&net.book_equity());
        // A = E + L: bank 0 owes 80 external, bank 1 owes 70 external + 20 internal.
        assert_eq!(assets, vec![120.0, 100.0]);
    }

    #[test]
    fn current_assets_equal_external_plus_internal_at_book_equity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = 1 + rng.gen_range(0..8);
            let net = random_network(&mut rng, n);
            let assets = net.current_assets(&net.book_equity());
            let internal = net.internal_asset_totals();
            for i in 0..net.n() {
                let direct = net.external_assets()[i] + internal[i];
                assert!(
                    (assets[i] - direct).abs() <= 1e-9 * direct.abs().max(1.0),
                    "institution {i}: {} vs {}",
                    assets[i],
                    direct
                );
            }
        }
    }

    #[test]
    fn apply_shock_zero_is_identity() {
        let net = two_bank_network();
        let shocked = net.apply_shock(&ShockScenario::uniform(0.0).unwrap()).unwrap();
        assert_eq!(shocked, net);
    }

    #[test]
    fn apply_shock_one_wipes_external_assets() {
        let net = two_bank_network();
        let shocked = net.apply_shock(&ShockScenario::uniform(1.0).unwrap()).unwrap();
        assert_eq!(shocked.external_assets(), &[0.0, 0.0]);
        assert_eq!(shocked.external_liabilities(), net.external_liabilities());
        assert_eq!(shocked.holding(0, 1), 20.0);
    }

    #[test]
    fn apply_shock_scales_external_assets_only() {
        let net = FinancialNetwork::from_parts(
            vec![Institution::bank("x")],
            vec![100.0],
            vec![20.0],
            vec![vec![0.0]],
        )
        .unwrap();
        let shocked = net.apply_shock(&ShockScenario::uniform(0.07).unwrap()).unwrap();
        assert_eq!(shocked.external_assets(), &[93.0]);
        assert_eq!(shocked.external_liabilities(), &[20.0]);
    }

    #[test]
    fn shock_magnitudes_outside_unit_interval_are_rejected() {
        assert!(ShockScenario::uniform(-0.1).is_err());
        assert!(ShockScenario::uniform(1.2).is_err());
        assert!(ShockScenario::uniform(f64::NAN).is_err());
        assert!(ShockScenario::per_institution(vec![0.5, 1.5]).is_err());
        assert!(ShockScenario::uniform(0.0).is_ok());
        assert!(ShockScenario::uniform(1.0).is_ok());
    }

    #[test]
    fn shock_vector_length_must_match_network() {
        let net = two_bank_network();
        let scenario = ShockScenario::per_institution(vec![0.1, 0.2, 0.3]).unwrap();
        assert!(matches!(
            net.apply_shock(&scenario),
            Err(NetworkError::ShockLengthMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn successive_shocks_compose_multiplicatively() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = 1 + rng.gen_range(0..6);
            let net = random_network(&mut rng, n);
            let a: f64 = rng.gen_range(0.0..1.0);
            let b: f64 = rng.gen_range(0.0..1.0);
            let twice = net
                .apply_shock(&ShockScenario::uniform(a).unwrap())
                .unwrap()
                .apply_shock(&ShockScenario::uniform(b).unwrap())
                .unwrap();
            let once = net
                .apply_shock(&ShockScenario::uniform(1.0 - (1.0 - a) * (1.0 - b)).unwrap())
                .unwrap();
            for i in 0..net.n() {
                let x = twice.external_assets()[i];
                let y = once.external_assets()[i];
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn total_book_equity_ignores_internal_positions() {
        // Internal claims cancel in aggregate, so total equity depends only
        // on the external sheet.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let n = 2 + rng.gen_range(0..8);
            let net = random_network(&mut rng, n);
            let total: f64 = net.book_equity().sum();
            let external: f64 = net
                .external_assets()
                .iter()
                .zip(net.external_liabilities())
                .map(|(a, l)| a - l)
                .sum();
            assert!(
                (total - external).abs() <= 1e-9 * external.abs().max(1.0),
                "{total} vs {external}"
            );
        }
    }

    #[test]
    fn validate_flags_nonzero_diagonal() {
        let report = validate_parts(
            &[Institution::bank("a"), Institution::bank("b")],
            &[10.0, 10.0],
            &[0.0, 0.0],
            &[vec![5.0, 0.0], vec![0.0, 0.0]],
        );
        assert_eq!(
            report.violations,
            vec![Violation::SelfHolding { id: "a".into(), value: 5.0 }]
        );
    }

    #[test]
    fn validate_lists_every_violation() {
        let report = validate_parts(
            &[Institution::bank("a"), Institution::bank("a")],
            &[-1.0, 10.0],
            &[0.0],
            &[vec![0.0, -2.0], vec![0.0, 3.0]],
        );
        assert!(!report.is_valid());
        assert!(report.violations.contains(&Violation::DuplicateId { id: "a".into() }));
        assert!(report
            .violations
            .contains(&Violation::NegativeExternalAssets { id: "a".into(), value: -1.0 }));
        assert!(report.violations.contains(&Violation::NegativeHolding {
            holder: "a".into(),
            issuer: "a".into(),
            value: -2.0
        }));
        assert!(report.violations.contains(&Violation::SelfHolding { id: "a".into(), value: 3.0 }));
        assert!(report.violations.iter().any(|v| matches!(v, Violation::DimensionMismatch { .. })));
    }

    #[test]
    fn from_parts_rejects_invalid_data() {
        let err = FinancialNetwork::from_parts(
            vec![Institution::bank("a")],
            vec![-5.0],
            vec![0.0],
            vec![vec![0.0]],
        )
        .unwrap_err();
        assert!(matches!(err, NetworkError::Invalid { .. }));
    }

    #[test]
    fn constructed_networks_validate_clean() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = 1 + rng.gen_range(0..10);
            let net = random_network(&mut rng, n);
            assert!(net.validate().is_valid());
        }
    }

}
