//! File formats and synthetic networks.
//!
//! A network on disk is either a pair of CSV files or one JSON bundle:
//!
//! * `institutions.csv`: `id,is_fund,external_assets,external_liabilities`
//! * `holdings.csv`: `holder_id,issuer_id,amount` (absent pairs are zero)
//! * bundle JSON: `{"institutions": [...], "holdings": [...]}` mirroring
//!   the two tables.
//!
//! Load and save round-trip exactly: floating-point values are written in
//! shortest round-trip decimal form, holdings in (holder, issuer) order
//! with zero entries omitted. All numeric formatting is locale independent.
//!
//! Result tables serialize with a fixed column set, one row per scenario:
//! `shock,param_name,param_value,direct_defaults,indirect_defaults,`
//! `total_defaults,converged,iterations,final_delta_r,total_final_equity`.
//! When a sweep varies several parameters at once, names and values are
//! joined with `;` in their spec order.
//!
//! The synthetic generator produces fund-concentrated networks: holder
//! weights follow a power law over a seeded rank permutation, fund rows are
//! renormalized so funds hold exactly the target share of internal assets,
//! and external sheets are solved so every institution starts solvent with
//! an equity buffer drawn uniformly from a configurable range. The buffer
//! equals the shock fraction at which the institution defaults directly,
//! so the range controls how direct defaults spread over a shock grid.
//! Identical specs produce identical networks on every platform.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{
    validate_parts, FinancialNetwork, Institution, NetworkError, ValidationReport, Violation,
};
use crate::stress::SweepRow;

/// Fixed header of a results CSV.
pub const RESULTS_COLUMNS: [&str; 10] = [
    "shock",
    "param_name",
    "param_value",
    "direct_defaults",
    "indirect_defaults",
    "total_defaults",
    "converged",
    "iterations",
    "final_delta_r",
    "total_final_equity",
];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("invalid network in {path}: {report}")]
    InvalidNetwork { path: String, report: ValidationReport },
    #[error("invalid synthetic spec: {what}")]
    InvalidSpec { what: String },
    #[error("unsupported network path '{path}': expected a directory, an institutions.csv, or a .json bundle")]
    UnsupportedPath { path: String },
}

/// One row of `institutions.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstitutionRecord {
    pub id: String,
    pub is_fund: bool,
    pub external_assets: f64,
    pub external_liabilities: f64,
}

/// One row of `holdings.csv`: `holder_id` holds `amount` of debt issued by
/// `issuer_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldingRecord {
    pub holder_id: String,
    pub issuer_id: String,
    pub amount: f64,
}

/// A network in table form, the shape shared by the CSV pair and the JSON
/// bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkData {
    pub institutions: Vec<InstitutionRecord>,
    pub holdings: Vec<HoldingRecord>,
}

/// Network parts in the order `FinancialNetwork::from_parts` wants them.
type CheckedParts = (ValidationReport, Vec<Institution>, Vec<f64>, Vec<f64>, Vec<Vec<f64>>);

impl NetworkData {
    /// Checks the tables and the matrix they imply, reporting every
    /// violation: unknown or duplicate ids, duplicate (holder, issuer)
    /// pairs, negative amounts, self-holdings.
    pub fn validate(&self) -> ValidationReport {
        self.check().0
    }

    fn check(&self) -> CheckedParts {
        let institutions: Vec<Institution> = self
            .institutions
            .iter()
            .map(|r| Institution { id: r.id.clone(), is_fund: r.is_fund })
            .collect();
        let external_assets: Vec<f64> = self.institutions.iter().map(|r| r.external_assets).collect();
        let external_liabilities: Vec<f64> =
            self.institutions.iter().map(|r| r.external_liabilities).collect();
        let n = institutions.len();
        let index: std::collections::HashMap<&str, usize> = institutions
            .iter()
            .enumerate()
            .map(|(i, inst)| (inst.id.as_str(), i))
            .collect();

        let mut extra = Vec::new();
        let mut holdings = vec![vec![0.0; n]; n];
        let mut seen_pairs = std::collections::HashSet::new();
        for record in &self.holdings {
            let holder = index.get(record.holder_id.as_str()).copied();
            let issuer = index.get(record.issuer_id.as_str()).copied();
            if holder.is_none() {
                extra.push(Violation::UnknownInstitution {
                    id: record.holder_id.clone(),
                    role: "holder",
                });
            }
            if issuer.is_none() {
                extra.push(Violation::UnknownInstitution {
                    id: record.issuer_id.clone(),
                    role: "issuer",
                });
            }
            let (Some(h), Some(s)) = (holder, issuer) else { continue };
            if !seen_pairs.insert((h, s)) {
                extra.push(Violation::DuplicateHolding {
                    holder: record.holder_id.clone(),
                    issuer: record.issuer_id.clone(),
                });
                continue;
            }
            holdings[h][s] = record.amount;
        }

        let mut report =
            validate_parts(&institutions, &external_assets, &external_liabilities, &holdings);
        report.violations.extend(extra);
        (report, institutions, external_assets, external_liabilities, holdings)
    }

    /// Builds the validated network, or the full violation report.
    pub fn to_network(&self) -> Result<FinancialNetwork, NetworkError> {
        let (report, institutions, external_assets, external_liabilities, holdings) = self.check();
        if !report.is_valid() {
            return Err(NetworkError::Invalid { report });
        }
        FinancialNetwork::from_parts(institutions, external_assets, external_liabilities, holdings)
    }

    /// Table form of a network: institutions in order, holdings in
    /// (holder, issuer) order with zero entries omitted.
    pub fn from_network(network: &FinancialNetwork) -> NetworkData {
        let institutions = network
            .institutions()
            .iter()
            .enumerate()
            .map(|(i, inst)| InstitutionRecord {
                id: inst.id.clone(),
                is_fund: inst.is_fund,
                external_assets: network.external_assets()[i],
                external_liabilities: network.external_liabilities()[i],
            })
            .collect();
        let mut holdings = Vec::new();
        for holder in 0..network.n() {
            for issuer in 0..network.n() {
                let amount = network.holding(holder, issuer);
                if amount != 0.0 {
                    holdings.push(HoldingRecord {
                        holder_id: network.institution(holder).id.clone(),
                        issuer_id: network.institution(issuer).id.clone(),
                        amount,
                    });
                }
            }
        }
        NetworkData { institutions, holdings }
    }
}

fn read_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Read { path: path.display().to_string(), source }
}

fn write_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Write { path: path.display().to_string(), source }
}

fn csv_parse_err(path: &Path, err: csv::Error) -> IoError {
    let msg = match err.position() {
        Some(pos) => format!("line {}: {}", pos.line(), brief_csv_msg(&err)),
        None => brief_csv_msg(&err),
    };
    IoError::Parse { path: path.display().to_string(), msg }
}

fn brief_csv_msg(err: &csv::Error) -> String {
    match err.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        other => format!("{other:?}"),
    }
}

fn read_csv_records<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let file = fs::File::open(path).map_err(|e| read_err(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut records = Vec::new();
    for row in reader.deserialize() {
        records.push(row.map_err(|e| csv_parse_err(path, e))?);
    }
    Ok(records)
}

/// Loads a network from an explicit CSV pair.
pub fn load_network_csv(
    institutions_path: &Path,
    holdings_path: &Path,
) -> Result<FinancialNetwork, IoError> {
    let data = NetworkData {
        institutions: read_csv_records(institutions_path)?,
        holdings: read_csv_records(holdings_path)?,
    };
    data.to_network().map_err(|err| match err {
        NetworkError::Invalid { report } => IoError::InvalidNetwork {
            path: institutions_path.display().to_string(),
            report,
        },
        other => IoError::Parse {
            path: institutions_path.display().to_string(),
            msg: other.to_string(),
        },
    })
}

/// Loads a network from a JSON bundle.
pub fn load_network_json(path: &Path) -> Result<FinancialNetwork, IoError> {
    let text = fs::read_to_string(path).map_err(|e| read_err(path, e))?;
    let data: NetworkData = serde_json::from_str(&text).map_err(|e| IoError::Parse {
        path: path.display().to_string(),
        msg: format!("line {}: {e}", e.line()),
    })?;
    data.to_network().map_err(|err| match err {
        NetworkError::Invalid { report } => {
            IoError::InvalidNetwork { path: path.display().to_string(), report }
        }
        other => IoError::Parse { path: path.display().to_string(), msg: other.to_string() },
    })
}

/// Loads a network from a directory holding `institutions.csv` and
/// `holdings.csv`, from an `institutions.csv` path (the holdings file is
/// expected beside it), or from a `.json` bundle.
pub fn load_network(path: &Path) -> Result<FinancialNetwork, IoError> {
    if path.is_dir() {
        return load_network_csv(&path.join("institutions.csv"), &path.join("holdings.csv"));
    }
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        return load_network_json(path);
    }
    if path.file_name().is_some_and(|f| f == "institutions.csv") {
        let holdings = path.with_file_name("holdings.csv");
        return load_network_csv(path, &holdings);
    }
    Err(IoError::UnsupportedPath { path: path.display().to_string() })
}

fn write_csv_records<T: Serialize>(path: &Path, records: &[T]) -> Result<(), IoError> {
    let file = fs::File::create(path).map_err(|e| write_err(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    for record in records {
        writer.serialize(record).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => write_err(path, io),
            other => IoError::Parse { path: path.display().to_string(), msg: format!("{other:?}") },
        })?;
    }
    writer.flush().map_err(|e| write_err(path, e))
}

/// Saves a network. A `.json` path writes a bundle; any other path is
/// treated as a directory (created if missing) receiving the CSV pair.
pub fn save_network(network: &FinancialNetwork, path: &Path) -> Result<(), IoError> {
    let data = NetworkData::from_network(network);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let mut text = serde_json::to_string_pretty(&data).expect("network data serializes");
        text.push('\n');
        return fs::write(path, text).map_err(|e| write_err(path, e));
    }
    fs::create_dir_all(path).map_err(|e| write_err(path, e))?;
    write_csv_records(&path.join("institutions.csv"), &data.institutions)?;
    write_csv_records(&path.join("holdings.csv"), &data.holdings)
}

/// Writes a result table with the fixed column set. Numbers are written in
/// shortest round-trip form, so identical rows serialize to identical
/// bytes.
pub fn write_results<W: std::io::Write>(rows: &[SweepRow], writer: W) -> Result<(), std::io::Error> {
    let mut out = std::io::BufWriter::new(writer);
    writeln!(out, "{}", RESULTS_COLUMNS.join(","))?;
    for row in rows {
        let names: Vec<&str> = row.params.iter().map(|(n, _)| n.as_str()).collect();
        let values: Vec<String> = row.params.iter().map(|(_, v)| v.to_string()).collect();
        let r = &row.result;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.shock,
            names.join(";"),
            values.join(";"),
            r.direct_defaults,
            r.indirect_defaults(),
            r.total_defaults,
            r.converged,
            r.iterations_used,
            r.final_delta_r,
            r.total_final_equity(),
        )?;
    }
    out.flush()
}

/// Saves a result table to a file.
pub fn save_results(rows: &[SweepRow], path: &Path) -> Result<(), IoError> {
    let file = fs::File::create(path).map_err(|e| write_err(path, e))?;
    write_results(rows, file).map_err(|e| write_err(path, e))
}

/// Recipe for a synthetic fund-concentrated network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    /// Total number of institutions, at least 2.
    pub institutions: usize,
    /// Number of funds, between 1 and `institutions - 1`.
    pub funds: usize,
    /// Power-law exponent of holder weights, positive.
    #[serde(default = "default_exponent")]
    pub exponent: f64,
    /// Share of internal assets held by funds, in (0, 1).
    #[serde(default = "default_concentration")]
    pub concentration: f64,
    /// Total assets of the finished network, in currency units.
    #[serde(default = "default_scale")]
    pub scale: f64,
    /// Share of total assets that is internal, in (0, 1).
    #[serde(default = "default_internal_fraction")]
    pub internal_fraction: f64,
    /// Range of the equity buffer `E_i(0) / A^e_i`, within (0, 1). The
    /// buffer is the external shock at which institution `i` defaults
    /// directly.
    #[serde(default = "default_equity_buffer")]
    pub equity_buffer: (f64, f64),
    pub seed: u64,
}

fn default_exponent() -> f64 {
    1.0
}

fn default_concentration() -> f64 {
    0.75
}

fn default_scale() -> f64 {
    1e6
}

fn default_internal_fraction() -> f64 {
    0.3
}

fn default_equity_buffer() -> (f64, f64) {
    (0.01, 0.13)
}

impl SyntheticSpec {
    pub fn new(institutions: usize, funds: usize, seed: u64) -> Self {
        SyntheticSpec {
            institutions,
            funds,
            exponent: default_exponent(),
            concentration: default_concentration(),
            scale: default_scale(),
            internal_fraction: default_internal_fraction(),
            equity_buffer: default_equity_buffer(),
            seed,
        }
    }

    fn validate(&self) -> Result<(), IoError> {
        let fail = |what: String| Err(IoError::InvalidSpec { what });
        if self.institutions < 2 {
            return fail(format!("need at least 2 institutions, got {}", self.institutions));
        }
        if self.funds == 0 || self.funds >= self.institutions {
            return fail(format!(
                "funds must be between 1 and {}, got {}",
                self.institutions - 1,
                self.funds
            ));
        }
        if !self.exponent.is_finite() || self.exponent <= 0.0 {
            return fail(format!("exponent must be positive, got {}", self.exponent));
        }
        if !self.concentration.is_finite() || self.concentration <= 0.0 || self.concentration >= 1.0
        {
            return fail(format!("concentration must be in (0, 1), got {}", self.concentration));
        }
        if !self.scale.is_finite() || self.scale <= 0.0 {
            return fail(format!("scale must be positive, got {}", self.scale));
        }
        if !self.internal_fraction.is_finite()
            || self.internal_fraction <= 0.0
            || self.internal_fraction >= 1.0
        {
            return fail(format!(
                "internal_fraction must be in (0, 1), got {}",
                self.internal_fraction
            ));
        }
        let (lo, hi) = self.equity_buffer;
        if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || hi <= lo || hi >= 1.0 {
            return fail(format!("equity_buffer must satisfy 0 < lo < hi < 1, got ({lo}, {hi})"));
        }
        Ok(())
    }
}

/// Generates a synthetic network. Deterministic in the spec: identical
/// specs produce byte-identical networks on every platform.
///
/// Banks come first (`B01`, `B02`, ...), funds last (`F01`, ...). Funds
/// hold exactly the `concentration` share of internal assets, every
/// institution starts solvent, and the finished network passes validation
/// by construction.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<FinancialNetwork, IoError> {
    spec.validate()?;
    let n = spec.institutions;
    let n_funds = spec.funds;
    let n_banks = n - n_funds;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Power-law holder weights over a seeded rank permutation, then exact
    // renormalization: funds as a group hold `concentration` of internal
    // assets, banks the rest.
    let mut ranks: Vec<usize> = (0..n).collect();
    ranks.shuffle(&mut rng);
    let raw: Vec<f64> = ranks.iter().map(|&r| ((r + 1) as f64).powf(-spec.exponent)).collect();
    let fund_weight: f64 = raw[n_banks..].iter().sum();
    let bank_weight: f64 = raw[..n_banks].iter().sum();
    let holder_share: Vec<f64> = raw
        .iter()
        .enumerate()
        .map(|(i, w)| {
            if i < n_banks {
                w * (1.0 - spec.concentration) / bank_weight
            } else {
                w * spec.concentration / fund_weight
            }
        })
        .collect();

    // Each holder spreads its internal book over the other issuers with
    // random exponential weights. Internal volume is 1 before scaling.
    let mut holdings = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut weights = vec![0.0; n];
        let mut total = 0.0;
        for (j, w) in weights.iter_mut().enumerate() {
            if j != i {
                *w = -(1.0 - rng.gen::<f64>()).ln();
                total += *w;
            }
        }
        for j in 0..n {
            if j != i {
                holdings[i][j] = holder_share[i] * weights[j] / total;
            }
        }
    }

    let internal_assets: Vec<f64> = holdings.iter().map(|row| row.iter().sum()).collect();
    let mut internal_liabilities = vec![0.0; n];
    for row in &holdings {
        for (j, l) in internal_liabilities.iter_mut().enumerate() {
            *l += row[j];
        }
    }

    // Equity buffers: E_i(0) = buffer_i * A^e_i by construction below.
    let (lo, hi) = spec.equity_buffer;
    let buffers: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();

    // External assets proportional to the institution's internal book plus
    // a uniform floor, topped up where needed so external liabilities stay
    // nonnegative.
    let external_total = (1.0 - spec.internal_fraction) / spec.internal_fraction;
    let base_weight: Vec<f64> =
        (0..n).map(|i| internal_assets[i] + internal_liabilities[i] + 1.0 / n as f64).collect();
    let base_total: f64 = base_weight.iter().sum();
    let mut external_assets = Vec::with_capacity(n);
    let mut external_liabilities = Vec::with_capacity(n);
    for i in 0..n {
        let base = external_total * base_weight[i] / base_total;
        let shortfall = (internal_liabilities[i] - internal_assets[i]).max(0.0);
        let ext_assets = base + shortfall / (1.0 - buffers[i]);
        let ext_liabilities =
            ext_assets * (1.0 - buffers[i]) + internal_assets[i] - internal_liabilities[i];
        external_assets.push(ext_assets);
        external_liabilities.push(ext_liabilities);
    }

    // Scale so total assets hit the requested size.
    let total_assets: f64 =
        external_assets.iter().sum::<f64>() + internal_assets.iter().sum::<f64>();
    let factor = spec.scale / total_assets;
    for x in external_assets.iter_mut().chain(external_liabilities.iter_mut()) {
        *x *= factor;
    }
    for row in holdings.iter_mut() {
        for x in row.iter_mut() {
            *x *= factor;
        }
    }

    let width = n.to_string().len().max(2);
    let institutions: Vec<Institution> = (0..n)
        .map(|i| {
            if i < n_banks {
                Institution::bank(format!("B{:0width$}", i + 1))
            } else {
                Institution::fund(format!("F{:0width$}", i - n_banks + 1))
            }
        })
        .collect();

    FinancialNetwork::from_parts(institutions, external_assets, external_liabilities, holdings)
        .map_err(|e| IoError::InvalidSpec { what: format!("generated network invalid: {e}") })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Institution, ShockScenario};
    use crate::stress::{sweep, ShockGrid, SweepSpec};
    use crate::valuation::ModelSpec;

    fn mutual_two_bank() -> FinancialNetwork {
        FinancialNetwork::from_parts(
            vec![Institution::bank("A"), Institution::bank("B")],
            vec![100.0, 100.0],
            vec![80.0, 80.0],
            vec![vec![0.0, 20.0], vec![20.0, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn csv_pair_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let net = generate_synthetic(&SyntheticSpec::new(12, 3, 7)).unwrap();
        save_network(&net, dir.path()).unwrap();
        let loaded = load_network(dir.path()).unwrap();
        assert_eq!(loaded, net);

        // Loading via the institutions.csv path finds the sibling file.
        let loaded = load_network(&dir.path().join("institutions.csv")).unwrap();
        assert_eq!(loaded, net);
    }

    #[test]
    fn json_bundle_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        let net = generate_synthetic(&SyntheticSpec::new(9, 2, 11)).unwrap();
        save_network(&net, &path).unwrap();
        let loaded = load_network(&path).unwrap();
        assert_eq!(loaded, net);
    }

    #[test]
    fn fund_flags_survive_the_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let net = generate_synthetic(&SyntheticSpec::new(5, 2, 3)).unwrap();
        save_network(&net, dir.path()).unwrap();
        let loaded = load_network(dir.path()).unwrap();
        let funds: Vec<&str> = loaded
            .institutions()
            .iter()
            .filter(|i| i.is_fund)
            .map(|i| i.id.as_str())
            .collect();
        assert_eq!(funds, vec!["F01", "F02"]);
    }

    #[test]
    fn unsupported_paths_and_missing_files_error_cleanly() {
        assert!(matches!(
            load_network(Path::new("whatever.txt")),
            Err(IoError::UnsupportedPath { .. })
        ));
        assert!(matches!(
            load_network(Path::new("/nonexistent/net.json")),
            Err(IoError::Read { .. })
        ));
    }

    #[test]
    fn malformed_numbers_report_path_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let inst = dir.path().join("institutions.csv");
        fs::write(
            &inst,
            "id,is_fund,external_assets,external_liabilities\na,false,100,20\nb,false,oops,0\n",
        )
        .unwrap();
        fs::write(dir.path().join("holdings.csv"), "holder_id,issuer_id,amount\n").unwrap();
        let err = load_network(dir.path()).unwrap_err();
        match err {
            IoError::Parse { path, msg } => {
                assert!(path.ends_with("institutions.csv"));
                assert!(msg.contains("line 3"), "{msg}");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn structural_violations_are_reported_with_ids() {
        let data = NetworkData {
            institutions: vec![
                InstitutionRecord {
                    id: "a".into(),
                    is_fund: false,
                    external_assets: 10.0,
                    external_liabilities: 0.0,
                },
                InstitutionRecord {
                    id: "b".into(),
                    is_fund: false,
                    external_assets: 10.0,
                    external_liabilities: 0.0,
                },
            ],
            holdings: vec![
                HoldingRecord { holder_id: "a".into(), issuer_id: "a".into(), amount: 5.0 },
                HoldingRecord { holder_id: "a".into(), issuer_id: "b".into(), amount: 1.0 },
                HoldingRecord { holder_id: "a".into(), issuer_id: "b".into(), amount: 2.0 },
                HoldingRecord { holder_id: "ghost".into(), issuer_id: "b".into(), amount: 1.0 },
                HoldingRecord { holder_id: "b".into(), issuer_id: "a".into(), amount: -3.0 },
            ],
        };
        let report = data.validate();
        let text = report.to_string();
        assert!(text.contains("'a' holds its own debt"), "{text}");
        assert!(text.contains("duplicate holding"), "{text}");
        assert!(text.contains("'ghost'"), "{text}");
        assert!(text.contains("negative holding"), "{text}");
        assert!(data.to_network().is_err());
    }

    #[test]
    fn results_csv_golden_bytes() {
        let net = mutual_two_bank();
        let spec = SweepSpec::new(
            ModelSpec::linear_dr(),
            ShockGrid::new(0.0, 0.005, 0.005).unwrap(),
        );
        let rows = sweep(&net, &spec).unwrap();
        let mut buffer = Vec::new();
        write_results(&rows, &mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        // At a = 0.005 each bank loses 0.5 per round until both sink to
        // -0.5: 41 applications of the map, two indirect defaults.
        let expected = "\
shock,param_name,param_value,direct_defaults,indirect_defaults,total_defaults,converged,iterations,final_delta_r,total_final_equity
0,,,0,0,0,true,1,0,40
0.005,,,0,2,2,true,41,0,-1
";
        assert_eq!(text, expected);
    }

    #[test]
    fn results_csv_joins_multiple_sweep_parameters() {
        let net = mutual_two_bank();
        let mut spec = SweepSpec::new(
            ModelSpec::reduced_form(1.0, 0.5, 1.0),
            ShockGrid::new(0.0, 0.0, 0.005).unwrap(),
        );
        spec.params = vec![
            crate::stress::ParamGrid { name: "gamma".into(), values: vec![2.0] },
            crate::stress::ParamGrid { name: "beta".into(), values: vec![0.5] },
        ];
        let rows = sweep(&net, &spec).unwrap();
        let mut buffer = Vec::new();
        write_results(&rows, &mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        assert!(text.contains("0,gamma;beta,2;0.5,"), "{text}");
    }

    #[test]
    fn saving_twice_produces_identical_bytes() {
        let net = generate_synthetic(&SyntheticSpec::new(15, 4, 99)).unwrap();
        let spec = SweepSpec::new(
            ModelSpec::ir_feedback(20.0, 0.5, 1.0, 0.05, 0.5),
            ShockGrid::new(0.0, 0.05, 0.01).unwrap(),
        );
        let rows = sweep(&net, &spec).unwrap();
        let mut first = Vec::new();
        let mut second = Vec::new();
        write_results(&rows, &mut first).unwrap();
        let rows_again = sweep(&net, &spec).unwrap();
        write_results(&rows_again, &mut second).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn generator_is_deterministic_in_the_seed() {
        let spec = SyntheticSpec::new(20, 5, 42);
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&SyntheticSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generated_networks_are_valid_solvent_and_scaled() {
        for seed in [1, 2, 3, 4, 5] {
            let spec = SyntheticSpec::new(20, 5, seed);
            let net = generate_synthetic(&spec).unwrap();
            assert!(net.validate().is_valid());
            assert_eq!(net.n(), 20);

            let equity = net.book_equity();
            for (i, &e) in equity.iter().enumerate() {
                assert!(e > 0.0, "seed {seed}: institution {i} starts insolvent");
            }

            // Equity buffers land inside the configured range.
            let (lo, hi) = spec.equity_buffer;
            for i in 0..net.n() {
                let buffer = equity[i] / net.external_assets()[i];
                assert!(
                    buffer > lo - 1e-9 && buffer < hi + 1e-9,
                    "seed {seed}: buffer {buffer} outside ({lo}, {hi})"
                );
            }

            let total_assets: f64 = net.external_assets().iter().sum::<f64>()
                + net.internal_asset_totals().iter().sum::<f64>();
            assert!((total_assets - spec.scale).abs() <= 1e-6 * spec.scale);
        }
    }

    #[test]
    fn funds_hold_exactly_the_target_share_of_internal_assets() {
        for concentration in [0.5, 0.75, 0.9] {
            let spec = SyntheticSpec {
                concentration,
                ..SyntheticSpec::new(20, 5, 7)
            };
            let net = generate_synthetic(&spec).unwrap();
            let totals = net.internal_asset_totals();
            let all: f64 = totals.iter().sum();
            let funds: f64 = totals
                .iter()
                .enumerate()
                .filter(|(i, _)| net.institution(*i).is_fund)
                .map(|(_, t)| t)
                .sum();
            let share = funds / all;
            assert!(
                (share - concentration).abs() < 1e-12,
                "target {concentration}, got {share}"
            );
        }
    }

    #[test]
    fn extreme_concentration_with_one_fund_is_feasible() {
        let spec = SyntheticSpec { concentration: 0.99, ..SyntheticSpec::new(2, 1, 5) };
        let net = generate_synthetic(&spec).unwrap();
        let totals = net.internal_asset_totals();
        let share = totals[1] / (totals[0] + totals[1]);
        assert!(net.institution(1).is_fund);
        assert!((share - 0.99).abs() < 1e-12);
    }

    #[test]
    fn generator_rejects_inadmissible_specs() {
        assert!(generate_synthetic(&SyntheticSpec::new(1, 1, 0)).is_err());
        assert!(generate_synthetic(&SyntheticSpec::new(10, 0, 0)).is_err());
        assert!(generate_synthetic(&SyntheticSpec::new(10, 10, 0)).is_err());
        let bad = SyntheticSpec { exponent: 0.0, ..SyntheticSpec::new(10, 3, 0) };
        assert!(generate_synthetic(&bad).is_err());
        let bad = SyntheticSpec { concentration: 1.0, ..SyntheticSpec::new(10, 3, 0) };
        assert!(generate_synthetic(&bad).is_err());
        let bad = SyntheticSpec { equity_buffer: (0.1, 0.1), ..SyntheticSpec::new(10, 3, 0) };
        assert!(generate_synthetic(&bad).is_err());
        let bad = SyntheticSpec { scale: -1.0, ..SyntheticSpec::new(10, 3, 0) };
        assert!(generate_synthetic(&bad).is_err());
    }

    #[test]
    fn generated_network_survives_shock_and_save() {
        // End to end: generate, shock, save, load, same equity.
        let dir = tempfile::tempdir().unwrap();
        let net = generate_synthetic(&SyntheticSpec::new(10, 3, 21)).unwrap();
        let shocked = net.apply_shock(&ShockScenario::uniform(0.05).unwrap()).unwrap();
        save_network(&shocked, dir.path()).unwrap();
        let loaded = load_network(dir.path()).unwrap();
        assert_eq!(loaded.book_equity(), shocked.book_equity());
    }
}
