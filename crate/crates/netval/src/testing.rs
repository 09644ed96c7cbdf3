//! Deterministic fixtures for tests and examples. Not a stability surface:
//! the exact networks produced may change between releases.

use rand::Rng;

use crate::network::{FinancialNetwork, Institution};

/// Random admissible network with strictly positive book equity.
///
/// External assets are solved from a target equity, so every institution
/// starts solvent regardless of how the internal positions came out.
pub fn random_network<R: Rng>(rng: &mut R, n: usize) -> FinancialNetwork {
    let mut holdings = vec![vec![0.0; n]; n];
    for (i, row) in holdings.iter_mut().enumerate() {
        for (j, h) in row.iter_mut().enumerate() {
            if i != j && rng.gen_bool(0.5) {
                *h = rng.gen_range(0.0..50.0);
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
    let mut external_assets = Vec::with_capacity(n);
    let mut external_liabilities = Vec::with_capacity(n);
    for i in 0..n {
        let liab = rng.gen_range(0.0..100.0);
        let target_equity = rng.gen_range(1.0..50.0);
        let needed = target_equity + liab + internal_liabilities[i] - internal_assets[i];
        external_assets.push(needed.max(0.0));
        external_liabilities.push(liab);
    }
    let institutions = (0..n).map(|i| Institution::bank(format!("bank{i:02}"))).collect();
    FinancialNetwork::from_parts(institutions, external_assets, external_liabilities, holdings)
        .expect("constructed network is admissible")
}
