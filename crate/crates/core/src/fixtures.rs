//! Bundled markets.
//!
//! * `theorem2`: two doctors, two hospitals, contracts `x`, `y` between `d1`
//!   and `h1` (ranked `x` over `y`) and `w` between `d2` and `h2`. The
//!   hospital-optimal rule can be obviously manipulated here.
//! * `theorem4(k)`: contracts `x1..xk` between `d1` and `h1`, ranked
//!   `xk, ..., x1`, and `w` between `d2` and `h2`. Every quantile rule with
//!   `⌈kq⌉ = 2` can be obviously manipulated here.
//! * `no_contracts_2x2`: one contract per doctor-hospital pair.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::market::{DoctorProfile, Market};
use crate::spec_file::{parse_market_str, MarketSpec};

pub const THEOREM2_JSON: &str = include_str!("../fixtures/theorem2.json");
pub const THEOREM4_K3_JSON: &str = include_str!("../fixtures/theorem4_k3.json");
pub const NO_CONTRACTS_2X2_JSON: &str = include_str!("../fixtures/no_contracts_2x2.json");

pub fn theorem2_spec() -> MarketSpec {
    parse_market_str(THEOREM2_JSON).expect("bundled theorem2 market is valid")
}

pub fn theorem2() -> Market {
    theorem2_spec().market
}

pub fn no_contracts_2x2_spec() -> MarketSpec {
    parse_market_str(NO_CONTRACTS_2X2_JSON).expect("bundled 2x2 market is valid")
}

/// The `k`-contract market, built programmatically. Panics on `k = 0` or when
/// the market would exceed the contract limit.
pub fn theorem4(k: usize) -> Market {
    try_theorem4(k).expect("valid k")
}

pub fn try_theorem4(k: usize) -> Result<Market> {
    let names: Vec<String> = (1..=k).map(|i| format!("x{i}")).collect();
    let mut builder = Market::builder().doctor("d1").doctor("d2").hospital("h1").hospital("h2");
    for n in &names {
        builder = builder.contract(n.clone(), "d1", "h1");
    }
    builder = builder.contract("w", "d2", "h2");
    let mut ranking: Vec<Vec<String>> = names.iter().rev().map(|n| vec![n.clone()]).collect();
    ranking.push(Vec::new());
    builder.set_ranking("h1", ranking);
    builder.set_ranking("h2", vec![vec!["w".to_owned()], Vec::new()]);
    builder.build()
}

/// `theorem4(k)` with the profiles `main` (`d1: x1, ..., xk`) and
/// `misreport` (`d1: x1`), both with `d2: w`.
pub fn theorem4_spec(k: usize) -> Result<MarketSpec> {
    let market = try_theorem4(k)?;
    let names: Vec<String> = (1..=k).map(|i| format!("x{i}")).collect();
    let truth: Vec<&str> = names.iter().map(String::as_str).collect();
    let main = DoctorProfile::from_names(&market, &[("d1", &truth), ("d2", &["w"])])?;
    let misreport = DoctorProfile::from_names(&market, &[("d1", &["x1"]), ("d2", &["w"])])?;
    let profiles = BTreeMap::from([("main".to_owned(), main), ("misreport".to_owned(), misreport)]);
    Ok(MarketSpec { market, profiles })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem4_spec_matches_bundled_file() {
        assert_eq!(theorem4_spec(3).unwrap(), parse_market_str(THEOREM4_K3_JSON).unwrap());
    }

    #[test]
    fn theorem4_has_k_plus_one_contracts() {
        for k in 1..=6 {
            assert_eq!(theorem4(k).num_contracts(), k + 1);
        }
    }
}
