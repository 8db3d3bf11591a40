mod naive;

use std::collections::HashSet;

use matchaudit::axioms::{check_lad, check_substitutable};
use matchaudit::families::{all_rankings, choice_classes, one_to_one_2x2, random_market, RandomMarketParams};
use matchaudit::manipulation::{all_profiles, DEFAULT_BUDGET};
use matchaudit::mechanisms::{unanimous_doctor_best, unanimous_hospital_best};
use matchaudit::{
    doctor_optimal, enumerate_stable, fixtures, hospital_optimal, quantile_rule, ContractSet, Market, Quantile,
};
use naive::single_hospital;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn check_against_stable_set(m: &Market) -> usize {
    let mut profiles = 0;
    for p in all_profiles(m, DEFAULT_BUDGET).unwrap() {
        let stable = enumerate_stable(m, &p);
        assert_eq!(Some(doctor_optimal(m, &p).unwrap()), unanimous_doctor_best(m, &p, &stable));
        assert_eq!(Some(hospital_optimal(m, &p).unwrap()), unanimous_hospital_best(m, &stable));
        profiles += 1;
    }
    profiles
}

#[test]
fn deferred_acceptance_picks_the_unanimous_extremes() {
    let mut profiles = 0;
    for m in [fixtures::theorem2(), fixtures::theorem4(3), fixtures::no_contracts_2x2_spec().market] {
        profiles += check_against_stable_set(&m);
    }
    for m in one_to_one_2x2(3) {
        profiles += check_against_stable_set(&m);
    }
    let mut rng = StdRng::seed_from_u64(3);
    let params = RandomMarketParams {
        doctors: 3,
        hospitals: 2,
        contracts: 5,
        max_hospital_contracts: 4,
    };
    for _ in 0..30 {
        profiles += check_against_stable_set(&random_market(params, &mut rng));
    }
    assert!(profiles > 1_000);
}

#[test]
fn extreme_quantiles_are_the_optimal_rules() {
    let mut rng = StdRng::seed_from_u64(5);
    let params = RandomMarketParams {
        doctors: 3,
        hospitals: 2,
        contracts: 5,
        max_hospital_contracts: 3,
    };
    let mut markets = vec![fixtures::theorem2(), fixtures::theorem4(4)];
    while markets.len() < 30 {
        let m = random_market(params, &mut rng);
        if m.hospitals().all(|h| check_lad(m.hospital_pref(h)).is_ok()) {
            markets.push(m);
        }
    }
    for m in &markets {
        for p in all_profiles(m, DEFAULT_BUDGET).unwrap() {
            assert_eq!(quantile_rule(m, &p, Quantile::ZERO).unwrap(), doctor_optimal(m, &p).unwrap());
            assert_eq!(quantile_rule(m, &p, Quantile::ONE).unwrap(), hospital_optimal(m, &p).unwrap());
        }
    }
}

#[test]
fn choice_classes_cover_every_substitutable_ranking() {
    for assignment in [vec![0, 1, 2], vec![0, 0, 1], vec![0, 1]] {
        let m = single_hospital(&assignment);
        let h = m.hospital_id("h1").unwrap();
        let domain = m.contracts_of_hospital(h);
        let signature = |market: &Market| -> Vec<ContractSet> {
            domain.subsets().map(|s| market.hospital_pref(h).choose(s)).collect()
        };
        let brute: HashSet<Vec<ContractSet>> = all_rankings(&m, h)
            .into_iter()
            .map(|r| m.with_ranking(h, r).unwrap())
            .filter(|market| check_substitutable(market.hospital_pref(h)).is_ok())
            .map(|market| signature(&market))
            .collect();
        let classes: HashSet<Vec<ContractSet>> = choice_classes(&m, h, usize::MAX)
            .into_iter()
            .map(|r| signature(&m.with_ranking(h, r).unwrap()))
            .collect();
        assert_eq!(brute, classes, "{assignment:?}");
    }
}
