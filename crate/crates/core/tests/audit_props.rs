use matchaudit::families::{random_market, RandomMarketParams};
use matchaudit::manipulation::{option_set, DEFAULT_BUDGET};
use matchaudit::{fixtures, AuditConfig, Auditor, DoctorPreference, Quantile, Rule, TailOrder, Verdict};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn market_from_seed(seed: u64) -> matchaudit::Market {
    let mut rng = StdRng::seed_from_u64(seed);
    random_market(
        RandomMarketParams {
            doctors: 3,
            hospitals: 2,
            contracts: 5,
            max_hospital_contracts: 4,
        },
        &mut rng,
    )
}

fn all_witnesses() -> AuditConfig {
    AuditConfig {
        all_witnesses: true,
        ..AuditConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn witnesses_replay(seed in any::<u64>()) {
        let m = market_from_seed(seed);
        for rule in [Rule::DoctorOptimal, Rule::HospitalOptimal] {
            let report = Auditor::new(rule.clone(), &m, all_witnesses()).unwrap().audit();
            for w in &report.witnesses {
                prop_assert!(w.replay(&rule, &m, DEFAULT_BUDGET).unwrap());
            }
            let obvious = report.witnesses.iter().filter(|w| w.obvious.is_some_and(|o| o.is_obvious())).count();
            prop_assert_eq!(obvious as u64, report.stats.obvious_manipulations);
            prop_assert_eq!(report.verdict == Verdict::Om, obvious > 0);
        }
    }

    #[test]
    fn unacceptable_tail_order_is_irrelevant(seed in any::<u64>()) {
        let m = market_from_seed(seed);
        let descending = AuditConfig { tail: TailOrder::Descending, ..all_witnesses() };
        for rule in [Rule::DoctorOptimal, Rule::HospitalOptimal] {
            let a = Auditor::new(rule.clone(), &m, all_witnesses()).unwrap().audit();
            let b = Auditor::new(rule, &m, descending).unwrap().audit();
            prop_assert_eq!(a.verdict, b.verdict);
            prop_assert_eq!(a.witnesses, b.witnesses);
        }
    }

    #[test]
    fn table_option_sets_match_direct_computation(seed in any::<u64>()) {
        let m = market_from_seed(seed);
        let auditor = Auditor::new(Rule::HospitalOptimal, &m, AuditConfig::default()).unwrap();
        for d in m.doctors() {
            for p in auditor.domain(d).members() {
                let direct = option_set(&Rule::HospitalOptimal, &m, d, p, DEFAULT_BUDGET).unwrap();
                prop_assert_eq!(auditor.option_set(d, p).unwrap(), &direct[..]);
            }
        }
    }

    #[test]
    fn known_misreport_keeps_restricted_audits_obvious(mask in any::<u64>(), k in 3usize..=5) {
        let m = fixtures::theorem4(k);
        let q = Quantile::new(if k == 5 { 2 } else { 1 }, if k == 5 { 5 } else { 2 }).unwrap();
        let auditor = Auditor::new(Rule::Quantile(q), &m, AuditConfig::default()).unwrap();
        let d1 = m.doctor_id("d1").unwrap();
        let known = DoctorPreference::new(&m, d1, vec![m.contract_id("x1").unwrap()]).unwrap();
        let members = auditor.domain(d1).members().to_vec();
        let in_subset = |p: &DoctorPreference| {
            members.iter().position(|x| x == p).is_some_and(|i| mask >> (i % 64) & 1 == 1)
        };
        let restricted = auditor.audit_with(|_, p| in_subset(p));
        let extended = auditor.audit_with(|_, p| in_subset(p) || *p == known);
        prop_assert_eq!(extended.verdict, Verdict::Om);
        if restricted.verdict == Verdict::Om {
            prop_assert!(extended.stats.obvious_manipulations >= restricted.stats.obvious_manipulations);
        }
    }
}
