mod common;

use atomcompact::doc::schema_of;
use atomcompact::{compactify, decompose, Document, ExpansionDoc, Theory};
use common::*;
use proptest::prelude::*;

fn theory_of(bit: bool) -> Theory {
    if bit {
        Theory::Dlo
    } else {
        Theory::Eq
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sets_and_compactifications_round_trip(seed in any::<u64>(), dlo in any::<bool>(), n in 0usize..=2) {
        let theory = theory_of(dlo);
        let mut r = rng(seed);
        let support = random_support(&mut r, theory, 3);
        let s = random_set(&mut r, theory, "x", n, &support);
        for set in [s.clone(), compactify(&s)] {
            let text = set.to_text().unwrap();
            let json: serde_json::Value = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(schema_of(&json).unwrap(), "atomcompact/defset-v1");
            prop_assert_eq!(atomcompact::DefSet::from_text(&text).unwrap(), set);
        }
    }

    #[test]
    fn functions_and_expansions_round_trip(seed in any::<u64>(), dlo in any::<bool>(), n in 1usize..=2) {
        let theory = theory_of(dlo);
        let mut r = rng(seed);
        let support = random_support(&mut r, theory, 2);
        let f = random_deffun(&mut r, theory, n, 2, &support);
        prop_assert_eq!(atomcompact::DefFun::from_text(&f.to_text().unwrap()).unwrap(), f);
        let g = random_scalarfun(&mut r, theory, n);
        prop_assert_eq!(atomcompact::ScalarFun::from_text(&g.to_text().unwrap()).unwrap(), g.clone());
        let e = ExpansionDoc { theory, expansion: decompose(&g).unwrap() };
        prop_assert_eq!(ExpansionDoc::from_text(&e.to_text().unwrap()).unwrap(), e);
    }

    #[test]
    fn measures_round_trip(seed in any::<u64>(), dlo in any::<bool>(), n in 1usize..=2) {
        let theory = theory_of(dlo);
        let mut r = rng(seed);
        let base = atomcompact::DefSet::power(theory, "x", n);
        let t = match theory {
            Theory::Eq => atomcompact::Truncation::eq(3),
            Theory::Dlo => atomcompact::Truncation::dlo(&atom_pool(theory)[..2]),
        };
        let mu = random_measure(&mut r, &base, &t);
        prop_assert_eq!(atomcompact::Measure::from_text(&mu.to_text().unwrap()).unwrap(), mu);
    }
}
