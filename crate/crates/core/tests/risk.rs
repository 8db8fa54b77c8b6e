use lcw_core::domain::Money;
use lcw_core::sim::{fixed_price_risk_sweep, severity_mix_sweep};
use proptest::prelude::*;
use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sum of (fixed - cost) over the vector, in i128 to rule out overflow.
fn oracle_total(fixed: u64, costs: &[u64]) -> i128 {
    costs.iter().map(|&c| fixed as i128 - c as i128).sum()
}

#[test]
fn thousand_seeded_vectors_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let fixed = rng.random_range(0..100_000u64);
        let n = rng.random_range(0..50);
        let costs: Vec<u64> = (0..n).map(|_| rng.random_range(0..200_000)).collect();
        let money: Vec<Money> = costs.iter().map(|&c| Money::from_cents(c)).collect();
        let sweep = fixed_price_risk_sweep(Money::from_cents(fixed), &money);
        assert_eq!(sweep.total as i128, oracle_total(fixed, &costs));
        assert_eq!(sweep.profits.len(), costs.len());
        for (p, c) in sweep.profits.iter().zip(&costs) {
            assert_eq!(*p as i128, fixed as i128 - *c as i128);
        }
    }
}

proptest! {
    #[test]
    fn total_ignores_case_order(fixed in 0..100_000u64, costs in prop::collection::vec(0..200_000u64, 0..40), seed in any::<u64>()) {
        let money: Vec<Money> = costs.iter().map(|&c| Money::from_cents(c)).collect();
        let mut shuffled = money.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(
            fixed_price_risk_sweep(Money::from_cents(fixed), &money).total,
            fixed_price_risk_sweep(Money::from_cents(fixed), &shuffled).total
        );
    }

    #[test]
    fn mix_sweep_is_monotone_in_the_expensive_share(
        fixed in 0..100_000u64,
        cheap in 0..100_000u64,
        extra in 0..100_000u64,
        cases in 0..60usize,
    ) {
        let points = severity_mix_sweep(
            Money::from_cents(fixed),
            Money::from_cents(cheap),
            Money::from_cents(cheap + extra),
            cases,
        );
        prop_assert_eq!(points.len(), cases + 1);
        prop_assert!(points.windows(2).all(|w| w[1].total <= w[0].total));
        for (k, point) in points.iter().enumerate() {
            prop_assert_eq!(point.expensive_cases, k);
            let expected = (cases - k) as i128 * (fixed as i128 - cheap as i128)
                + k as i128 * (fixed as i128 - (cheap + extra) as i128);
            prop_assert_eq!(point.total as i128, expected);
        }
    }

    #[test]
    fn raising_one_cost_never_raises_the_total(
        fixed in 0..100_000u64,
        costs in prop::collection::vec(0..200_000u64, 1..30),
        index in any::<prop::sample::Index>(),
        bump in 0..50_000u64,
    ) {
        let base: Vec<Money> = costs.iter().map(|&c| Money::from_cents(c)).collect();
        let mut raised = base.clone();
        let i = index.index(raised.len());
        raised[i] = Money::from_cents(costs[i] + bump);
        let a = fixed_price_risk_sweep(Money::from_cents(fixed), &base).total;
        let b = fixed_price_risk_sweep(Money::from_cents(fixed), &raised).total;
        prop_assert_eq!(a - b, bump as i64);
    }
}
