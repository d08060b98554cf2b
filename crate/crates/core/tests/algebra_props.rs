//! Property tests for the exact trig-polynomial algebra: structural
//! identities hold exactly (no tolerance), and numeric evaluation is a ring
//! homomorphism up to rounding.

use proptest::prelude::*;
use saddletrap::algebra::{Rational, TrigPoly};

#[derive(Debug, Clone)]
struct Term {
    freq: u32,
    numer: i64,
    denom: i64,
    is_cos: bool,
}

fn term() -> impl Strategy<Value = Term> {
    (0u32..5, -20i64..=20, 1i64..=12, any::<bool>()).prop_map(|(freq, numer, denom, is_cos)| {
        Term {
            freq,
            numer,
            denom,
            is_cos,
        }
    })
}

fn poly() -> impl Strategy<Value = TrigPoly> {
    prop::collection::vec(term(), 0..6).prop_map(|terms| {
        let mut p = TrigPoly::zero();
        for t in terms {
            let c = Rational::new(t.numer, t.denom);
            let basis = if t.is_cos {
                TrigPoly::cos(t.freq, c)
            } else {
                TrigPoly::sin(t.freq, c)
            };
            p = &p + &basis;
        }
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eval_is_additive_and_multiplicative(p in poly(), q in poly(), tau in -3.0f64..3.0) {
        let sum = (&p + &q).eval(tau);
        let prod = (&p * &q).eval(tau);
        let scale = 1.0 + p.eval(tau).abs() + q.eval(tau).abs();
        prop_assert!((sum - (p.eval(tau) + q.eval(tau))).abs() <= 1e-12 * scale);
        // Product coefficients grow like the term count, so allow a looser
        // relative bound tied to both factors.
        let prod_scale = 1.0 + p.eval(tau).abs() * q.eval(tau).abs() + prod.abs();
        prop_assert!((prod - p.eval(tau) * q.eval(tau)).abs() <= 1e-9 * prod_scale);
    }

    #[test]
    fn derivative_satisfies_the_leibniz_rule(p in poly(), q in poly()) {
        let lhs = (&p * &q).derivative();
        let rhs = &(&p.derivative() * &q) + &(&p * &q.derivative());
        prop_assert!((&lhs - &rhs).is_zero());
    }

    #[test]
    fn antiderivative_inverts_derivative_on_zero_mean_input(p in poly()) {
        let fluct = p.fluctuating();
        let primitive = fluct.antiderivative_zero_mean().unwrap();
        prop_assert!((&primitive.derivative() - &fluct).is_zero());
        prop_assert!(primitive.average().is_zero());
    }

    #[test]
    fn average_plus_fluctuation_recomposes(p in poly()) {
        let recomposed = &TrigPoly::constant(p.average()) + &p.fluctuating();
        prop_assert!((&recomposed - &p).is_zero());
        prop_assert!(p.fluctuating().average().is_zero());
    }

    #[test]
    fn derivative_kills_exactly_the_constants(p in poly()) {
        let d = p.derivative();
        prop_assert!(d.average().is_zero());
        // A polynomial with zero derivative must be its own average.
        if d.is_zero() {
            prop_assert!((&p - &TrigPoly::constant(p.average())).is_zero());
        }
    }
}
