use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::{AlgebraError, Rational};

/// Coefficient pair of one harmonic: `cos * cos(k t) + sin * sin(k t)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Harmonic {
    pub cos: Rational,
    pub sin: Rational,
}

impl Harmonic {
    fn zero() -> Self {
        Harmonic {
            cos: Rational::zero(),
            sin: Rational::zero(),
        }
    }

    fn is_zero(&self) -> bool {
        self.cos.is_zero() && self.sin.is_zero()
    }
}

/// Finite trigonometric polynomial `c0 + sum_k a_k cos(k t) + b_k sin(k t)`
/// with exact rational coefficients, kept in canonical form: harmonics are
/// stored sorted by frequency and zero coefficient pairs are dropped, so
/// structural equality is mathematical equality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrigPoly {
    constant: Rational,
    harmonics: BTreeMap<u32, Harmonic>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        TrigPoly {
            constant: Rational::zero(),
            harmonics: BTreeMap::new(),
        }
    }

    pub fn constant(c: Rational) -> Self {
        TrigPoly {
            constant: c,
            harmonics: BTreeMap::new(),
        }
    }

    /// `coeff * cos(freq t)`; `freq == 0` folds into the constant term.
    pub fn cos(freq: u32, coeff: Rational) -> Self {
        let mut p = TrigPoly::zero();
        p.add_cos(i64::from(freq), &coeff);
        p
    }

    /// `coeff * sin(freq t)`; `sin(0) == 0`.
    pub fn sin(freq: u32, coeff: Rational) -> Self {
        let mut p = TrigPoly::zero();
        p.add_sin(i64::from(freq), &coeff);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.harmonics.is_empty()
    }

    /// Constant (mean) part.
    pub fn constant_part(&self) -> &Rational {
        &self.constant
    }

    /// Coefficient pair of harmonic `freq`, zero if absent.
    pub fn harmonic(&self, freq: u32) -> Harmonic {
        self.harmonics.get(&freq).cloned().unwrap_or_else(Harmonic::zero)
    }

    /// Nonzero harmonics in increasing frequency order.
    pub fn harmonics(&self) -> impl Iterator<Item = (u32, &Harmonic)> {
        self.harmonics.iter().map(|(k, h)| (*k, h))
    }

    /// Highest frequency present, 0 for a constant.
    pub fn max_harmonic(&self) -> u32 {
        self.harmonics.keys().next_back().copied().unwrap_or(0)
    }

    fn prune(&mut self, freq: u32) {
        if self.harmonics.get(&freq).is_some_and(Harmonic::is_zero) {
            self.harmonics.remove(&freq);
        }
    }

    /// Folds `coeff * cos(freq t)` with a signed frequency into canonical
    /// form: cos is even, cos(0) = 1.
    fn add_cos(&mut self, freq: i64, coeff: &Rational) {
        if coeff.is_zero() {
            return;
        }
        if freq == 0 {
            self.constant = &self.constant + coeff;
            return;
        }
        let k = freq.unsigned_abs() as u32;
        let slot = self.harmonics.entry(k).or_insert_with(Harmonic::zero);
        slot.cos = &slot.cos + coeff;
        self.prune(k);
    }

    /// Folds `coeff * sin(freq t)`: sin is odd, sin(0) = 0.
    fn add_sin(&mut self, freq: i64, coeff: &Rational) {
        if coeff.is_zero() || freq == 0 {
            return;
        }
        let k = freq.unsigned_abs() as u32;
        let slot = self.harmonics.entry(k).or_insert_with(Harmonic::zero);
        if freq < 0 {
            slot.sin = &slot.sin - coeff;
        } else {
            slot.sin = &slot.sin + coeff;
        }
        self.prune(k);
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return TrigPoly::zero();
        }
        let mut out = TrigPoly::constant(&self.constant * c);
        for (&k, h) in &self.harmonics {
            out.add_cos(i64::from(k), &(&h.cos * c));
            out.add_sin(i64::from(k), &(&h.sin * c));
        }
        out
    }

    /// Exact derivative; the constant part vanishes.
    pub fn derivative(&self) -> Self {
        let mut out = TrigPoly::zero();
        for (&k, h) in &self.harmonics {
            let kf = Rational::int(i64::from(k));
            // (a cos + b sin)' = -ka sin + kb cos
            out.add_sin(i64::from(k), &-&(&h.cos * &kf));
            out.add_cos(i64::from(k), &(&h.sin * &kf));
        }
        out
    }

    /// Mean over one period: the constant term.
    pub fn average(&self) -> Rational {
        self.constant.clone()
    }

    /// Oscillating part: `self - average`.
    pub fn fluctuating(&self) -> Self {
        TrigPoly {
            constant: Rational::zero(),
            harmonics: self.harmonics.clone(),
        }
    }

    /// The unique periodic antiderivative with zero mean. Defined only for
    /// zero-mean input: a constant integrates to a secular term.
    pub fn antiderivative_zero_mean(&self) -> Result<Self, AlgebraError> {
        if !self.constant.is_zero() {
            return Err(AlgebraError::NonzeroMean {
                mean: self.constant.to_string(),
            });
        }
        let mut out = TrigPoly::zero();
        for (&k, h) in &self.harmonics {
            let inv_k = Rational::new(1, i64::from(k));
            // ∫ a cos = (a/k) sin, ∫ b sin = -(b/k) cos
            out.add_sin(i64::from(k), &(&h.cos * &inv_k));
            out.add_cos(i64::from(k), &-&(&h.sin * &inv_k));
        }
        Ok(out)
    }

    /// Numeric evaluation at `tau`, one rounding per term.
    pub fn eval(&self, tau: f64) -> f64 {
        let mut acc = self.constant.to_f64();
        for (&k, h) in &self.harmonics {
            let phase = f64::from(k) * tau;
            acc += h.cos.to_f64() * phase.cos() + h.sin.to_f64() * phase.sin();
        }
        acc
    }
}

impl Add for &TrigPoly {
    type Output = TrigPoly;
    fn add(self, rhs: &TrigPoly) -> TrigPoly {
        let mut out = self.clone();
        out.constant = &out.constant + &rhs.constant;
        for (&k, h) in &rhs.harmonics {
            out.add_cos(i64::from(k), &h.cos);
            out.add_sin(i64::from(k), &h.sin);
        }
        out
    }
}

impl Sub for &TrigPoly {
    type Output = TrigPoly;
    fn sub(self, rhs: &TrigPoly) -> TrigPoly {
        self + &-rhs
    }
}

impl Neg for &TrigPoly {
    type Output = TrigPoly;
    fn neg(self) -> TrigPoly {
        self.scale(&Rational::int(-1))
    }
}

impl Mul for &TrigPoly {
    type Output = TrigPoly;

    /// Expands through the product-to-sum identities, so the result is again
    /// in canonical form with frequencies `|k - m|` and `k + m`.
    fn mul(self, rhs: &TrigPoly) -> TrigPoly {
        let half = Rational::new(1, 2);
        let mut out = TrigPoly::constant(&self.constant * &rhs.constant);
        for (&m, h) in &rhs.harmonics {
            out.add_cos(i64::from(m), &(&self.constant * &h.cos));
            out.add_sin(i64::from(m), &(&self.constant * &h.sin));
        }
        for (&k, g) in &self.harmonics {
            out.add_cos(i64::from(k), &(&rhs.constant * &g.cos));
            out.add_sin(i64::from(k), &(&rhs.constant * &g.sin));
            for (&m, h) in &rhs.harmonics {
                let (k, m) = (i64::from(k), i64::from(m));
                // cos cos = (cos(k-m) + cos(k+m)) / 2
                let cc = &(&g.cos * &h.cos) * &half;
                out.add_cos(k - m, &cc);
                out.add_cos(k + m, &cc);
                // sin sin = (cos(k-m) - cos(k+m)) / 2
                let ss = &(&g.sin * &h.sin) * &half;
                out.add_cos(k - m, &ss);
                out.add_cos(k + m, &-&ss);
                // sin cos = (sin(k+m) + sin(k-m)) / 2
                let sc = &(&g.sin * &h.cos) * &half;
                out.add_sin(k + m, &sc);
                out.add_sin(k - m, &sc);
                // cos sin = (sin(k+m) - sin(k-m)) / 2
                let cs = &(&g.cos * &h.sin) * &half;
                out.add_sin(k + m, &cs);
                out.add_sin(k - m, &-&cs);
            }
        }
        out
    }
}

struct Term<'a> {
    coeff: &'a Rational,
    basis: Option<(&'static str, u32)>,
}

impl fmt::Display for TrigPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut terms = Vec::new();
        if !self.constant.is_zero() {
            terms.push(Term {
                coeff: &self.constant,
                basis: None,
            });
        }
        for (&k, h) in &self.harmonics {
            if !h.cos.is_zero() {
                terms.push(Term {
                    coeff: &h.cos,
                    basis: Some(("cos", k)),
                });
            }
            if !h.sin.is_zero() {
                terms.push(Term {
                    coeff: &h.sin,
                    basis: Some(("sin", k)),
                });
            }
        }
        for (i, term) in terms.iter().enumerate() {
            let mag = term.coeff.abs();
            if i == 0 {
                if term.coeff.is_negative() {
                    write!(f, "-")?;
                }
            } else if term.coeff.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            match term.basis {
                None => write!(f, "{mag}")?,
                Some((name, k)) => {
                    if mag != Rational::one() {
                        write!(f, "{mag}*")?;
                    }
                    write!(f, "{name}({k}t)")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn canonical_form_drops_zero_harmonics() {
        let p = TrigPoly::cos(2, r(1, 2));
        let q = &p - &p;
        assert!(q.is_zero());
        assert_eq!(q, TrigPoly::zero());
        assert_eq!(q.max_harmonic(), 0);
    }

    #[test]
    fn zero_frequency_folds_into_constant() {
        assert_eq!(TrigPoly::cos(0, r(3, 4)), TrigPoly::constant(r(3, 4)));
        assert!(TrigPoly::sin(0, r(3, 4)).is_zero());
    }

    #[test]
    fn product_to_sum_squares() {
        // cos^2(2t) = 1/2 + cos(4t)/2
        let c2 = TrigPoly::cos(2, r(1, 1));
        let sq = &c2 * &c2;
        let expected = &TrigPoly::constant(r(1, 2)) + &TrigPoly::cos(4, r(1, 2));
        assert_eq!(sq, expected);
        // sin^2(2t) = 1/2 - cos(4t)/2, so the two squares sum to 1
        let s2 = TrigPoly::sin(2, r(1, 1));
        let one = &sq + &(&s2 * &s2);
        assert_eq!(one, TrigPoly::constant(r(1, 1)));
    }

    #[test]
    fn product_handles_difference_frequencies() {
        // sin(3t) cos(t) = sin(4t)/2 + sin(2t)/2
        let p = &TrigPoly::sin(3, r(1, 1)) * &TrigPoly::cos(1, r(1, 1));
        let expected = &TrigPoly::sin(4, r(1, 2)) + &TrigPoly::sin(2, r(1, 2));
        assert_eq!(p, expected);
        // cos(t) sin(3t) must agree (sin(k-m) flips sign with the order)
        let q = &TrigPoly::cos(1, r(1, 1)) * &TrigPoly::sin(3, r(1, 1));
        assert_eq!(q, expected);
    }

    #[test]
    fn derivative_and_antiderivative_invert_on_fluctuating_parts() {
        let p = &TrigPoly::cos(2, r(-1, 4)) + &TrigPoly::sin(6, r(5, 3));
        let back = p.derivative().antiderivative_zero_mean().unwrap();
        assert_eq!(back, p);
        let forward = p.antiderivative_zero_mean().unwrap().derivative();
        assert_eq!(forward, p);
    }

    #[test]
    fn antiderivative_rejects_nonzero_mean() {
        let p = TrigPoly::constant(r(1, 3));
        assert!(matches!(
            p.antiderivative_zero_mean(),
            Err(AlgebraError::NonzeroMean { .. })
        ));
    }

    #[test]
    fn average_and_fluctuating_split() {
        let p = &TrigPoly::constant(r(2, 1)) + &TrigPoly::sin(2, r(1, 1));
        assert_eq!(p.average(), r(2, 1));
        assert_eq!(p.fluctuating(), TrigPoly::sin(2, r(1, 1)));
        assert_eq!(
            &TrigPoly::constant(p.average()) + &p.fluctuating(),
            p
        );
    }

    #[test]
    fn eval_matches_hand_computation() {
        // 1/2 - cos(2t)/4 at t = 0.3
        let p = &TrigPoly::constant(r(1, 2)) + &TrigPoly::cos(2, r(-1, 4));
        let expected = 0.5 - 0.25 * (0.6f64).cos();
        assert!((p.eval(0.3) - expected).abs() < 1e-15);
    }

    #[test]
    fn display_is_readable() {
        let p = &TrigPoly::constant(r(1, 2)) + &TrigPoly::cos(2, r(-1, 4));
        assert_eq!(p.to_string(), "1/2 - 1/4*cos(2t)");
        assert_eq!(TrigPoly::sin(2, r(-1, 4)).to_string(), "-1/4*sin(2t)");
        assert_eq!(TrigPoly::cos(4, r(1, 1)).to_string(), "cos(4t)");
        assert_eq!(TrigPoly::zero().to_string(), "0");
    }
}
