//! Coefficient rings R = Z[S⁻¹] ⊆ Q, given by a finite set S of inverted
//! primes (or all of Q), together with the degree bound below which
//! multiplicative/Hopf structure is guaranteed to behave ("mild" range).

use crate::error::EngineError;
use crate::Q;
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;
use std::fmt;

/// A subring of Q: either all of Q, or Z with a finite set of primes inverted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoefficientRing {
    /// Q itself (every prime invertible).
    All,
    /// Z[S⁻¹] for the given set of primes S (empty set = Z).
    Localized(BTreeSet<u64>),
}

/// A possibly-infinite degree bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Finite(i64),
    Infinite,
}

impl Bound {
    pub fn at_least(self, n: i64) -> bool {
        match self {
            Bound::Finite(m) => m >= n,
            Bound::Infinite => true,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(m) => write!(f, "{m}"),
            Bound::Infinite => write!(f, "infinity"),
        }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl CoefficientRing {
    /// Build a ring from a list of inverted primes; rejects non-primes.
    pub fn localized(primes: &[u64]) -> Result<Self, EngineError> {
        let mut set = BTreeSet::new();
        for &p in primes {
            if !is_prime(p) {
                return Err(EngineError::validation(format!(
                    "inverted entry {p} is not prime"
                )));
            }
            set.insert(p);
        }
        Ok(CoefficientRing::Localized(set))
    }

    /// Smallest prime that is NOT invertible in R (∞ for Q itself).
    pub fn least_noninvertible_prime(&self) -> Bound {
        match self {
            CoefficientRing::All => Bound::Infinite,
            CoefficientRing::Localized(s) => {
                let mut p = 2u64;
                loop {
                    if is_prime(p) && !s.contains(&p) {
                        return Bound::Finite(p as i64);
                    }
                    p += 1;
                }
            }
        }
    }

    /// Is q an element of R, i.e. does its reduced denominator factor over
    /// the inverted primes?
    pub fn contains(&self, q: &Q) -> bool {
        self.violating_prime(q).is_none()
    }

    /// Smallest prime dividing the reduced denominator of q that is not
    /// invertible in R, if any.
    pub fn violating_prime(&self, q: &Q) -> Option<u64> {
        let mut den = q.denom().abs().to_biguint().expect("abs");
        if den.is_one() {
            return None;
        }
        if let CoefficientRing::Localized(s) = self {
            for &p in s {
                let bp = BigUint::from(p);
                while (&den % &bp).is_zero() {
                    den /= &bp;
                }
            }
        } else {
            return None; // All: every denominator allowed
        }
        if den.is_one() {
            return None;
        }
        // smallest prime factor of what is left
        let mut d = BigUint::from(2u64);
        loop {
            if (&den % &d).is_zero() {
                // factors of a u64-sized probe are enough for reporting; fall
                // back to the raw value if it exceeds u64 (still correct as a
                // divisor witness in practice for our inputs).
                let small: u64 = d.to_u64_digits().first().copied().unwrap_or(u64::MAX);
                return Some(small);
            }
            if &d * &d > den {
                let small: u64 = den.to_u64_digits().first().copied().unwrap_or(u64::MAX);
                return Some(small);
            }
            d += BigUint::one();
        }
    }

    /// True iff p (as BigInt) is invertible in R.
    pub fn unit_prime(&self, p: &BigInt) -> bool {
        match self {
            CoefficientRing::All => true,
            CoefficientRing::Localized(s) => {
                if let Some(u) = p.abs().to_biguint().and_then(|b| {
                    let ds = b.to_u64_digits();
                    if ds.len() == 1 {
                        Some(ds[0])
                    } else {
                        None
                    }
                }) {
                    s.contains(&u)
                } else {
                    false
                }
            }
        }
    }
}

impl fmt::Display for CoefficientRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientRing::All => write!(f, "all"),
            CoefficientRing::Localized(s) => {
                let v: Vec<String> = s.iter().map(|p| p.to_string()).collect();
                write!(f, "Z[1/{{{}}}]", v.join(","))
            }
        }
    }
}

/// Largest total degree in which the perturbation theory is uniformly tame
/// for a connected object whose first generator sits in degree r, over a ring
/// whose least non-invertible prime is p:
///
///   min(r + 2p - 3, rp - 1),   and ∞ when p = ∞.
pub fn mild_bound(r: i64, ring: &CoefficientRing) -> Bound {
    assert!(r >= 1, "connectivity must be at least 1");
    match ring.least_noninvertible_prime() {
        Bound::Infinite => Bound::Infinite,
        Bound::Finite(p) => Bound::Finite((r + 2 * p - 3).min(r * p - 1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> Q {
        Q::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn least_noninvertible() {
        let z = CoefficientRing::localized(&[]).unwrap();
        assert_eq!(z.least_noninvertible_prime(), Bound::Finite(2));
        let z23 = CoefficientRing::localized(&[2, 3]).unwrap();
        assert_eq!(z23.least_noninvertible_prime(), Bound::Finite(5));
        assert_eq!(
            CoefficientRing::All.least_noninvertible_prime(),
            Bound::Infinite
        );
    }

    #[test]
    fn rejects_nonprime() {
        let e = CoefficientRing::localized(&[4]).unwrap_err();
        assert!(e.to_string().contains("4"));
    }

    #[test]
    fn integrality_and_violating_prime() {
        let z = CoefficientRing::localized(&[]).unwrap();
        assert_eq!(z.violating_prime(&q(1, 2)), Some(2));
        assert!(z.contains(&q(7, 1)));
        let z2 = CoefficientRing::localized(&[2]).unwrap();
        assert!(z2.contains(&q(3, 8)));
        assert_eq!(z2.violating_prime(&q(1, 6)), Some(3));
        assert!(CoefficientRing::All.contains(&q(22, 7)));
    }

    #[test]
    fn mild_bound_values() {
        let ring_p2 = CoefficientRing::localized(&[]).unwrap(); // p = 2
        let ring_p3 = CoefficientRing::localized(&[2]).unwrap(); // p = 3
        let ring_p5 = CoefficientRing::localized(&[2, 3]).unwrap(); // p = 5
        assert_eq!(mild_bound(1, &ring_p2), Bound::Finite(1));
        assert_eq!(mild_bound(2, &ring_p2), Bound::Finite(3));
        assert_eq!(mild_bound(2, &ring_p3), Bound::Finite(5));
        assert_eq!(mild_bound(3, &ring_p5), Bound::Finite(10));
        assert_eq!(mild_bound(1, &CoefficientRing::All), Bound::Infinite);
    }
}
