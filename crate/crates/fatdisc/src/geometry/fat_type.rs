//! Existence constraints on the type `(k, n)` of a fat distribution:
//! rank `k`, manifold dimension `n`.

use crate::error::{Error, Result};

/// Radon-Hurwitz number: for `k = 2^(4a+b) * odd` with `0 <= b <= 3`,
/// `rho(k) = 8a + 2^b`. The sphere `S^(k-1)` admits exactly `rho(k) - 1`
/// pointwise independent vector fields.
pub fn radon_hurwitz(k: u64) -> Result<u64> {
    if k == 0 {
        return Err(Error::Domain("radon_hurwitz requires k >= 1".into()));
    }
    let m = k.trailing_zeros() as u64;
    let (a, b) = (m / 4, m % 4);
    Ok(8 * a + (1 << b))
}

/// One necessary condition on the type of a fat distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TypeConstraint {
    /// `k` must be even.
    RankEven,
    /// `k` must be divisible by 4 whenever `k < n - 1`.
    RankDivisibleByFour,
    /// `k >= (n - k) + 1`.
    RankAtLeastCorankPlusOne,
    /// `S^(k-1)` must admit `n - k` independent vector fields.
    SphereFields,
}

impl std::fmt::Display for TypeConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TypeConstraint::RankEven => "rank must be even",
            TypeConstraint::RankDivisibleByFour => {
                "rank must be divisible by 4 when k < n - 1"
            }
            TypeConstraint::RankAtLeastCorankPlusOne => "rank must satisfy k >= (n - k) + 1",
            TypeConstraint::SphereFields => {
                "S^(k-1) must admit n - k independent vector fields"
            }
        };
        f.write_str(s)
    }
}

/// Outcome of the type check: admissible iff no constraint failed.
#[derive(Clone, Debug)]
pub struct TypeCheck {
    pub k: u64,
    pub n: u64,
    pub rho: u64,
    pub failures: Vec<TypeConstraint>,
}

impl TypeCheck {
    pub fn admissible(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Check every necessary condition for a fat distribution of rank `k` on an
/// `n`-manifold with `k < n`.
pub fn check_type_constraints(k: u64, n: u64) -> Result<TypeCheck> {
    if k == 0 || n <= k {
        return Err(Error::Domain(format!(
            "type check requires 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    let rho = radon_hurwitz(k)?;
    let mut failures = Vec::new();
    if k % 2 != 0 {
        failures.push(TypeConstraint::RankEven);
    }
    if k < n - 1 && k % 4 != 0 {
        failures.push(TypeConstraint::RankDivisibleByFour);
    }
    if k < (n - k) + 1 {
        failures.push(TypeConstraint::RankAtLeastCorankPlusOne);
    }
    if n - k > rho - 1 {
        failures.push(TypeConstraint::SphereFields);
    }
    Ok(TypeCheck {
        k,
        n,
        rho,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independently tabulated values: rho(2^m) for m = 0..6 is
    /// (1, 2, 4, 8, 9, 10, 12), and rho(2^m * odd) = rho(2^m).
    fn rho_table(k: u64) -> u64 {
        const POW2: [u64; 7] = [1, 2, 4, 8, 9, 10, 12];
        let mut m = 0;
        let mut k = k;
        while k % 2 == 0 {
            k /= 2;
            m += 1;
        }
        POW2[m]
    }

    #[test]
    fn radon_hurwitz_matches_table_up_to_64() {
        for k in 1..=64 {
            assert_eq!(radon_hurwitz(k).unwrap(), rho_table(k), "k = {k}");
        }
    }

    #[test]
    fn corank_two_on_r6_is_admissible() {
        let check = check_type_constraints(4, 6).unwrap();
        assert!(check.admissible());
    }

    #[test]
    fn known_types_classify_correctly() {
        let cases = [
            (2u64, 4u64, false),
            (2, 3, true),
            (4, 7, true),
            (6, 8, false),
            (4, 6, true),
        ];
        for (k, n, expect) in cases {
            let check = check_type_constraints(k, n).unwrap();
            assert_eq!(check.admissible(), expect, "type ({k}, {n})");
        }
    }

    #[test]
    fn failing_constraint_is_named() {
        let check = check_type_constraints(2, 4).unwrap();
        assert!(check
            .failures
            .contains(&TypeConstraint::RankDivisibleByFour));
        let check = check_type_constraints(6, 8).unwrap();
        assert!(check
            .failures
            .contains(&TypeConstraint::RankDivisibleByFour));
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(check_type_constraints(0, 3).is_err());
        assert!(check_type_constraints(4, 4).is_err());
        assert!(radon_hurwitz(0).is_err());
    }
}
