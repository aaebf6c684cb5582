//! Pairwise result types shared by every kernel.

/// Integer counts for one variable pair.
///
/// `numerator` is n_c − n_d. The tie sums follow the usual convention:
/// `n1`/`n2` are Σ t(t−1)/2 over tie groups of u / v and `n3` the same sum
/// over joint (u, v) tie groups.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct TauCounts {
    pub n0: u64,
    pub n1: u64,
    pub n2: u64,
    pub n3: u64,
    pub n_d: u64,
    pub numerator: i64,
}

impl TauCounts {
    /// Assembles the counts of a sorting kernel, deriving the numerator as
    /// n0 − n1 − n2 + n3 − 2·n_d.
    pub fn from_tie_sums(n: usize, n1: u64, n2: u64, n3: u64, n_d: u64) -> Self {
        let n0 = pair_count(n);
        let numerator = n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * n_d as i64;
        TauCounts {
            n0,
            n1,
            n2,
            n3,
            n_d,
            numerator,
        }
    }

    pub fn is_defined_b(&self) -> bool {
        self.n0 > 0 && self.n1 < self.n0 && self.n2 < self.n0
    }
}

/// n(n−1)/2
pub fn pair_count(n: usize) -> u64 {
    let n = n as u64;
    if n < 2 {
        0
    } else {
        n * (n - 1) / 2
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TauResult {
    pub counts: TauCounts,
    pub tau_a: f64,
    /// Quiet NaN when undefined (constant vector) or not computed (naive kernel).
    pub tau_b: f64,
    pub defined_b: bool,
}

/// Bitwise on the float fields, so undefined results compare equal.
impl PartialEq for TauResult {
    fn eq(&self, other: &Self) -> bool {
        self.counts == other.counts
            && self.tau_a.to_bits() == other.tau_a.to_bits()
            && self.tau_b.to_bits() == other.tau_b.to_bits()
            && self.defined_b == other.defined_b
    }
}

impl TauResult {
    pub fn from_counts(counts: TauCounts) -> Self {
        let tau_a = if counts.n0 == 0 {
            f64::NAN
        } else {
            counts.numerator as f64 / counts.n0 as f64
        };
        let defined_b = counts.is_defined_b();
        let tau_b = if defined_b {
            let a = counts.n0 - counts.n1;
            let b = counts.n0 - counts.n2;
            let denom = if a == b {
                a as f64
            } else {
                ((a as u128 * b as u128) as f64).sqrt()
            };
            (counts.numerator as f64 / denom).clamp(-1.0, 1.0)
        } else {
            f64::NAN
        };
        TauResult {
            counts,
            tau_a,
            tau_b,
            defined_b,
        }
    }

    /// Result of the quadratic kernel, which only knows n_c − n_d.
    /// Tie sums stay zero and `tau_b` is NaN; `defined_b` only says that
    /// τ-a exists (n ≥ 2).
    pub fn tau_a_only(n: usize, numerator: i64) -> Self {
        let n0 = pair_count(n);
        let counts = TauCounts {
            n0,
            numerator,
            ..TauCounts::default()
        };
        TauResult {
            counts,
            tau_a: if n0 == 0 {
                f64::NAN
            } else {
                numerator as f64 / n0 as f64
            },
            tau_b: f64::NAN,
            defined_b: n0 > 0,
        }
    }

    pub fn numerator(&self) -> i64 {
        self.counts.numerator
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_holds_for_hand_counts() {
        // u=[1,1,2], v=[1,2,2]
        let c = TauCounts::from_tie_sums(3, 1, 1, 0, 0);
        assert_eq!(c.n0, 3);
        assert_eq!(c.numerator, 1);
        let r = TauResult::from_counts(c);
        assert!(r.defined_b);
        assert_eq!(r.tau_b, 0.5);
        assert_eq!(r.tau_a, 1.0 / 3.0);
    }

    #[test]
    fn constant_vector_is_undefined() {
        // u constant over 4 observations: n1 = n0 = 6
        let c = TauCounts::from_tie_sums(4, 6, 0, 0, 0);
        let r = TauResult::from_counts(c);
        assert!(!r.defined_b);
        assert!(r.tau_b.is_nan());
        assert_eq!(r.tau_a, 0.0);
    }

    #[test]
    fn self_correlation_is_exactly_one() {
        // large tie-free n where n0² is not exactly representable
        let n = 32767;
        let c = TauCounts::from_tie_sums(n, 0, 0, 0, 0);
        assert_eq!(TauResult::from_counts(c).tau_b, 1.0);
    }
}
