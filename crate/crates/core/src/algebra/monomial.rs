use std::cmp::Ordering;

/// One monomial q^e * eta_{i_1}..eta_{i_l}: exponents for every even slot
/// plus a bitmask of odd slots.
///
/// The odd factor is always stored in ascending slot order (the canonical
/// form); products that would transpose odd variables carry the resulting
/// sign out to the caller instead of storing a sign here. Bit i of `etas`
/// is the odd partner of even slot i, which caps the algebra at 64 even
/// variables (enforced at model construction).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SuperMonomial {
    exps: Vec<u32>,
    etas: u64,
}

impl SuperMonomial {
    pub fn unit(width: usize) -> Self {
        SuperMonomial {
            exps: vec![0; width],
            etas: 0,
        }
    }

    pub fn new(exps: Vec<u32>, etas: u64) -> Self {
        SuperMonomial { exps, etas }
    }

    /// The even variable of `slot`, as a monomial.
    pub fn var(width: usize, slot: usize) -> Self {
        let mut exps = vec![0; width];
        exps[slot] = 1;
        SuperMonomial { exps, etas: 0 }
    }

    /// The odd variable of `slot`, as a monomial.
    pub fn eta(width: usize, slot: usize) -> Self {
        SuperMonomial {
            exps: vec![0; width],
            etas: 1 << slot,
        }
    }

    pub fn width(&self) -> usize {
        self.exps.len()
    }

    pub fn exponent(&self, slot: usize) -> u32 {
        self.exps[slot]
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    pub fn eta_mask(&self) -> u64 {
        self.etas
    }

    pub fn has_eta(&self, slot: usize) -> bool {
        self.etas & (1 << slot) != 0
    }

    /// Number of odd factors; the cohomological degree is its negative.
    pub fn eta_count(&self) -> u32 {
        self.etas.count_ones()
    }

    pub fn is_even(&self) -> bool {
        self.etas == 0
    }

    /// Total degree of the even part.
    pub fn q_degree(&self) -> u64 {
        self.exps.iter().map(|&e| e as u64).sum()
    }

    /// Iterator over odd slots present, ascending.
    pub fn eta_slots(&self) -> impl Iterator<Item = usize> + '_ {
        let mask = self.etas;
        (0..64).filter(move |i| mask & (1 << i) != 0)
    }

    /// True when the even part of `self` is divisible by the even part of
    /// `other` (odd parts must both be empty for Groebner use; not checked).
    pub fn divisible_by(&self, other: &Self) -> bool {
        self.exps
            .iter()
            .zip(other.exps.iter())
            .all(|(a, b)| a >= b)
    }

    /// Even-part quotient; caller guarantees divisibility.
    pub fn quotient(&self, other: &Self) -> Self {
        let exps = self
            .exps
            .iter()
            .zip(other.exps.iter())
            .map(|(a, b)| a - b)
            .collect();
        SuperMonomial {
            exps,
            etas: self.etas,
        }
    }

    /// Product with the Koszul sign. Returns `None` when an odd variable
    /// repeats; otherwise the merged monomial and whether the sign is negative.
    /// The sign is the parity of transpositions needed to merge the two
    /// ascending odd factors into one ascending sequence.
    pub fn mul(&self, other: &Self) -> Option<(Self, bool)> {
        if self.etas & other.etas != 0 {
            return None;
        }
        let exps = self
            .exps
            .iter()
            .zip(other.exps.iter())
            .map(|(a, b)| a + b)
            .collect();
        let mut inversions = 0u32;
        let mut rest = other.etas;
        while rest != 0 {
            let slot = rest.trailing_zeros();
            // factors of `self` above `slot` must be hopped over
            inversions += (self.etas >> (slot + 1)).count_ones();
            rest &= rest - 1;
        }
        Some((
            SuperMonomial {
                exps,
                etas: self.etas | other.etas,
            },
            inversions % 2 == 1,
        ))
    }

    /// Graded reverse lexicographic comparison of the even parts with
    /// precedence x0 > x1 > .. > xn > y1 > .. > yk, then the odd mask as a
    /// final tie-break so the result is a total order on monomials.
    ///
    /// `k` is the number of y slots; it fixes where the precedence list
    /// wraps, hence the comparison is contextual rather than an `Ord` impl.
    pub fn cmp_in(&self, other: &Self, k: usize) -> Ordering {
        let da = self.q_degree();
        let db = other.q_degree();
        if da != db {
            return da.cmp(&db);
        }
        // reverse scan of the precedence list: y_k..y_1, then x_n..x_0;
        // at the first difference the smaller exponent wins
        for slot in (0..k).rev() {
            if self.exps[slot] != other.exps[slot] {
                return other.exps[slot].cmp(&self.exps[slot]);
            }
        }
        for slot in (k..self.exps.len()).rev() {
            if self.exps[slot] != other.exps[slot] {
                return other.exps[slot].cmp(&self.exps[slot]);
            }
        }
        self.etas.cmp(&other.etas)
    }
}
