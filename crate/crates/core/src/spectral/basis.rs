use std::ops::Range;

use crate::error::{Error, Result};

/// Frequency vector padded with zeros past the torus dimension.
pub type Wavevector = [i32; 3];

/// Ordered eigenpairs `(k, |k|^2)` of `-Δ` on the `d`-torus.
///
/// Modes are sorted by eigenvalue, ties broken by lexicographic order on
/// `k`, so the ordering is a pure function of the dimension. The cutoff `N`
/// keeps indices `0..=N`; with `full_shell` the last eigenvalue shell is
/// completed so the truncation commutes with the lattice symmetries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeBasis {
    dim: usize,
    cutoff: usize,
    full_shell: bool,
    modes: Vec<Wavevector>,
    eigenvalues: Vec<u32>,
    shells: Vec<Range<usize>>,
    shell_of: Vec<usize>,
}

impl ModeBasis {
    pub fn new(dim: usize, cutoff: usize, full_shell: bool) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if cutoff < 1 {
            return Err(crate::error::invalid("cutoff N must be at least 1"));
        }
        let (mut modes, radius) = enumerate_until(dim, cutoff + 1);
        modes.retain(|k| norm2(k) <= radius * radius);
        modes.sort_by_key(|k| (norm2(k), *k));

        let mut len = cutoff + 1;
        if full_shell {
            let edge = norm2(&modes[cutoff]);
            while len < modes.len() && norm2(&modes[len]) == edge {
                len += 1;
            }
        }
        modes.truncate(len);
        let eigenvalues: Vec<u32> = modes.iter().map(norm2).collect();

        let mut shells = Vec::new();
        let mut start = 0;
        for i in 0..len {
            if i + 1 == len || eigenvalues[i + 1] != eigenvalues[i] {
                shells.push(start..i + 1);
                start = i + 1;
            }
        }
        let mut shell_of = vec![0; len];
        for (s, r) in shells.iter().enumerate() {
            shell_of[r.clone()].fill(s);
        }

        Ok(Self {
            dim,
            cutoff,
            full_shell,
            modes,
            eigenvalues,
            shells,
            shell_of,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn full_shell(&self) -> bool {
        self.full_shell
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn wavevector(&self, index: usize) -> Wavevector {
        self.modes[index]
    }

    pub fn wavevectors(&self) -> &[Wavevector] {
        &self.modes
    }

    pub fn eigenvalue(&self, index: usize) -> f64 {
        f64::from(self.eigenvalues[index])
    }

    pub fn eigenvalues(&self) -> impl Iterator<Item = f64> + '_ {
        self.eigenvalues.iter().map(|&l| f64::from(l))
    }

    /// Index ranges of equal eigenvalue.
    pub fn shells(&self) -> &[Range<usize>] {
        &self.shells
    }

    pub fn shell_of(&self, index: usize) -> usize {
        self.shell_of[index]
    }

    /// Largest eigenvalue kept, `λ_N`.
    pub fn top_eigenvalue(&self) -> f64 {
        self.eigenvalue(self.len() - 1)
    }

    /// Largest `|k_i|` over all kept modes and axes.
    pub fn max_frequency(&self) -> usize {
        self.modes
            .iter()
            .flat_map(|k| k.iter())
            .map(|c| c.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Number of leading modes kept by `P_n` on this basis.
    pub fn truncation_len(&self, n: usize) -> usize {
        if n + 1 >= self.len() {
            return self.len();
        }
        if self.full_shell {
            self.shells[self.shell_of[n]].end
        } else {
            n + 1
        }
    }

    pub fn index_of(&self, k: &Wavevector) -> Option<usize> {
        let key = (norm2(k), *k);
        self.modes
            .binary_search_by(|m| (norm2(m), *m).cmp(&key))
            .ok()
    }

    /// True when `other` is a leading prefix of this basis (same ordering).
    pub fn extends(&self, other: &ModeBasis) -> bool {
        self.dim == other.dim
            && other.len() <= self.len()
            && self.modes[..other.len()] == other.modes[..]
    }
}

fn norm2(k: &Wavevector) -> u32 {
    k.iter().map(|&c| (c * c) as u32).sum()
}

/// All lattice points of the cube `[-r, r]^d` for the smallest doubling `r`
/// whose inscribed ball holds at least `count` points. Returns the points and `r`.
fn enumerate_until(dim: usize, count: usize) -> (Vec<Wavevector>, u32) {
    let mut radius: i32 = 1;
    loop {
        let mut pts = Vec::new();
        let r = radius;
        let range = -r..=r;
        match dim {
            1 => {
                for a in range.clone() {
                    pts.push([a, 0, 0]);
                }
            }
            2 => {
                for a in range.clone() {
                    for b in range.clone() {
                        pts.push([a, b, 0]);
                    }
                }
            }
            _ => {
                for a in range.clone() {
                    for b in range.clone() {
                        for c in range.clone() {
                            pts.push([a, b, c]);
                        }
                    }
                }
            }
        }
        let r2 = (r * r) as u32;
        if pts.iter().filter(|k| norm2(k) <= r2).count() > count {
            return (pts, r as u32);
        }
        radius *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_eigenvalues() {
        let b = ModeBasis::new(1, 6, false).unwrap();
        let l: Vec<f64> = b.eigenvalues().collect();
        assert_eq!(l, vec![0.0, 1.0, 1.0, 4.0, 4.0, 9.0, 9.0]);
        assert_eq!(b.wavevector(1), [-1, 0, 0]);
        assert_eq!(b.wavevector(2), [1, 0, 0]);
    }

    #[test]
    fn three_dimensional_first_shell() {
        let b = ModeBasis::new(3, 1, true).unwrap();
        assert_eq!(b.len(), 7);
        assert_eq!(b.wavevector(0), [0, 0, 0]);
        assert_eq!(b.shells()[1], 1..7);
        assert!((1..7).all(|i| b.eigenvalue(i) == 1.0));
    }

    #[test]
    fn count_below_nine_matches_enumeration() {
        // brute force over the cube [-3,3]^3
        let mut brute = 0;
        for a in -3i32..=3 {
            for b in -3i32..=3 {
                for c in -3i32..=3 {
                    if a * a + b * b + c * c <= 9 {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(brute, 123);
        let b = ModeBasis::new(3, 1, true).unwrap();
        let big = ModeBasis::new(3, 200, true).unwrap();
        assert!(b.len() < brute);
        let count = big.eigenvalues().filter(|&l| l <= 9.0).count();
        assert_eq!(count, brute);
    }

    #[test]
    fn rejects_bad_dimension() {
        assert!(matches!(
            ModeBasis::new(4, 3, true),
            Err(Error::UnsupportedDimension(4))
        ));
    }

    #[test]
    fn full_shell_never_splits_a_shell() {
        for d in 1..=3 {
            for n in 1..40 {
                let b = ModeBasis::new(d, n, true).unwrap();
                let next = ModeBasis::new(d, b.len() + 5, true).unwrap();
                assert!(next.extends(&b));
                let cut = b.len();
                assert_ne!(next.eigenvalue(cut), b.top_eigenvalue());
            }
        }
    }

    #[test]
    fn index_cutoff_keeps_exact_count() {
        let b = ModeBasis::new(2, 3, false).unwrap();
        assert_eq!(b.len(), 4);
        let full = ModeBasis::new(2, 3, true).unwrap();
        assert_eq!(full.len(), 5);
    }

    #[test]
    fn ordering_is_sorted_and_lexicographic() {
        let b = ModeBasis::new(3, 300, true).unwrap();
        for w in b.wavevectors().windows(2) {
            let (l0, l1) = (norm2(&w[0]), norm2(&w[1]));
            assert!(l0 < l1 || (l0 == l1 && w[0] < w[1]));
        }
        for i in 0..b.len() {
            assert_eq!(b.index_of(&b.wavevector(i)), Some(i));
        }
    }

    #[test]
    fn weyl_ratio_bounded_in_three_dimensions() {
        let b = ModeBasis::new(3, 2000, true).unwrap();
        for m in 10..b.len() {
            let ratio = b.eigenvalue(m) / (m as f64).powf(2.0 / 3.0);
            assert!(ratio > 0.2 && ratio < 1.0, "m={m} ratio={ratio}");
        }
    }

    #[test]
    fn truncation_len_respects_shells() {
        let b = ModeBasis::new(1, 8, true).unwrap();
        assert_eq!(b.truncation_len(1), 3);
        assert_eq!(b.truncation_len(2), 3);
        assert_eq!(b.truncation_len(3), 5);
        let idx = ModeBasis::new(1, 8, false).unwrap();
        assert_eq!(idx.truncation_len(1), 2);
    }
}
