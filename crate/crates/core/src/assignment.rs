//! Minimum-cost perfect assignment over exact rationals with forbidden entries.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Square cost matrix; `None` marks a forbidden (infinite-cost) entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignmentCosts {
    entries: Vec<Vec<Option<Rational>>>,
}

impl AssignmentCosts {
    pub fn new(entries: Vec<Vec<Option<Rational>>>) -> Result<Self> {
        let n = entries.len();
        if entries.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidParameter("assignment matrix must be square".into()));
        }
        Ok(Self { entries })
    }

    pub fn from_finite(entries: Vec<Vec<Rational>>) -> Result<Self> {
        Self::new(
            entries
                .into_iter()
                .map(|row| row.into_iter().map(Some).collect())
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&Rational> {
        self.entries[row][col].as_ref()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| (0..i).all(|j| self.entries[i][j] == self.entries[j][i]))
    }

    /// Total cost of a permutation, `None` if it uses a forbidden entry.
    pub fn total(&self, permutation: &[usize]) -> Option<Rational> {
        permutation
            .iter()
            .enumerate()
            .map(|(i, &j)| self.get(i, j).cloned())
            .sum()
    }
}

/// Hungarian algorithm with row/column potentials, O(n^3).
///
/// Returns `assignment[row] = col` and the minimum total. Fails only when no
/// finite assignment exists.
pub fn solve_assignment(costs: &AssignmentCosts) -> Result<(Vec<usize>, Rational)> {
    let n = costs.len();
    // 1-based potentials and matches; column 0 is a sentinel.
    let mut u = vec![Rational::zero(); n + 1];
    let mut v = vec![Rational::zero(); n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        let mut minv: Vec<Option<Rational>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta: Option<Rational> = None;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                if let Some(c) = costs.get(i0 - 1, j - 1) {
                    let reduced = c - &u[i0] - &v[j];
                    if minv[j].as_ref().map_or(true, |m| reduced < *m) {
                        minv[j] = Some(reduced);
                        way[j] = j0;
                    }
                }
                if let Some(m) = &minv[j] {
                    if delta.as_ref().map_or(true, |d| m < d) {
                        delta = Some(m.clone());
                        j1 = j;
                    }
                }
            }
            let delta = delta.ok_or_else(|| {
                Error::InvalidParameter("no finite-cost assignment exists".into())
            })?;
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += &delta;
                    v[j] -= &delta;
                } else if let Some(m) = minv[j].as_mut() {
                    *m -= &delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    let total = costs.total(&assignment).expect("assignment avoids forbidden entries");
    Ok((assignment, total))
}
