//! Finite absorbing chains given by their sub-generator on the transient states.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

const SIGN_TOL: f64 = 1e-12;

/// Continuous-time chain on `{0, …, n-1} ∪ {∂}` described by the
/// sub-generator `Q` restricted to the transient states.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingChain {
    q: DMatrix<f64>,
    absorb_rate: DVector<f64>,
}

impl AbsorbingChain {
    /// Validates the sign pattern of `q` and derives the killing rates.
    ///
    /// Irreducibility is not required here; [`super::spectral`] rejects
    /// reducible chains since their QSD need not be unique.
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        let n = q.nrows();
        if n == 0 || !q.is_square() {
            return Err(Error::InvalidChain(
                "Q must be a non-empty square matrix".into(),
            ));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidChain("Q has non-finite entries".into()));
        }
        let mut absorb_rate = DVector::zeros(n);
        for i in 0..n {
            let row = q.row(i);
            let scale = row.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            for j in 0..n {
                if i != j && row[j] < 0.0 {
                    return Err(Error::InvalidChain(format!(
                        "Q[{i}][{j}] = {} is negative",
                        row[j]
                    )));
                }
            }
            let sum: f64 = row.iter().sum();
            if sum > SIGN_TOL * scale {
                return Err(Error::InvalidChain(format!("row {i} sums to {sum} > 0")));
            }
            absorb_rate[i] = (-sum).max(0.0);
        }
        if absorb_rate.iter().all(|&a| a == 0.0) {
            return Err(Error::InvalidChain(
                "no state has a positive absorption rate".into(),
            ));
        }
        Ok(Self { q, absorb_rate })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidChain("Q must be square".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// The symmetric two-state chain `[[-2, 1], [1, -2]]`.
    pub fn two_state_example() -> Self {
        Self::new(DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 1.0, -2.0])).expect("valid chain")
    }

    /// Random irreducible chain: off-diagonal rates uniform on [0, 1] and
    /// killing rates uniform on [0.1, 1], redrawn until irreducible.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        assert!(n >= 1, "need at least one state");
        loop {
            let mut q =
                DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { rng.random::<f64>() });
            for i in 0..n {
                let kill = rng.random_range(0.1..=1.0);
                let out: f64 = q.row(i).sum();
                q[(i, i)] = -(out + kill);
            }
            let chain = Self::new(q).expect("generated chains satisfy the sign pattern");
            if chain.is_irreducible() {
                return chain;
            }
        }
    }

    pub fn n_states(&self) -> usize {
        self.q.nrows()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn absorb_rate(&self) -> &DVector<f64> {
        &self.absorb_rate
    }

    /// Total jump rate out of `i`, including killing.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.q[(i, i)]
    }

    fn reaches_all(&self, transpose: bool) -> bool {
        let n = self.n_states();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for (j, seen_j) in seen.iter_mut().enumerate() {
                let rate = if transpose {
                    self.q[(j, i)]
                } else {
                    self.q[(i, j)]
                };
                if i != j && rate > 0.0 && !*seen_j {
                    *seen_j = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Strong connectivity of the transient states.
    pub fn is_irreducible(&self) -> bool {
        self.reaches_all(false) && self.reaches_all(true)
    }
}
