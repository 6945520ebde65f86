//! Dense least squares via Householder QR with column pivoting.
//!
//! Solves `min ||A x - b||` for tall-thin systems. Rank-deficient systems get
//! the minimum-norm solution through a complete orthogonal decomposition:
//! column-pivoted QR from the left, then Householder reflections applied from
//! the right to the leading `rank` rows.

use crate::num::{real, Real};

/// Row-major dense matrix.
#[derive(Debug, Clone)]
pub(crate) struct Mat<S> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<S>,
}

impl<S: Real> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> S {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut S {
        &mut self.data[r * self.cols + c]
    }
}

/// Least-squares outcome: solution, numerical rank, column count.
#[derive(Debug, Clone)]
pub(crate) struct LstsqSolution<S> {
    pub x: Vec<S>,
    pub rank: usize,
}

/// Minimum-norm least squares for `A x ~ b` (`A` is consumed as workspace).
///
/// Rank is decided against `eps * max_column_norm * max(rows, cols)`.
pub(crate) fn lstsq_min_norm<S: Real>(mut a: Mat<S>, mut b: Vec<S>) -> LstsqSolution<S> {
    let n = a.rows;
    let p = a.cols;
    assert_eq!(b.len(), n, "rhs length must match row count");
    let kmax = n.min(p);

    // Column-pivoted Householder QR: A P = Q R, Q' applied to b in place.
    let mut perm: Vec<usize> = (0..p).collect();
    let mut col_norms: Vec<S> = (0..p)
        .map(|c| (0..n).map(|r| a.at(r, c) * a.at(r, c)).sum::<S>())
        .collect();
    let norm_floor = col_norms.iter().copied().fold(S::zero(), S::max).sqrt()
        * S::epsilon()
        * real(n.max(p) as f64);
    let mut rank = 0;

    for k in 0..kmax {
        // Pivot: remaining column with the largest recomputed norm.
        let (pivot, pivot_norm) = (k..p)
            .map(|c| ((k..n).map(|r| a.at(r, c) * a.at(r, c)).sum::<S>(), c))
            .fold((S::neg_infinity(), k), |(best, bi), (norm, c)| {
                if norm > best {
                    (norm, c)
                } else {
                    (best, bi)
                }
            });
        let (pivot, pivot_norm) = (pivot_norm, pivot);
        if pivot != k {
            for r in 0..n {
                let tmp = a.at(r, k);
                *a.at_mut(r, k) = a.at(r, pivot);
                *a.at_mut(r, pivot) = tmp;
            }
            perm.swap(k, pivot);
            col_norms.swap(k, pivot);
        }
        if pivot_norm.sqrt() <= norm_floor {
            break;
        }
        rank = k + 1;

        // Householder vector for column k below the diagonal.
        let alpha = pivot_norm.sqrt() * -a.at(k, k).signum();
        let mut v = vec![S::zero(); n - k];
        v[0] = a.at(k, k) - alpha;
        for r in (k + 1)..n {
            v[r - k] = a.at(r, k);
        }
        let vnorm2: S = v.iter().map(|&x| x * x).sum();
        *a.at_mut(k, k) = alpha;
        for r in (k + 1)..n {
            *a.at_mut(r, k) = S::zero();
        }
        if vnorm2 > S::zero() {
            let two = real::<S>(2.0);
            for c in (k + 1)..p {
                let dot: S = (k..n).map(|r| v[r - k] * a.at(r, c)).sum();
                let scale = two * dot / vnorm2;
                for r in k..n {
                    *a.at_mut(r, c) = a.at(r, c) - scale * v[r - k];
                }
            }
            let dot: S = (k..n).map(|r| v[r - k] * b[r]).sum();
            let scale = two * dot / vnorm2;
            for r in k..n {
                b[r] = b[r] - scale * v[r - k];
            }
        }
    }

    let mut y = vec![S::zero(); p];
    if rank == p {
        // Full column rank: back-substitute R y = Q'b.
        for i in (0..rank).rev() {
            let mut acc = b[i];
            for j in (i + 1)..rank {
                acc = acc - a.at(i, j) * y[j];
            }
            y[i] = acc / a.at(i, i);
        }
    } else if rank > 0 {
        // Complete the decomposition. Let L = [R11 R12] (rank x p, full row
        // rank). QR-factor its transpose, L' = Z [T; 0] with T upper
        // triangular, so L = [T' 0] Z'. The consistent system L y = c then
        // reads T' w = c with w = Z' y, and the minimum-norm solution is
        // y = Z [w; 0].
        let r = rank;
        let mut lt = Mat::zeros(p, r);
        for i in 0..r {
            for j in 0..p {
                *lt.at_mut(j, i) = a.at(i, j);
            }
        }
        let two = real::<S>(2.0);
        let mut reflectors: Vec<Vec<S>> = Vec::with_capacity(r);
        for k in 0..r {
            let norm2: S = (k..p).map(|row| lt.at(row, k) * lt.at(row, k)).sum();
            let alpha = norm2.sqrt() * -lt.at(k, k).signum();
            let mut v = vec![S::zero(); p - k];
            v[0] = lt.at(k, k) - alpha;
            for row in (k + 1)..p {
                v[row - k] = lt.at(row, k);
            }
            let vnorm2: S = v.iter().map(|&x| x * x).sum();
            *lt.at_mut(k, k) = alpha;
            for row in (k + 1)..p {
                *lt.at_mut(row, k) = S::zero();
            }
            if vnorm2 > S::zero() {
                for col in (k + 1)..r {
                    let dot: S = (k..p).map(|row| v[row - k] * lt.at(row, col)).sum();
                    let scale = two * dot / vnorm2;
                    for row in k..p {
                        *lt.at_mut(row, col) = lt.at(row, col) - scale * v[row - k];
                    }
                }
            }
            reflectors.push(v);
        }
        // Forward-substitute T' w = c (T' is lower triangular with
        // T'[i][j] = lt[j][i]).
        let mut w = vec![S::zero(); r];
        for i in 0..r {
            let mut acc = b[i];
            for j in 0..i {
                acc = acc - lt.at(j, i) * w[j];
            }
            w[i] = acc / lt.at(i, i);
        }
        // y = Z [w; 0] = H_0 (H_1 (... H_{r-1} [w; 0])).
        y[..r].copy_from_slice(&w);
        for k in (0..r).rev() {
            let v = &reflectors[k];
            let vnorm2: S = v.iter().map(|&x| x * x).sum();
            if vnorm2 > S::zero() {
                let dot: S = (k..p).map(|j| v[j - k] * y[j]).sum();
                let scale = two * dot / vnorm2;
                for j in k..p {
                    y[j] = y[j] - scale * v[j - k];
                }
            }
        }
    }

    // Undo the column permutation.
    let mut x = vec![S::zero(); p];
    for (k, &orig) in perm.iter().enumerate() {
        x[orig] = y[k];
    }
    LstsqSolution { x, rank }
}
