//! Dense matrices of series.

use std::fmt;
use std::sync::Arc;

use super::coeff::CoeffRing;
use super::series::{InvertError, Series, EXACT};

#[derive(Clone, PartialEq, Eq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    entries: Vec<Series>,
}

impl Mat {
    pub fn zero(ring: &Arc<CoeffRing>, cap: i64, rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, entries: vec![Series::zero(ring, cap); rows * cols] }
    }

    pub fn identity(ring: &Arc<CoeffRing>, cap: i64, n: usize) -> Mat {
        let mut m = Mat::zero(ring, cap, n, n);
        for i in 0..n {
            m.set(i, i, Series::one(ring, cap));
        }
        m
    }

    pub fn scalar(s: &Series, n: usize) -> Mat {
        let mut m = Mat::zero(s.ring(), s.cap(), n, n);
        for i in 0..n {
            m.set(i, i, s.clone());
        }
        m
    }

    pub fn diagonal(diag: &[Series]) -> Mat {
        let n = diag.len();
        let mut m = Mat::zero(diag[0].ring(), diag[0].cap(), n, n);
        for (i, s) in diag.iter().enumerate() {
            m.set(i, i, s.clone());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Series>>) -> Mat {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let entries: Vec<Series> = rows.into_iter().flatten().collect();
        assert_eq!(entries.len(), r * c, "ragged matrix rows");
        Mat { rows: r, cols: c, entries }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Series) -> Mat {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Mat { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Series {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, s: Series) {
        self.entries[i * self.cols + j] = s;
    }

    pub fn entries(&self) -> &[Series] {
        &self.entries
    }

    pub fn ring(&self) -> &Arc<CoeffRing> {
        self.entries[0].ring()
    }

    pub fn cap(&self) -> i64 {
        self.entries[0].cap()
    }

    pub fn column(&self, j: usize) -> Vec<Series> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn map(&self, f: impl Fn(&Series) -> Series) -> Mat {
        Mat { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(f).collect() }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn neg(&self) -> Mat {
        self.map(|s| s.neg())
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matrix shape mismatch");
        let ring = self.ring().clone();
        let cap = self.cap().min(other.cap());
        Mat::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = Series::zero(&ring, cap);
            for k in 0..self.cols {
                let a = self.get(i, k);
                let b = other.get(k, j);
                if a.is_zero() && a.is_exact() || b.is_zero() && b.is_exact() {
                    continue;
                }
                acc = acc.add(&a.mul(b));
            }
            acc
        })
    }

    pub fn scale(&self, s: &Series) -> Mat {
        self.map(|x| x.mul(s))
    }

    pub fn scale_coeff(&self, a: &[u64]) -> Mat {
        self.map(|x| x.scale(a))
    }

    pub fn shift(&self, k: i64) -> Mat {
        self.map(|x| x.shift(k))
    }

    pub fn frobenius(&self, q: u64) -> Mat {
        self.map(|x| x.frobenius(q))
    }

    pub fn with_precision(&self, prec: i64) -> Mat {
        self.map(|x| x.with_precision(prec))
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn kron(&self, other: &Mat) -> Mat {
        Mat::from_fn(self.rows * other.rows, self.cols * other.cols, |i, j| {
            self.get(i / other.rows, j / other.cols).mul(other.get(i % other.rows, j % other.cols))
        })
    }

    pub fn block_diag(&self, other: &Mat) -> Mat {
        let ring = self.ring().clone();
        let cap = self.cap();
        Mat::from_fn(self.rows + other.rows, self.cols + other.cols, |i, j| {
            if i < self.rows && j < self.cols {
                self.get(i, j).clone()
            } else if i >= self.rows && j >= self.cols {
                other.get(i - self.rows, j - self.cols).clone()
            } else {
                Series::zero(&ring, cap)
            }
        })
    }

    /// Minimum precision over the entries.
    pub fn precision(&self) -> i64 {
        self.entries.iter().map(|s| s.precision()).min().unwrap_or(EXACT)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|s| s.is_zero())
    }

    pub fn is_integral(&self) -> bool {
        self.entries.iter().all(|s| s.is_integral())
    }

    pub fn eq_at_precision(&self, other: &Mat) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.sub(other).is_zero()
    }

    /// Smallest u-valuation among the entries; None if all vanish.
    pub fn valuation(&self) -> Option<i64> {
        self.entries.iter().filter_map(|s| s.valuation()).min()
    }

    /// Per column: smallest u-valuation of that column's entries.
    pub fn column_valuations(&self) -> Vec<Option<i64>> {
        (0..self.cols)
            .map(|j| (0..self.rows).filter_map(|i| self.get(i, j).valuation()).min())
            .collect()
    }

    pub fn det(&self) -> Series {
        assert!(self.is_square());
        let n = self.rows;
        let ring = self.ring().clone();
        let cap = self.cap();
        match n {
            0 => Series::one(&ring, cap),
            1 => self.get(0, 0).clone(),
            2 => self.get(0, 0).mul(self.get(1, 1)).sub(&self.get(0, 1).mul(self.get(1, 0))),
            _ => {
                // Laplace expansion along the first row
                let mut acc = Series::zero(&ring, cap);
                for j in 0..n {
                    let a = self.get(0, j);
                    if a.is_zero() && a.is_exact() {
                        continue;
                    }
                    let minor = Mat::from_fn(n - 1, n - 1, |r, c| {
                        let cc = if c < j { c } else { c + 1 };
                        self.get(r + 1, cc).clone()
                    });
                    let term = a.mul(&minor.det());
                    acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
                }
                acc
            }
        }
    }

    /// Inverse over the Laurent ring Λ((u)) by Gauss–Jordan elimination.
    ///
    /// The coefficient ring is local, so an entry is a unit exactly when one of its
    /// coefficients is; pivots minimize the degree of that unit coefficient.
    pub fn inverse_laurent(&self) -> Result<Mat, InvertError> {
        assert!(self.is_square());
        let n = self.rows;
        let ring = self.ring().clone();
        let cap = self.cap();
        let mut a = self.clone();
        let mut inv = Mat::identity(&ring, cap, n);
        for col in 0..n {
            let mut best: Option<(i64, usize)> = None;
            for r in col..n {
                if let Some(v) = a.get(r, col).unit_degree() {
                    if best.map_or(true, |(bv, _)| v < bv) {
                        best = Some((v, r));
                    }
                }
            }
            let Some((_, piv)) = best else {
                return Err(InvertError::NotInvertible {
                    valuation: a.get(col, col).valuation(),
                    precision: a.precision(),
                });
            };
            a.swap_rows(col, piv);
            inv.swap_rows(col, piv);
            let pinv = a.get(col, col).invert_laurent()?;
            a.scale_row(col, &pinv);
            inv.scale_row(col, &pinv);
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col).clone();
                if f.is_zero() && f.is_exact() {
                    continue;
                }
                a.sub_row_multiple(r, col, &f);
                inv.sub_row_multiple(r, col, &f);
            }
        }
        Ok(inv)
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.entries.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    pub fn scale_row(&mut self, r: usize, s: &Series) {
        for j in 0..self.cols {
            let v = self.get(r, j).mul(s);
            self.set(r, j, v);
        }
    }

    pub fn scale_col(&mut self, c: usize, s: &Series) {
        for i in 0..self.rows {
            let v = self.get(i, c).mul(s);
            self.set(i, c, v);
        }
    }

    /// row[target] -= f · row[src]
    pub fn sub_row_multiple(&mut self, target: usize, src: usize, f: &Series) {
        for j in 0..self.cols {
            let v = self.get(target, j).sub(&f.mul(self.get(src, j)));
            self.set(target, j, v);
        }
    }

    /// col[target] -= f · col[src]
    pub fn sub_col_multiple(&mut self, target: usize, src: usize, f: &Series) {
        for i in 0..self.rows {
            let v = self.get(i, target).sub(&self.get(i, src).mul(f));
            self.set(i, target, v);
        }
    }

    pub fn format(&self) -> String {
        let rows: Vec<String> = (0..self.rows)
            .map(|i| {
                let cells: Vec<String> = (0..self.cols).map(|j| self.get(i, j).format()).collect();
                format!("[{}]", cells.join(", "))
            })
            .collect();
        format!("[{}]", rows.join(", "))
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_height_one_matrix() {
        let r = Arc::new(CoeffRing::prime(3, 1));
        let cap = 24;
        // [[0, u], [1, 0]] over F_3
        let u = Series::u_pow(&r, cap, 1);
        let zero = Series::zero(&r, cap);
        let one = Series::one(&r, cap);
        let b = Mat::from_rows(vec![vec![zero.clone(), u.clone()], vec![one.clone(), zero]]);
        let inv = b.inverse_laurent().unwrap();
        assert!(b.mul(&inv).eq_at_precision(&Mat::identity(&r, cap, 2)));
        assert_eq!(inv.get(1, 0).valuation(), Some(-1));
        assert_eq!(b.det().terms(), vec![(1, vec![2])]);
    }

    #[test]
    fn three_by_three_det() {
        let r = Arc::new(CoeffRing::prime(7, 1));
        let cap = 16;
        let m = Mat::from_fn(3, 3, |i, j| Series::from_int(&r, cap, (i * 3 + j) as i64 + if i == j { 1 } else { 0 }));
        // det of [[1,1,2],[3,5,5],[6,7,9]] = -5
        assert_eq!(m.det().coeff(0), vec![2]);
    }
}
