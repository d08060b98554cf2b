use std::fmt;

use super::{AlgebraError, Rational, TrigPoly};

/// Dense matrix of trigonometric polynomials, row-major. Shapes are checked
/// at run time and mismatches surface as [`AlgebraError`] values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrigMat {
    rows: usize,
    cols: usize,
    entries: Vec<TrigPoly>,
}

impl TrigMat {
    pub fn new(rows: usize, cols: usize, entries: Vec<TrigPoly>) -> Result<Self, AlgebraError> {
        if entries.len() != rows * cols {
            return Err(AlgebraError::BadEntryCount {
                rows,
                cols,
                given: entries.len(),
            });
        }
        Ok(TrigMat {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> TrigPoly) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        TrigMat {
            rows,
            cols,
            entries,
        }
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| TrigPoly::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                TrigPoly::constant(Rational::one())
            } else {
                TrigPoly::zero()
            }
        })
    }

    /// Assembles a square matrix from four equally sized square blocks.
    pub fn from_blocks(
        tl: &TrigMat,
        tr: &TrigMat,
        bl: &TrigMat,
        br: &TrigMat,
    ) -> Result<Self, AlgebraError> {
        let n = tl.rows;
        for block in [tl, tr, bl, br] {
            if block.rows != n || block.cols != n {
                return Err(AlgebraError::DimensionMismatch {
                    left_rows: n,
                    left_cols: n,
                    right_rows: block.rows,
                    right_cols: block.cols,
                });
            }
        }
        Ok(Self::from_fn(2 * n, 2 * n, |i, j| {
            let block = match (i < n, j < n) {
                (true, true) => tl,
                (true, false) => tr,
                (false, true) => bl,
                (false, false) => br,
            };
            block.entry(i % n, j % n).clone()
        }))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> &TrigPoly {
        assert!(i < self.rows && j < self.cols, "entry index out of range");
        &self.entries[i * self.cols + j]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(TrigPoly::is_zero)
    }

    /// Highest frequency appearing in any entry.
    pub fn max_harmonic(&self) -> u32 {
        self.entries
            .iter()
            .map(TrigPoly::max_harmonic)
            .max()
            .unwrap_or(0)
    }

    fn zip(&self, rhs: &TrigMat, f: impl Fn(&TrigPoly, &TrigPoly) -> TrigPoly) -> Result<Self, AlgebraError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(AlgebraError::DimensionMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: rhs.rows,
                right_cols: rhs.cols,
            });
        }
        Ok(Self::from_fn(self.rows, self.cols, |i, j| {
            f(self.entry(i, j), rhs.entry(i, j))
        }))
    }

    pub fn add(&self, rhs: &TrigMat) -> Result<Self, AlgebraError> {
        self.zip(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &TrigMat) -> Result<Self, AlgebraError> {
        self.zip(rhs, |a, b| a - b)
    }

    pub fn neg(&self) -> Self {
        self.map(|p| -p)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        self.map(|p| p.scale(c))
    }

    fn map(&self, f: impl Fn(&TrigPoly) -> TrigPoly) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| f(self.entry(i, j)))
    }

    pub fn mul(&self, rhs: &TrigMat) -> Result<Self, AlgebraError> {
        if self.cols != rhs.rows {
            return Err(AlgebraError::DimensionMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: rhs.rows,
                right_cols: rhs.cols,
            });
        }
        Ok(Self::from_fn(self.rows, rhs.cols, |i, j| {
            let mut acc = TrigPoly::zero();
            for k in 0..self.cols {
                acc = &acc + &(self.entry(i, k) * rhs.entry(k, j));
            }
            acc
        }))
    }

    /// `[a, b] = a b - b a`.
    pub fn commutator(a: &TrigMat, b: &TrigMat) -> Result<Self, AlgebraError> {
        a.mul(b)?.sub(&b.mul(a)?)
    }

    /// Entry-wise derivative.
    pub fn derivative(&self) -> Self {
        self.map(TrigPoly::derivative)
    }

    /// Entry-wise mean over one period.
    pub fn average(&self) -> Self {
        self.map(|p| TrigPoly::constant(p.average()))
    }

    /// Entry-wise oscillating part.
    pub fn fluctuating(&self) -> Self {
        self.map(TrigPoly::fluctuating)
    }

    /// Entry-wise zero-mean periodic antiderivative; fails if any entry has
    /// nonzero mean.
    pub fn antiderivative_zero_mean(&self) -> Result<Self, AlgebraError> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for p in &self.entries {
            entries.push(p.antiderivative_zero_mean()?);
        }
        Self::new(self.rows, self.cols, entries)
    }

    /// Numeric evaluation at `tau`, row-major rows.
    pub fn eval(&self, tau: f64) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.entry(i, j).eval(tau)).collect())
            .collect()
    }
}

impl fmt::Display for TrigMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.entry(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}
