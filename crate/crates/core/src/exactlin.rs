//! Arithmetic over a prime field and dense exact linear algebra.
//!
//! Every rank reported anywhere in the crate comes from [`FMatrix::rank`].
//! Elements are plain `u64` residues in `0..p`; the modulus is kept below
//! 2^32 so a product of two residues fits a machine word.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 2^31 - 1.
pub const DEFAULT_PRIME: u64 = 2_147_483_647;

/// Largest modulus accepted by [`PrimeField::new`].
pub const MAX_MODULUS: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} does not fit single-word arithmetic (must be < 2^32)")]
    TooLarge(u64),
    #[error("field of characteristic {p} is too small: need p > {needed}")]
    FieldTooSmall { p: u64, needed: u64 },
}

/// The prime field `F_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeField {
    p: u64,
}

impl Default for PrimeField {
    fn default() -> Self {
        Self { p: DEFAULT_PRIME }
    }
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if p >= MAX_MODULUS {
            return Err(FieldError::TooLarge(p));
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(Self { p })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// Checks `p > bound`, the guard every builder needs before sampling
    /// `bound` distinct parameters or taking derivatives of order `bound`.
    pub fn require_above(&self, bound: u64) -> Result<(), FieldError> {
        if self.p > bound {
            Ok(())
        } else {
            Err(FieldError::FieldTooSmall {
                p: self.p,
                needed: bound,
            })
        }
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        x % self.p
    }

    pub fn from_i64(&self, x: i64) -> u64 {
        let r = x.rem_euclid(self.p as i64);
        r as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        (a * b) % self.p
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.p;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn inv(&self, a: u64) -> u64 {
        assert!(!a.is_multiple_of(self.p), "inverse of zero in F_{}", self.p);
        self.pow(a, self.p - 2)
    }

    pub fn is_square(&self, a: u64) -> bool {
        let a = a % self.p;
        a == 0 || self.p == 2 || self.pow(a, (self.p - 1) / 2) == 1
    }

    /// A square root of `a` if one exists (Tonelli-Shanks).
    pub fn sqrt(&self, a: u64) -> Option<u64> {
        let p = self.p;
        let a = a % p;
        if a == 0 || p == 2 {
            return Some(a);
        }
        if !self.is_square(a) {
            return None;
        }
        if p % 4 == 3 {
            return Some(self.pow(a, (p + 1) / 4));
        }
        let mut q = p - 1;
        let mut s = 0u32;
        while q.is_multiple_of(2) {
            q /= 2;
            s += 1;
        }
        let mut z = 2;
        while self.is_square(z) {
            z += 1;
        }
        let mut m = s;
        let mut c = self.pow(z, q);
        let mut t = self.pow(a, q);
        let mut r = self.pow(a, q.div_ceil(2));
        while t != 1 {
            let mut i = 0;
            let mut t2 = t;
            while t2 != 1 {
                t2 = self.mul(t2, t2);
                i += 1;
            }
            let b = self.pow(c, 1 << (m - i - 1));
            m = i;
            c = self.mul(b, b);
            t = self.mul(t, c);
            r = self.mul(r, b);
        }
        Some(r)
    }

    /// Dot product of two equal-length slices.
    pub fn dot(&self, a: &[u64], b: &[u64]) -> u64 {
        debug_assert_eq!(a.len(), b.len());
        a.iter()
            .zip(b)
            .fold(0, |acc, (&x, &y)| self.add(acc, self.mul(x, y)))
    }
}

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &q in &SMALL {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        b %= n;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    'witness: for &a in &SMALL {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Largest prime strictly below `n`, if any.
pub fn prev_prime(n: u64) -> Option<u64> {
    (2..n).rev().find(|&q| is_prime(q))
}

/// Dense row-major matrix of residues.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u64>,
}

impl FMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<u64>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entries must be rows * cols");
        Self {
            rows,
            cols,
            entries,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// An empty matrix with a fixed column count, to be filled by [`push_row`](Self::push_row).
    pub fn with_cols(cols: usize) -> Self {
        Self::zeros(0, cols)
    }

    /// Builds from rows of signed integers, reducing into `field`.
    pub fn from_rows<R: AsRef<[i64]>>(field: &PrimeField, rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            entries.extend(r.iter().map(|&x| field.from_i64(x)));
        }
        Self::new(rows.len(), cols, entries)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn push_row(&mut self, row: &[u64]) {
        assert_eq!(row.len(), self.cols, "row length mismatch");
        self.entries.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// `[self; other]`.
    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "column mismatch in vstack");
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Self::new(self.rows + other.rows, self.cols, entries)
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    fn rref_in_place(&mut self, field: &PrimeField) -> Vec<usize> {
        let (rows, cols) = (self.rows, self.cols);
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(pr) = (r..rows).find(|&i| self.get(i, c) != 0) else {
                continue;
            };
            if pr != r {
                for j in 0..cols {
                    self.entries.swap(pr * cols + j, r * cols + j);
                }
            }
            let inv = field.inv(self.get(r, c));
            for j in c..cols {
                let v = field.mul(self.get(r, j), inv);
                self.set(r, j, v);
            }
            let (head, tail) = self.entries.split_at_mut(r * cols);
            let (pivot_row, below) = tail.split_at_mut(cols);
            let eliminate = |row: &mut [u64]| {
                let f = row[c];
                if f != 0 {
                    let neg = field.neg(f);
                    for j in c..cols {
                        row[j] = (row[j] + neg * pivot_row[j]) % field.modulus();
                    }
                }
            };
            head.chunks_exact_mut(cols).for_each(&eliminate);
            below.chunks_exact_mut(cols).for_each(&eliminate);
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    /// Rank by forward elimination; pivots on the first nonzero entry.
    pub fn rank(&self, field: &PrimeField) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        let cols = self.cols;
        let p = field.modulus();
        let mut a = self.entries.clone();
        let mut rank = 0;
        for c in 0..cols {
            if rank == self.rows {
                break;
            }
            let Some(pr) = (rank..self.rows).find(|&i| a[i * cols + c] != 0) else {
                continue;
            };
            if pr != rank {
                for j in c..cols {
                    a.swap(pr * cols + j, rank * cols + j);
                }
            }
            let inv = field.inv(a[rank * cols + c]);
            for j in c..cols {
                a[rank * cols + j] = field.mul(a[rank * cols + j], inv);
            }
            let (top, below) = a.split_at_mut((rank + 1) * cols);
            let pivot_row = &top[rank * cols..];
            for row in below.chunks_exact_mut(cols) {
                let f = row[c];
                if f == 0 {
                    continue;
                }
                let neg = p - f;
                for (x, &y) in row[c..].iter_mut().zip(&pivot_row[c..]) {
                    *x = (*x + neg * y) % p;
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn kernel_dim(&self, field: &PrimeField) -> usize {
        self.cols - self.rank(field)
    }

    /// A basis of the right kernel `{x : M x = 0}`.
    pub fn nullspace(&self, field: &PrimeField) -> Vec<Vec<u64>> {
        let mut m = self.clone();
        let pivots = m.rref_in_place(field);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![0; self.cols];
                v[f] = 1;
                for (r, &pc) in pivots.iter().enumerate() {
                    v[pc] = field.neg(m.get(r, f));
                }
                v
            })
            .collect()
    }

    /// Matrix-vector product.
    pub fn apply(&self, field: &PrimeField, x: &[u64]) -> Vec<u64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| field.dot(self.row(r), x)).collect()
    }

    /// Inverse of a square matrix, or `None` if singular.
    pub fn inverse(&self, field: &PrimeField) -> Option<Self> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug.set(r, c, self.get(r, c));
            }
            aug.set(r, n + r, 1);
        }
        let pivots = aug.rref_in_place(field);
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let mut inv = Self::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                inv.set(r, c, aug.get(r, n + c));
            }
        }
        Some(inv)
    }
}
