//! The additive group F_q^D with points encoded as integers.
//!
//! A point `(x_1, ..., x_D)` is encoded as `x_1 q^{D-1} + ... + x_D`, so the
//! numeric order of encodings is the lexicographic order of coordinates.
//! Because every coordinate is itself a base-p digit string, the whole
//! encoding is a base-p digit string of length nD and point addition is
//! digit-wise addition mod p.

use crate::error::{Error, Result};
use crate::field::FieldContext;

#[derive(Debug, Clone, Copy)]
pub struct AffineSpace<'a> {
    field: &'a FieldContext,
    dim: usize,
    size: usize,
    digits: usize,
}

impl<'a> AffineSpace<'a> {
    /// Fails when q^D does not fit the given limit.
    pub fn new(field: &'a FieldContext, dim: usize, limit: u128) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionTooSmall(0, 1));
        }
        let size = (field.q() as u128)
            .checked_pow(dim as u32)
            .unwrap_or(u128::MAX);
        if size > limit {
            return Err(Error::SearchSpaceTooLarge { size, limit });
        }
        Ok(AffineSpace {
            field,
            dim,
            size: size as usize,
            digits: dim * field.n() as usize,
        })
    }

    pub fn field(&self) -> &'a FieldContext {
        self.field
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    /// Number of points, q^D.
    pub fn size(&self) -> usize {
        self.size
    }
    /// Number of base-p digits in an encoding.
    pub fn digit_count(&self) -> usize {
        self.digits
    }

    pub fn encode(&self, coords: &[u32]) -> usize {
        debug_assert_eq!(coords.len(), self.dim);
        let q = self.field.q() as usize;
        coords.iter().fold(0usize, |acc, &c| acc * q + c as usize)
    }

    pub fn try_encode(&self, coords: &[u32]) -> Result<usize> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: coords.len(),
            });
        }
        for &c in coords {
            self.field.check(c as u64)?;
        }
        Ok(self.encode(coords))
    }

    pub fn decode_into(&self, mut x: usize, out: &mut [u32]) {
        let q = self.field.q() as usize;
        for slot in out.iter_mut().rev() {
            *slot = (x % q) as u32;
            x /= q;
        }
    }

    pub fn decode(&self, x: usize) -> Vec<u32> {
        let mut out = vec![0; self.dim];
        self.decode_into(x, &mut out);
        out
    }

    pub fn digits_of(&self, mut x: usize, out: &mut [u32]) {
        let p = self.field.p() as usize;
        for slot in out.iter_mut() {
            *slot = (x % p) as u32;
            x /= p;
        }
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        let p = self.field.p() as usize;
        let (mut a, mut b) = (a, b);
        let mut out = 0;
        let mut scale = 1;
        for _ in 0..self.digits {
            out += ((a % p + b % p) % p) * scale;
            scale *= p;
            a /= p;
            b /= p;
        }
        out
    }

    pub fn neg(&self, a: usize) -> usize {
        let p = self.field.p() as usize;
        let mut a = a;
        let mut out = 0;
        let mut scale = 1;
        for _ in 0..self.digits {
            out += ((p - a % p) % p) * scale;
            scale *= p;
            a /= p;
        }
        out
    }

    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    /// Digit-wise sum of a decoded digit vector with another, re-encoded.
    pub(crate) fn add_digits(&self, a: &[u32], b: &[u32]) -> usize {
        let p = self.field.p();
        let mut out = 0usize;
        for i in (0..self.digits).rev() {
            let s = a[i] + b[i];
            out = out * p as usize + if s >= p { s - p } else { s } as usize;
        }
        out
    }

    /// Dot product m . x in F_q of two coordinate vectors.
    pub fn dot(&self, m: &[u32], x: &[u32]) -> u32 {
        let f = self.field;
        m.iter()
            .zip(x)
            .fold(0, |acc, (&a, &b)| f.add(acc, f.mul(a, b)))
    }

    /// Checks that every encoding is in range and that there are no duplicates.
    /// Returns the points sorted.
    pub fn validate_set(&self, points: &[usize]) -> Result<Vec<usize>> {
        let mut v = points.to_vec();
        v.sort_unstable();
        for w in v.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicatePoint(w[0]));
            }
        }
        if let Some(&last) = v.last() {
            if last >= self.size {
                return Err(Error::PointOutOfRange {
                    point: last,
                    size: self.size,
                });
            }
        }
        Ok(v)
    }
}
