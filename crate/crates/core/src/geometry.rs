//! Polynomials on F_q^d, their zero sets, and the regularity certificate.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FieldContext;
use crate::space::AffineSpace;
use crate::spectra::{self, SpectrumMethod};

/// Largest q^d that `enumerate_variety` will scan.
pub const ENUMERATION_LIMIT: u128 = 100_000_000;
/// Largest q^d accepted by `regularity_check`.
pub const REGULARITY_LIMIT: u128 = 10_000_000;
const MAX_TOTAL_DEGREE: u32 = 64;

/// Anything that maps a point of F_q^d to F_q.
pub trait PointFunction: Sync {
    fn dim(&self) -> usize;
    fn eval_coords(&self, field: &FieldContext, x: &[u32]) -> u32;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Term {
    pub coeff: u32,
    pub exps: Vec<u32>,
}

/// A polynomial in d variables given by its nonzero terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PolySpec {
    dim: usize,
    terms: Vec<Term>,
}

impl PolySpec {
    pub fn new(field: &FieldContext, dim: usize, terms: Vec<(u32, Vec<u32>)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(terms.len());
        for (coeff, exps) in terms {
            if exps.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: exps.len(),
                });
            }
            field.check(coeff as u64)?;
            if coeff == 0 {
                return Err(Error::InvalidPolynomial("zero coefficient".into()));
            }
            if exps.iter().sum::<u32>() > MAX_TOTAL_DEGREE {
                return Err(Error::InvalidPolynomial(format!(
                    "total degree exceeds {MAX_TOTAL_DEGREE}"
                )));
            }
            if !seen.insert(exps.clone()) {
                return Err(Error::InvalidPolynomial(format!(
                    "repeated exponent vector {exps:?}"
                )));
            }
            out.push(Term { coeff, exps });
        }
        Ok(PolySpec { dim, terms: out })
    }

    /// The zero polynomial, whose zero set is all of F_q^d.
    pub fn zero(dim: usize) -> Self {
        PolySpec {
            dim,
            terms: Vec::new(),
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn eval(&self, field: &FieldContext, x: &[u32]) -> Result<u32> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.eval_coords(field, x))
    }

    /// Recognises `sum_j a_j x_j^s` with every `a_j` nonzero.
    pub fn as_diagonal(&self) -> Result<DiagonalPoly> {
        if self.terms.len() != self.dim {
            return Err(Error::NotDiagonal);
        }
        let mut coeffs = vec![0u32; self.dim];
        let mut exponent = None;
        for t in &self.terms {
            let nonzero: Vec<(usize, u32)> = t
                .exps
                .iter()
                .copied()
                .enumerate()
                .filter(|&(_, e)| e > 0)
                .collect();
            if nonzero.len() != 1 {
                return Err(Error::NotDiagonal);
            }
            let (var, e) = nonzero[0];
            if *exponent.get_or_insert(e) != e || coeffs[var] != 0 {
                return Err(Error::NotDiagonal);
            }
            coeffs[var] = t.coeff;
        }
        DiagonalPoly::from_parts(coeffs, exponent.unwrap_or(0))
    }

    pub fn describe(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                s.push_str(" + ");
            }
            let _ = write!(s, "{}", t.coeff);
            for (v, &e) in t.exps.iter().enumerate() {
                match e {
                    0 => {}
                    1 => {
                        let _ = write!(s, "*x{}", v + 1);
                    }
                    _ => {
                        let _ = write!(s, "*x{}^{}", v + 1, e);
                    }
                }
            }
        }
        s
    }
}

impl PointFunction for PolySpec {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_coords(&self, field: &FieldContext, x: &[u32]) -> u32 {
        let mut acc = 0;
        for t in &self.terms {
            let mut m = t.coeff;
            for (&xi, &e) in x.iter().zip(&t.exps) {
                if e > 0 {
                    m = field.mul(m, field.pow(xi, e as u64));
                }
            }
            acc = field.add(acc, m);
        }
        acc
    }
}

/// `P(x) = sum_j a_j x_j^s`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiagonalPoly {
    coeffs: Vec<u32>,
    exponent: u32,
}

impl DiagonalPoly {
    fn from_parts(coeffs: Vec<u32>, exponent: u32) -> Result<Self> {
        if coeffs.is_empty() || coeffs.contains(&0) {
            return Err(Error::NotDiagonal);
        }
        if exponent < 2 {
            return Err(Error::ExponentTooSmall(exponent));
        }
        Ok(DiagonalPoly { coeffs, exponent })
    }

    pub fn new(field: &FieldContext, coeffs: Vec<u32>, exponent: u32) -> Result<Self> {
        for &c in &coeffs {
            field.check(c as u64)?;
        }
        Self::from_parts(coeffs, exponent)
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }
    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn to_polyspec(&self, field: &FieldContext) -> PolySpec {
        let d = self.coeffs.len();
        let terms = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &a)| {
                let mut e = vec![0; d];
                e[j] = self.exponent;
                (a, e)
            })
            .collect();
        PolySpec::new(field, d, terms).expect("diagonal terms are well formed")
    }
}

impl PointFunction for DiagonalPoly {
    fn dim(&self) -> usize {
        self.coeffs.len()
    }
    fn eval_coords(&self, field: &FieldContext, x: &[u32]) -> u32 {
        x.iter().zip(&self.coeffs).fold(0, |acc, (&xi, &a)| {
            field.add(acc, field.mul(a, field.pow(xi, self.exponent as u64)))
        })
    }
}

/// `Q(x) = x^T M x` for a symmetric matrix M.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuadraticForm {
    dim: usize,
    matrix: Vec<u32>,
}

impl QuadraticForm {
    /// Builds a form from a row-major symmetric matrix; rejects degenerate forms.
    pub fn new(field: &FieldContext, dim: usize, matrix: Vec<u32>) -> Result<Self> {
        if matrix.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: matrix.len(),
            });
        }
        for &c in &matrix {
            field.check(c as u64)?;
        }
        for i in 0..dim {
            for j in 0..i {
                if matrix[i * dim + j] != matrix[j * dim + i] {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        let form = QuadraticForm { dim, matrix };
        if form.determinant(field) == 0 {
            return Err(Error::DegenerateForm);
        }
        Ok(form)
    }

    pub fn diagonal(field: &FieldContext, coeffs: &[u32]) -> Result<Self> {
        let d = coeffs.len();
        let mut m = vec![0; d * d];
        for (i, &c) in coeffs.iter().enumerate() {
            m[i * d + i] = c;
        }
        Self::new(field, d, m)
    }

    /// `x_1^2 + ... + x_d^2`.
    pub fn sum_of_squares(field: &FieldContext, dim: usize) -> Self {
        Self::diagonal(field, &vec![1; dim]).expect("identity is non-degenerate")
    }

    pub fn matrix(&self) -> &[u32] {
        &self.matrix
    }

    /// Exact determinant by Gaussian elimination over F_q.
    pub fn determinant(&self, field: &FieldContext) -> u32 {
        let d = self.dim;
        let mut a = self.matrix.clone();
        let mut det = 1u32;
        for col in 0..d {
            let Some(piv) = (col..d).find(|&r| a[r * d + col] != 0) else {
                return 0;
            };
            if piv != col {
                for c in 0..d {
                    a.swap(piv * d + c, col * d + c);
                }
                det = field.neg(det);
            }
            let pv = a[col * d + col];
            det = field.mul(det, pv);
            let inv = field.inv(pv).expect("pivot is nonzero");
            for r in col + 1..d {
                let factor = field.mul(a[r * d + col], inv);
                if factor == 0 {
                    continue;
                }
                for c in col..d {
                    let v = field.mul(factor, a[col * d + c]);
                    a[r * d + c] = field.sub(a[r * d + c], v);
                }
            }
        }
        det
    }

    pub fn to_polyspec(&self, field: &FieldContext) -> PolySpec {
        let d = self.dim;
        let mut terms = Vec::new();
        for i in 0..d {
            for j in i..d {
                let c = if i == j {
                    self.matrix[i * d + i]
                } else {
                    field.add(self.matrix[i * d + j], self.matrix[j * d + i])
                };
                if c != 0 {
                    let mut e = vec![0; d];
                    e[i] += 1;
                    e[j] += 1;
                    terms.push((c, e));
                }
            }
        }
        PolySpec::new(field, d, terms).expect("quadratic terms are well formed")
    }
}

impl PointFunction for QuadraticForm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_coords(&self, field: &FieldContext, x: &[u32]) -> u32 {
        let d = self.dim;
        let mut acc = 0;
        for i in 0..d {
            if x[i] == 0 {
                continue;
            }
            let row = self.matrix[i * d..(i + 1) * d]
                .iter()
                .zip(x)
                .fold(0, |row, (&a, &xj)| field.add(row, field.mul(a, xj)));
            acc = field.add(acc, field.mul(x[i], row));
        }
        acc
    }
}

/// Evaluates `f` at every point of the space, indexed by encoding.
pub fn evaluate_everywhere<F: PointFunction + ?Sized>(space: &AffineSpace, f: &F) -> Vec<u32> {
    let field = space.field();
    (0..space.size())
        .into_par_iter()
        .map_init(
            || vec![0u32; space.dim()],
            |buf, x| {
                space.decode_into(x, buf);
                f.eval_coords(field, buf)
            },
        )
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    /// `x_1^2 + ... + x_d^2 = j`
    Sphere { j: u32 },
    /// `x_1^2 + ... + x_{d-1}^2 = x_d`
    Paraboloid,
    /// `x_1 x_2 ... x_d = j`
    Minkowski { j: u32 },
}

impl Family {
    pub fn polyspec(&self, field: &FieldContext, d: usize) -> Result<PolySpec> {
        if d < 2 {
            return Err(Error::DimensionTooSmall(d, 2));
        }
        let unit = |i: usize, e: u32| {
            let mut v = vec![0; d];
            v[i] = e;
            v
        };
        let terms = match *self {
            Family::Sphere { j } => {
                field.check(j as u64)?;
                if j == 0 {
                    return Err(Error::ZeroParameter);
                }
                let mut t: Vec<_> = (0..d).map(|i| (1, unit(i, 2))).collect();
                t.push((field.neg(j), vec![0; d]));
                t
            }
            Family::Paraboloid => {
                let mut t: Vec<_> = (0..d - 1).map(|i| (1, unit(i, 2))).collect();
                t.push((field.neg(1), unit(d - 1, 1)));
                t
            }
            Family::Minkowski { j } => {
                field.check(j as u64)?;
                if j == 0 {
                    return Err(Error::ZeroParameter);
                }
                vec![(1, vec![1; d]), (field.neg(j), vec![0; d])]
            }
        };
        PolySpec::new(field, d, terms)
    }

    pub fn name(&self) -> String {
        match self {
            Family::Sphere { j } => format!("sphere(j={j})"),
            Family::Paraboloid => "paraboloid".into(),
            Family::Minkowski { j } => format!("minkowski(j={j})"),
        }
    }
}

/// Zero set of a polynomial, points in increasing encoding order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variety {
    pub spec: Option<PolySpec>,
    pub q: u32,
    pub dim: usize,
    pub points: Vec<usize>,
}

impl Variety {
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Text form: header `q d |V|`, then one point per line as comma
    /// separated coordinate encodings.
    pub fn to_text(&self, space: &AffineSpace) -> String {
        let mut s = format!("{} {} {}\n", self.q, self.dim, self.points.len());
        let mut buf = vec![0u32; self.dim];
        for &x in &self.points {
            space.decode_into(x, &mut buf);
            let line: Vec<String> = buf.iter().map(|c| c.to_string()).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_text(space: &AffineSpace, text: &str) -> Result<Variety> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header".into()))?;
        let h: Vec<u64> = header
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Parse(format!("bad header token {t:?}")))
            })
            .collect::<Result<_>>()?;
        if h.len() != 3 {
            return Err(Error::Parse("header must be `q d |V|`".into()));
        }
        if h[0] != space.field().q() as u64 || h[1] != space.dim() as u64 {
            return Err(Error::Parse(format!(
                "header declares q={} d={}, expected q={} d={}",
                h[0],
                h[1],
                space.field().q(),
                space.dim()
            )));
        }
        let mut points = Vec::with_capacity(h[2] as usize);
        for line in lines {
            let coords: Vec<u32> = line
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad coordinate {t:?}")))
                })
                .collect::<Result<_>>()?;
            points.push(space.try_encode(&coords)?);
        }
        if points.len() as u64 != h[2] {
            return Err(Error::Parse(format!(
                "header says {} points, found {}",
                h[2],
                points.len()
            )));
        }
        let points = space.validate_set(&points)?;
        Ok(Variety {
            spec: None,
            q: space.field().q(),
            dim: space.dim(),
            points,
        })
    }
}

pub fn enumerate_variety<F: PointFunction + ?Sized>(space: &AffineSpace, f: &F) -> Result<Variety> {
    if space.size() as u128 > ENUMERATION_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size: space.size() as u128,
            limit: ENUMERATION_LIMIT,
        });
    }
    if f.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: f.dim(),
        });
    }
    let field = space.field();
    let points: Vec<usize> = (0..space.size())
        .into_par_iter()
        .map_init(
            || vec![0u32; space.dim()],
            |buf, x| {
                space.decode_into(x, buf);
                (f.eval_coords(field, buf) == 0).then_some(x)
            },
        )
        .flatten()
        .collect();
    Ok(Variety {
        spec: None,
        q: field.q(),
        dim: space.dim(),
        points,
    })
}

pub fn enumerate_polyspec(space: &AffineSpace, spec: &PolySpec) -> Result<Variety> {
    let mut v = enumerate_variety(space, spec)?;
    v.spec = Some(spec.clone());
    Ok(v)
}

pub fn builtin_variety(space: &AffineSpace, family: Family) -> Result<Variety> {
    let spec = family.polyspec(space.field(), space.dim())?;
    enumerate_polyspec(space, &spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub c1_lo: f64,
    pub c1_hi: f64,
    pub c2_max: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            c1_lo: 0.5,
            c1_hi: 2.0,
            c2_max: 3.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub q: u32,
    pub dim: usize,
    pub size: usize,
    /// |V| / q^{d-1}
    pub size_constant: f64,
    /// q^{(d+1)/2} max_{m != 0} |V^(m)|, i.e. max_{m != 0} |sum_{x in V} chi(-m.x)| / q^{(d-1)/2}
    pub fourier_constant: f64,
    pub max_character_sum: f64,
    pub argmax: Option<Vec<u32>>,
    pub parseval_relative_error: f64,
    /// Largest relative disagreement between the transform and direct m-scans, when both ran.
    pub path_disagreement: Option<f64>,
    pub thresholds: Thresholds,
    pub regular: bool,
}

/// Budget for running the direct m-scan next to the transform.
const DIRECT_CROSSCHECK_BUDGET: u128 = 50_000_000;

pub fn regularity_check(
    space: &AffineSpace,
    variety: &Variety,
    thresholds: Thresholds,
) -> Result<RegularityReport> {
    if variety.is_empty() {
        return Err(Error::EmptyVariety);
    }
    if space.size() as u128 > REGULARITY_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size: space.size() as u128,
            limit: REGULARITY_LIMIT,
        });
    }
    let field = space.field();
    let q = field.q() as f64;
    let d = space.dim() as i32;

    // V^(m) = q^{-d} conj(lambda_m), so the m-scan is the Cayley spectrum of V.
    let spec = spectra::cayley_spectrum_with(space, &variety.points, SpectrumMethod::Transform)?;
    let mut path_disagreement = None;
    let direct_cost = space.size() as u128 * variety.len() as u128;
    if direct_cost <= DIRECT_CROSSCHECK_BUDGET {
        let direct = spectra::cayley_spectrum_with(space, &variety.points, SpectrumMethod::Direct)?;
        let diff = spectra::max_relative_difference(&spec, &direct);
        if diff > 1e-6 {
            return Err(Error::CrossCheck(format!(
                "transform and direct m-scans differ by {diff:e}"
            )));
        }
        path_disagreement = Some(diff);
    }

    let parseval: f64 = spec.eigenvalues().iter().map(|z| z.norm_sqr()).sum();
    let expected = space.size() as f64 * variety.len() as f64;
    let parseval_relative_error = (parseval - expected).abs() / expected;
    if parseval_relative_error > 1e-6 {
        return Err(Error::CrossCheck(format!(
            "Parseval identity off by {parseval_relative_error:e}"
        )));
    }

    let (max_sum, argmax) = spec.max_nontrivial();
    let size_constant = variety.len() as f64 / q.powi(d - 1);
    let fourier_constant = max_sum / q.powf((d - 1) as f64 / 2.0);
    let regular = size_constant >= thresholds.c1_lo
        && size_constant <= thresholds.c1_hi
        && fourier_constant <= thresholds.c2_max;
    Ok(RegularityReport {
        q: field.q(),
        dim: space.dim(),
        size: variety.len(),
        size_constant,
        fourier_constant,
        max_character_sum: max_sum,
        argmax: argmax.map(|m| space.decode(m)),
        parseval_relative_error,
        path_disagreement,
        thresholds,
        regular,
    })
}
