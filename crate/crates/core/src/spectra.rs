//! Cayley (di)graph spectra on F_q^D through additive characters.
//!
//! For a connection set S the character `x -> chi(m.x)` is an eigenvector
//! of the adjacency operator with eigenvalue `lambda_m = sum_{s in S} chi(m.s)`.
//! The adjacency matrix is never built. Two independent routes compute the
//! eigenvalue map: a direct scan over (m, s) with exact trace histograms,
//! and a separable DFT over (Z/p)^{nD} followed by the trace-dual relabelling
//! of m.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FieldContext;
use crate::geometry::{evaluate_everywhere, DiagonalPoly, QuadraticForm};
use crate::space::AffineSpace;

/// Largest group order accepted for a full eigenvalue map.
pub const SPECTRUM_LIMIT: u128 = 10_000_000;
/// Additive slack used by every floating inequality audit, scaled by the bound.
pub const AUDIT_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumMethod {
    Direct,
    Transform,
    /// Transform when |S| exceeds the per-point transform cost nD*p.
    Auto,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    q: u32,
    dim: usize,
    degree: usize,
    eigenvalues: Vec<Complex64>,
    lambda: f64,
    argmax: Option<usize>,
}

impl Spectrum {
    fn from_eigenvalues(q: u32, dim: usize, degree: usize, eigenvalues: Vec<Complex64>) -> Self {
        let deg = degree as f64;
        let tol = 1e-9 * deg.max(1.0);
        let (lambda, argmax) = eigenvalues
            .iter()
            .enumerate()
            .skip(1)
            .map(|(m, z)| (z.norm(), m))
            .filter(|&(r, _)| (r - deg).abs() > tol)
            .fold((0.0, None), |(best, arg), (r, m)| {
                if r > best {
                    (r, Some(m))
                } else {
                    (best, arg)
                }
            });
        Spectrum {
            q,
            dim,
            degree,
            eigenvalues,
            lambda,
            argmax,
        }
    }

    pub fn q(&self) -> u32 {
        self.q
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    /// Number of vertices, q^D.
    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }
    /// Out-degree |S|.
    pub fn degree(&self) -> usize {
        self.degree
    }
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }
    pub fn eigenvalue(&self, m: usize) -> Complex64 {
        self.eigenvalues[m]
    }
    /// Second eigenvalue: the largest modulus among eigenvalues whose modulus
    /// differs from the degree.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn argmax(&self) -> Option<usize> {
        self.argmax
    }

    /// Largest |lambda_m| over all m != 0, with the first maximising m.
    /// This is the constant the mixing inequalities need.
    pub fn max_nontrivial(&self) -> (f64, Option<usize>) {
        self.eigenvalues
            .iter()
            .enumerate()
            .skip(1)
            .fold((0.0, None), |(best, arg), (m, z)| {
                let r = z.norm();
                if r > best {
                    (r, Some(m))
                } else {
                    (best, arg)
                }
            })
    }

    /// Tabular export with header `m_encoding re im modulus`.
    pub fn to_table(&self) -> String {
        let mut s = String::from("m_encoding re im modulus\n");
        for (m, z) in self.eigenvalues.iter().enumerate() {
            let _ = writeln!(
                s,
                "{} {:.12} {:.12} {:.12}",
                m,
                z.re + 0.0,
                z.im + 0.0,
                z.norm()
            );
        }
        s
    }

    pub fn summary(&self) -> SpectrumSummary {
        SpectrumSummary {
            n: self.order(),
            degree: self.degree,
            lambda: self.lambda,
            argmax_m: self.argmax,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub n: usize,
    pub degree: usize,
    pub lambda: f64,
    pub argmax_m: Option<usize>,
}

/// Largest |a_m - b_m| relative to the larger degree.
pub fn max_relative_difference(a: &Spectrum, b: &Spectrum) -> f64 {
    let scale = (a.degree.max(b.degree) as f64).max(1.0);
    a.eigenvalues
        .iter()
        .zip(&b.eigenvalues)
        .map(|(x, y)| (x - y).norm() / scale)
        .fold(0.0, f64::max)
}

pub fn cayley_spectrum(space: &AffineSpace, connection: &[usize]) -> Result<Spectrum> {
    cayley_spectrum_with(space, connection, SpectrumMethod::Auto)
}

pub fn cayley_spectrum_with(
    space: &AffineSpace,
    connection: &[usize],
    method: SpectrumMethod,
) -> Result<Spectrum> {
    if space.size() as u128 > SPECTRUM_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size: space.size() as u128,
            limit: SPECTRUM_LIMIT,
        });
    }
    let set = space.validate_set(connection)?;
    let method = match method {
        SpectrumMethod::Auto => {
            if set.len() > space.digit_count() * space.field().p() as usize {
                SpectrumMethod::Transform
            } else {
                SpectrumMethod::Direct
            }
        }
        m => m,
    };
    let eigenvalues = match method {
        SpectrumMethod::Direct => direct_eigenvalues(space, &set),
        _ => transform_eigenvalues(space, &set),
    };
    Ok(Spectrum::from_eigenvalues(
        space.field().q(),
        space.dim(),
        set.len(),
        eigenvalues,
    ))
}

fn direct_eigenvalues(space: &AffineSpace, set: &[usize]) -> Vec<Complex64> {
    let field = space.field();
    let d = space.dim();
    let p = field.p() as usize;
    let mut coords = vec![0u32; set.len() * d];
    for (i, &s) in set.iter().enumerate() {
        space.decode_into(s, &mut coords[i * d..(i + 1) * d]);
    }
    (0..space.size())
        .into_par_iter()
        .map_init(
            || (vec![0u32; d], vec![0u64; p]),
            |(m, buckets), idx| {
                space.decode_into(idx, m);
                buckets.iter_mut().for_each(|b| *b = 0);
                for s in coords.chunks_exact(d) {
                    buckets[field.trace(space.dot(m, s)) as usize] += 1;
                }
                field.character_sum_from_buckets(buckets)
            },
        )
        .collect()
}

fn transform_eigenvalues(space: &AffineSpace, set: &[usize]) -> Vec<Complex64> {
    let field = space.field();
    let p = field.p() as usize;
    let n = space.size();
    let roots = field.roots_of_unity();
    let mut data = vec![Complex64::new(0.0, 0.0); n];
    for &s in set {
        data[s] = Complex64::new(1.0, 0.0);
    }
    let mut stride = 1usize;
    for _ in 0..space.digit_count() {
        let block = stride * p;
        data.par_chunks_mut(block).for_each_init(
            || {
                (
                    vec![Complex64::new(0.0, 0.0); p],
                    vec![Complex64::new(0.0, 0.0); p],
                )
            },
            |(inp, out), chunk| {
                for lo in 0..stride {
                    let mut nonzero = false;
                    for x in 0..p {
                        inp[x] = chunk[lo + x * stride];
                        nonzero |= inp[x] != Complex64::new(0.0, 0.0);
                    }
                    if !nonzero {
                        continue;
                    }
                    for (u, o) in out.iter_mut().enumerate() {
                        let mut acc = inp[0];
                        for x in 1..p {
                            acc += inp[x] * roots[(u * x) % p];
                        }
                        *o = acc;
                    }
                    for u in 0..p {
                        chunk[lo + u * stride] = out[u];
                    }
                }
            },
        );
        stride = block;
    }
    // lambda_m = F[u(m)] with u(m)_i = trace_dual(m_i).
    let d = space.dim();
    (0..n)
        .into_par_iter()
        .map_init(
            || vec![0u32; d],
            |buf, m| {
                space.decode_into(m, buf);
                for c in buf.iter_mut() {
                    *c = field.trace_dual(*c);
                }
                data[space.encode(buf)]
            },
        )
        .collect()
}

/// Spectrum of the finite Euclidean graph E_q(d, Q, t) together with the
/// check `lambda <= 2 q^{(d-1)/2}` when t != 0.
#[derive(Debug, Clone)]
pub struct EuclideanSpectrum {
    pub spectrum: Spectrum,
    pub t: u32,
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
    /// Set for t = 0, which lies outside the hypothesis t in F_q^*.
    pub outside_hypothesis: bool,
}

/// Connection set {x != 0 : Q(x) = t} of E_q(d, Q, t).
pub fn euclidean_connection_set(space: &AffineSpace, form: &QuadraticForm, t: u32) -> Vec<usize> {
    evaluate_everywhere(space, form)
        .into_iter()
        .enumerate()
        .filter(|&(x, v)| v == t && x != 0)
        .map(|(x, _)| x)
        .collect()
}

pub fn euclidean_spectrum(
    space: &AffineSpace,
    form: &QuadraticForm,
    t: u32,
) -> Result<EuclideanSpectrum> {
    let field = space.field();
    field.check(t as u64)?;
    if crate::geometry::PointFunction::dim(form) != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: crate::geometry::PointFunction::dim(form),
        });
    }
    let set = euclidean_connection_set(space, form, t);
    let spectrum = cayley_spectrum(space, &set)?;
    let (bound, within_bound) = if t != 0 {
        let b = 2.0 * (field.q() as f64).powf((space.dim() as f64 - 1.0) / 2.0);
        (Some(b), Some(spectrum.lambda() <= b + AUDIT_SLACK))
    } else {
        (None, None)
    };
    Ok(EuclideanSpectrum {
        spectrum,
        t,
        bound,
        within_bound,
        outside_hypothesis: t == 0,
    })
}

/// Checks the hypotheses on P for the graph C_{P'}.
fn check_affine_poly(field: &FieldContext, poly: &DiagonalPoly) -> Result<()> {
    if poly.exponent().is_multiple_of(field.p()) {
        return Err(Error::ExponentDivisibleByCharacteristic {
            s: poly.exponent(),
            p: field.p(),
        });
    }
    Ok(())
}

/// Space F_q x F_q^{2d} hosting C_{P'}, coordinates ordered (x_0, x_1, ..., x_{2d}).
pub fn affine_space<'a>(field: &'a FieldContext, poly: &DiagonalPoly) -> Result<AffineSpace<'a>> {
    AffineSpace::new(field, 2 * poly.coeffs().len() + 1, SPECTRUM_LIMIT)
}

/// Connection set {(x_0, x) : x_0 + P(x_1..x_d) - P(x_{d+1}..x_{2d}) = 0}.
pub fn affine_connection_set(field: &FieldContext, poly: &DiagonalPoly) -> Result<Vec<usize>> {
    check_affine_poly(field, poly)?;
    let space = affine_space(field, poly)?;
    let d = poly.coeffs().len();
    let inner = AffineSpace::new(field, 2 * d, SPECTRUM_LIMIT)?;
    let s = poly.exponent() as u64;
    let mut out = Vec::with_capacity(inner.size());
    let mut x = vec![0u32; 2 * d];
    let mut point = vec![0u32; 2 * d + 1];
    for idx in 0..inner.size() {
        inner.decode_into(idx, &mut x);
        let mut value = 0;
        for (j, &a) in poly.coeffs().iter().enumerate() {
            value = field.add(value, field.mul(a, field.pow(x[j], s)));
            value = field.sub(value, field.mul(a, field.pow(x[d + j], s)));
        }
        point[0] = field.neg(value);
        point[1..].copy_from_slice(&x);
        out.push(space.encode(&point));
    }
    out.sort_unstable();
    Ok(out)
}

/// One-dimensional sums `W(c, b) = sum_y chi(c y^s + b y)` for all c, b.
fn weil_table(field: &FieldContext, s: u32) -> Vec<Complex64> {
    let q = field.q() as usize;
    let p = field.p() as usize;
    let powers: Vec<u32> = field.elements().map(|y| field.pow(y, s as u64)).collect();
    (0..q * q)
        .into_par_iter()
        .map_init(
            || vec![0u64; p],
            |buckets, idx| {
                let (c, b) = ((idx / q) as u32, (idx % q) as u32);
                buckets.iter_mut().for_each(|v| *v = 0);
                for y in field.elements() {
                    let v = field.add(field.mul(c, powers[y as usize]), field.mul(b, y));
                    buckets[field.trace(v) as usize] += 1;
                }
                field.character_sum_from_buckets(buckets)
            },
        )
        .collect()
}

/// Spectrum of C_{P'} on F_q x F_q^{2d} using the coordinate-wise
/// factorisation `lambda_{(m0,m)} = prod_j W(-m0 a_j, m_j) * prod_j W(m0 a_j, m_{d+j})`.
pub fn affine_cayley_spectrum(field: &FieldContext, poly: &DiagonalPoly) -> Result<AffineSpectrum> {
    check_affine_poly(field, poly)?;
    let space = affine_space(field, poly)?;
    let d = poly.coeffs().len();
    let q = field.q() as usize;
    let w = weil_table(field, poly.exponent());
    let eigenvalues: Vec<Complex64> = (0..space.size())
        .into_par_iter()
        .map_init(
            || vec![0u32; 2 * d + 1],
            |m, idx| {
                space.decode_into(idx, m);
                let m0 = m[0];
                let mut z = Complex64::new(1.0, 0.0);
                for (j, &a) in poly.coeffs().iter().enumerate() {
                    let c = field.mul(m0, a) as usize;
                    let neg_c = field.neg(c as u32) as usize;
                    z *= w[neg_c * q + m[1 + j] as usize];
                    z *= w[c * q + m[1 + d + j] as usize];
                }
                z
            },
        )
        .collect();
    let degree = q.pow(2 * d as u32);
    let spectrum = Spectrum::from_eigenvalues(field.q(), 2 * d + 1, degree, eigenvalues);
    let bound = (field.q() as f64).powi(d as i32);
    let within_bound = spectrum.lambda() <= bound + AUDIT_SLACK;
    Ok(AffineSpectrum {
        spectrum,
        bound,
        within_bound,
    })
}

#[derive(Debug, Clone)]
pub struct AffineSpectrum {
    pub spectrum: Spectrum,
    /// q^d
    pub bound: f64,
    pub within_bound: bool,
}

/// Finite multiset of vertices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Multiset {
    counts: BTreeMap<usize, u64>,
}

impl Multiset {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn insert(&mut self, x: usize, times: u64) {
        if times > 0 {
            *self.counts.entry(x).or_insert(0) += times;
        }
    }
    pub fn from_counts(pairs: impl IntoIterator<Item = (usize, u64)>) -> Self {
        let mut m = Self::new();
        for (x, c) in pairs {
            m.insert(x, c);
        }
        m
    }
    pub fn multiplicity(&self, x: usize) -> u64 {
        self.counts.get(&x).copied().unwrap_or(0)
    }
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().map(|(&x, &c)| (x, c))
    }
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }
    /// Total size counted with multiplicity.
    pub fn len(&self) -> u128 {
        self.counts.values().map(|&c| c as u128).sum()
    }
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
    /// sum_x m(x)^2
    pub fn square_norm(&self) -> u128 {
        self.counts.values().map(|&c| c as u128 * c as u128).sum()
    }
}

impl FromIterator<usize> for Multiset {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut m = Multiset::new();
        for x in iter {
            m.insert(x, 1);
        }
        m
    }
}

pub trait Digraph: Sync {
    fn vertex_count(&self) -> usize;
    fn has_edge(&self, from: usize, to: usize) -> bool;

    /// |N^+(x, y)|: vertices z with x -> z and y -> z.
    fn common_out(&self, x: usize, y: usize) -> usize {
        (0..self.vertex_count())
            .filter(|&z| self.has_edge(x, z) && self.has_edge(y, z))
            .count()
    }

    /// |N^-(x, y)|: vertices z with z -> x and z -> y.
    fn common_in(&self, x: usize, y: usize) -> usize {
        (0..self.vertex_count())
            .filter(|&z| self.has_edge(z, x) && self.has_edge(z, y))
            .count()
    }

    /// Number of pairs (b, c) in B x C, with multiplicity, such that b -> c.
    fn count_edges(&self, b: &Multiset, c: &Multiset) -> u128 {
        let mut e = 0u128;
        for (u, mu) in b.iter() {
            for (v, mv) in c.iter() {
                if self.has_edge(u, v) {
                    e += mu as u128 * mv as u128;
                }
            }
        }
        e
    }
}

/// Directed Cayley graph on F_q^D: x -> y iff y - x is in S.
#[derive(Debug, Clone)]
pub struct CayleyGraph<'a> {
    space: AffineSpace<'a>,
    connection: Vec<usize>,
    member: Vec<bool>,
}

impl<'a> CayleyGraph<'a> {
    pub fn new(space: AffineSpace<'a>, connection: &[usize]) -> Result<Self> {
        let connection = space.validate_set(connection)?;
        let mut member = vec![false; space.size()];
        for &s in &connection {
            member[s] = true;
        }
        Ok(CayleyGraph {
            space,
            connection,
            member,
        })
    }
    pub fn space(&self) -> &AffineSpace<'a> {
        &self.space
    }
    pub fn connection(&self) -> &[usize] {
        &self.connection
    }
}

impl Digraph for CayleyGraph<'_> {
    fn vertex_count(&self) -> usize {
        self.space.size()
    }
    fn has_edge(&self, from: usize, to: usize) -> bool {
        self.member[self.space.sub(to, from)]
    }
    fn common_out(&self, x: usize, y: usize) -> usize {
        // z = x + s, need z - y in S
        let shift = self.space.sub(x, y);
        self.connection
            .iter()
            .filter(|&&s| self.member[self.space.add(shift, s)])
            .count()
    }
    fn common_in(&self, x: usize, y: usize) -> usize {
        // z = x - s, need y - z = (y - x) + s in S
        let shift = self.space.sub(y, x);
        self.connection
            .iter()
            .filter(|&&s| self.member[self.space.add(shift, s)])
            .count()
    }
    fn count_edges(&self, b: &Multiset, c: &Multiset) -> u128 {
        let pairwise = b.distinct() as u128 * c.distinct() as u128;
        let by_neighbours = b.distinct() as u128 * self.connection.len() as u128;
        if pairwise <= by_neighbours {
            let mut e = 0u128;
            for (u, mu) in b.iter() {
                for (v, mv) in c.iter() {
                    if self.has_edge(u, v) {
                        e += mu as u128 * mv as u128;
                    }
                }
            }
            return e;
        }
        let lookup: HashMap<usize, u64> = c.iter().collect();
        b.iter()
            .map(|(u, mu)| {
                let reach: u128 = self
                    .connection
                    .iter()
                    .map(|&s| lookup.get(&self.space.add(u, s)).copied().unwrap_or(0) as u128)
                    .sum();
                mu as u128 * reach
            })
            .sum()
    }
}

/// Digraph given by an explicit adjacency relation.
#[derive(Debug, Clone)]
pub struct AdjacencyDigraph {
    n: usize,
    adjacency: Vec<bool>,
}

impl AdjacencyDigraph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![false; n * n];
        for &(u, v) in edges {
            adjacency[u * n + v] = true;
        }
        AdjacencyDigraph { n, adjacency }
    }
}

impl Digraph for AdjacencyDigraph {
    fn vertex_count(&self) -> usize {
        self.n
    }
    fn has_edge(&self, from: usize, to: usize) -> bool {
        self.adjacency[from * self.n + to]
    }
}

#[derive(Debug, Clone, Copy)]
pub enum PairScope {
    /// Every unordered pair of distinct vertices.
    All,
    Sampled {
        pairs: usize,
        seed: u64,
    },
}

/// True iff |N^+(x, y)| = |N^-(x, y)| for every checked pair.
pub fn normality_check<G: Digraph + ?Sized>(graph: &G, scope: PairScope) -> bool {
    let n = graph.vertex_count();
    match scope {
        PairScope::All => (0..n)
            .into_par_iter()
            .all(|x| (x + 1..n).all(|y| graph.common_out(x, y) == graph.common_in(x, y))),
        PairScope::Sampled { pairs, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..pairs).all(|_| {
                let x = rng.random_range(0..n);
                let y = rng.random_range(0..n);
                graph.common_out(x, y) == graph.common_in(x, y)
            })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingAudit {
    pub edges: u128,
    pub main_term: f64,
    pub bound: f64,
    pub deviation: f64,
    pub gap: f64,
    pub holds: bool,
}

/// Compares e(B, C) with `degree |B| |C| / n` against
/// `lambda sqrt(sum m_B^2) sqrt(sum m_C^2)` where lambda is the largest
/// nontrivial eigenvalue modulus of the graph.
pub fn mixing_audit<G: Digraph + ?Sized>(
    spectrum: &Spectrum,
    b: &Multiset,
    c: &Multiset,
    graph: &G,
) -> MixingAudit {
    let edges = graph.count_edges(b, c);
    let main_term =
        spectrum.degree() as f64 * b.len() as f64 * c.len() as f64 / spectrum.order() as f64;
    let (lambda, _) = spectrum.max_nontrivial();
    let bound = lambda * (b.square_norm() as f64).sqrt() * (c.square_norm() as f64).sqrt();
    mixing_verdict(edges, main_term, bound)
}

pub(crate) fn mixing_verdict(edges: u128, main_term: f64, bound: f64) -> MixingAudit {
    let deviation = (edges as f64 - main_term).abs();
    let gap = bound - deviation;
    let holds = gap >= -(AUDIT_SLACK * bound + 1e-9 * main_term.max(1.0));
    MixingAudit {
        edges,
        main_term,
        bound,
        deviation,
        gap,
        holds,
    }
}

/// Summary of mixing audits over seeded random multiset pairs.
#[derive(Debug, Clone, Serialize)]
pub struct MixingSweep {
    pub pairs: usize,
    pub violations: usize,
    /// Smallest gap / bound over pairs with a positive bound.
    pub min_relative_gap: Option<f64>,
    pub first_violation: Option<MixingAudit>,
}

/// Random multiset with between 1 and `support` distinct vertices, each of multiplicity 1..=5.
pub fn random_multiset<R: Rng>(rng: &mut R, n: usize, support: usize) -> Multiset {
    let distinct = rng.random_range(1..=support.clamp(1, n.max(1)));
    let mut m = Multiset::new();
    for _ in 0..distinct {
        m.insert(rng.random_range(0..n), rng.random_range(1..=5));
    }
    m
}

/// Mixing audits for `pairs` random multiset pairs drawn from ChaCha8 with `seed`.
pub fn mixing_sweep<G: Digraph + ?Sized>(
    spectrum: &Spectrum,
    graph: &G,
    pairs: usize,
    support: usize,
    seed: u64,
) -> MixingSweep {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spectrum.order();
    let mut sweep = MixingSweep {
        pairs,
        violations: 0,
        min_relative_gap: None,
        first_violation: None,
    };
    for _ in 0..pairs {
        let b = random_multiset(&mut rng, n, support);
        let c = random_multiset(&mut rng, n, support);
        let a = mixing_audit(spectrum, &b, &c, graph);
        if a.bound > 0.0 {
            let rel = a.gap / a.bound;
            sweep.min_relative_gap = Some(sweep.min_relative_gap.map_or(rel, |m: f64| m.min(rel)));
        }
        if !a.holds {
            sweep.violations += 1;
            sweep.first_violation.get_or_insert(a);
        }
    }
    sweep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{builtin_variety, Family};

    fn space(f: &FieldContext, d: usize) -> AffineSpace<'_> {
        AffineSpace::new(f, d, SPECTRUM_LIMIT).unwrap()
    }

    #[test]
    fn whole_group_spectrum() {
        let f3 = FieldContext::new(3, 1).unwrap();
        let s = space(&f3, 2);
        let all: Vec<usize> = (0..9).collect();
        for method in [SpectrumMethod::Direct, SpectrumMethod::Transform] {
            let sp = cayley_spectrum_with(&s, &all, method).unwrap();
            assert_eq!(sp.eigenvalue(0), Complex64::new(9.0, 0.0));
            assert!(sp.eigenvalues()[1..].iter().all(|z| z.norm() < 1e-9));
        }
    }

    #[test]
    fn paraboloid_f3_gauss_sums() {
        let f3 = FieldContext::new(3, 1).unwrap();
        let s = space(&f3, 2);
        let v = builtin_variety(&s, Family::Paraboloid).unwrap();
        let sp = cayley_spectrum(&s, &v.points).unwrap();
        for m in 1..9 {
            let c = s.decode(m);
            let expected = if c[1] != 0 { 3f64.sqrt() } else { 0.0 };
            assert!((sp.eigenvalue(m).norm() - expected).abs() < 1e-9, "m={c:?}");
        }
        assert!((sp.lambda() - 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn sphere_f3_eigenvalues() {
        let f3 = FieldContext::new(3, 1).unwrap();
        let s = space(&f3, 2);
        let v = builtin_variety(&s, Family::Sphere { j: 1 }).unwrap();
        let sp = cayley_spectrum(&s, &v.points).unwrap();
        assert!((sp.eigenvalue(s.encode(&[1, 0])) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((sp.eigenvalue(s.encode(&[1, 1])) - Complex64::new(-2.0, 0.0)).norm() < 1e-12);
        assert!((sp.lambda() - 2.0).abs() < 1e-12);
        assert_eq!(sp.degree(), 4);
    }

    #[test]
    fn lambda_excludes_degree_modulus() {
        let f3 = FieldContext::new(3, 1).unwrap();
        let s = space(&f3, 2);
        // S = {(1,0)}: every eigenvalue has modulus 1 = degree.
        let sp = cayley_spectrum(&s, &[s.encode(&[1, 0])]).unwrap();
        assert_eq!(sp.lambda(), 0.0);
        assert_eq!(sp.argmax(), None);
        assert!((sp.max_nontrivial().0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transform_matches_direct_in_extension_field() {
        let f9 = FieldContext::new(3, 2).unwrap();
        let s = space(&f9, 2);
        let v = builtin_variety(&s, Family::Sphere { j: 2 }).unwrap();
        let a = cayley_spectrum_with(&s, &v.points, SpectrumMethod::Direct).unwrap();
        let b = cayley_spectrum_with(&s, &v.points, SpectrumMethod::Transform).unwrap();
        assert!(max_relative_difference(&a, &b) < 1e-9);
    }

    #[test]
    fn euclidean_examples() {
        let f3 = FieldContext::new(3, 1).unwrap();
        let s = space(&f3, 2);
        let q = QuadraticForm::sum_of_squares(&f3, 2);
        let e = euclidean_spectrum(&s, &q, 1).unwrap();
        assert_eq!(e.spectrum.degree(), 4);
        assert!((e.spectrum.lambda() - 2.0).abs() < 1e-12);
        assert_eq!(e.within_bound, Some(true));
        let zero = euclidean_spectrum(&s, &q, 0).unwrap();
        assert!(zero.outside_hypothesis);
        assert_eq!(zero.bound, None);

        let f5 = FieldContext::new(5, 1).unwrap();
        let s5 = space(&f5, 2);
        let e5 = euclidean_spectrum(&s5, &QuadraticForm::sum_of_squares(&f5, 2), 1).unwrap();
        assert!(e5.spectrum.lambda() <= 2.0 * 5f64.sqrt() + 1e-6);
    }

    #[test]
    fn affine_examples() {
        let f3 = FieldContext::new(3, 1).unwrap();
        let p = DiagonalPoly::new(&f3, vec![1], 2).unwrap();
        let a = affine_cayley_spectrum(&f3, &p).unwrap();
        let sp = &a.spectrum;
        assert_eq!(sp.order(), 27);
        assert_eq!(sp.degree(), 9);
        assert_eq!(sp.eigenvalue(0), Complex64::new(9.0, 0.0));
        let s = affine_space(&f3, &p).unwrap();
        for m in 1..27 {
            let c = s.decode(m);
            let expected = if c[0] != 0 { 3.0 } else { 0.0 };
            assert!((sp.eigenvalue(m).norm() - expected).abs() < 1e-9);
        }
        assert!((sp.lambda() - 3.0).abs() < 1e-9);

        // factorised eigenvalues agree with direct summation over the connection set
        for (prime, exp) in [(3u64, 2u32), (5, 2), (5, 3), (7, 3)] {
            let f = FieldContext::new(prime, 1).unwrap();
            let p = DiagonalPoly::new(&f, vec![1], exp).unwrap();
            let fact = affine_cayley_spectrum(&f, &p).unwrap();
            let s = affine_space(&f, &p).unwrap();
            let set = affine_connection_set(&f, &p).unwrap();
            let direct = cayley_spectrum_with(&s, &set, SpectrumMethod::Direct).unwrap();
            assert!(max_relative_difference(&fact.spectrum, &direct) < 1e-9);
        }
    }

    #[test]
    fn affine_rejects_bad_exponent() {
        let f3 = FieldContext::new(3, 1).unwrap();
        let p = DiagonalPoly::new(&f3, vec![1], 3).unwrap();
        assert_eq!(
            affine_cayley_spectrum(&f3, &p).unwrap_err(),
            Error::ExponentDivisibleByCharacteristic { s: 3, p: 3 }
        );
    }

    #[test]
    fn normality() {
        let f3 = FieldContext::new(3, 1).unwrap();
        let s = space(&f3, 2);
        let v = builtin_variety(&s, Family::Sphere { j: 1 }).unwrap();
        let g = CayleyGraph::new(s, &v.points).unwrap();
        assert!(normality_check(&g, PairScope::All));
        let single = CayleyGraph::new(s, &[s.encode(&[1, 0])]).unwrap();
        assert!(normality_check(&single, PairScope::All));
        for x in 0..9 {
            for y in 0..9 {
                assert!(single.common_out(x, y) <= 1);
            }
        }
        // u -> v, u -> w, v -> w
        let bad = AdjacencyDigraph::from_edges(3, &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(bad.common_out(1, 2), 0);
        assert_eq!(bad.common_in(1, 2), 1);
        assert!(!normality_check(&bad, PairScope::All));
    }

    #[test]
    fn mixing_examples() {
        let f3 = FieldContext::new(3, 1).unwrap();
        let s = space(&f3, 2);
        let v = builtin_variety(&s, Family::Sphere { j: 1 }).unwrap();
        let g = CayleyGraph::new(s, &v.points).unwrap();
        let sp = cayley_spectrum(&s, &v.points).unwrap();

        let all: Multiset = (0..9).collect();
        let a = mixing_audit(&sp, &all, &all, &g);
        assert_eq!(a.edges, 36);
        assert_eq!(a.deviation, 0.0);
        assert!(a.holds);

        let e: Multiset = v.points.iter().copied().collect();
        let a = mixing_audit(&sp, &e, &e, &g);
        // brute force over the 16 ordered pairs
        let brute = v
            .points
            .iter()
            .flat_map(|&x| v.points.iter().map(move |&y| (x, y)))
            .filter(|&(x, y)| v.points.contains(&s.sub(y, x)))
            .count();
        assert_eq!(a.edges, brute as u128);
        assert!((a.main_term - 64.0 / 9.0).abs() < 1e-12);
        assert!((a.bound - 8.0).abs() < 1e-9);
        assert!(a.holds);

        let single = Multiset::from_counts([(4, 1)]);
        let triple = Multiset::from_counts([(4, 3)]);
        assert_eq!(triple.square_norm(), 9);
        let a1 = mixing_audit(&sp, &single, &e, &g);
        let a3 = mixing_audit(&sp, &triple, &e, &g);
        assert!((a3.bound - 3.0 * a1.bound).abs() < 1e-9);
    }
}
