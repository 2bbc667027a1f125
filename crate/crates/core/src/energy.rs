//! Exact representation counts, k-energies, distance counters and the
//! inequality audits built on them.
//!
//! `r_j(z)` is the number of ordered j-tuples from E summing to z. Every
//! other quantity here is a scan over `r_j`: `Lambda_{2m} = sum_z r_m(z)^2`,
//! `nu_k(t) = sum_{Q(z)=t} r_k(z)`, and so on.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{evaluate_everywhere, DiagonalPoly, PointFunction, QuadraticForm};
use crate::space::AffineSpace;
use crate::spectra::{mixing_verdict, MixingAudit};

/// Upper limit on |E| * q^d * (j - 1) for a fold.
pub const FOLD_BUDGET: u128 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    /// F_q^d, entries indexed by point encoding.
    Points { q: u32, dim: usize },
    /// F_q, entries indexed by element.
    Field { q: u32 },
}

/// Exact nonnegative counts over F_q^d or F_q.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    pub domain: Domain,
    pub values: Vec<u128>,
}

impl CountTable {
    pub fn total(&self) -> BigUint {
        self.values.iter().map(|&v| BigUint::from(v)).sum()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .map(|(i, _)| i)
    }

    pub fn square_sum(&self) -> BigUint {
        self.values
            .iter()
            .map(|&v| BigUint::from(v) * BigUint::from(v))
            .sum()
    }

    /// CSV with header `t,count`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,count\n");
        for (t, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{t},{v}\n"));
        }
        s
    }
}

fn checked_add(a: u128, b: u128) -> Result<u128> {
    a.checked_add(b).ok_or(Error::CountOverflow)
}

/// Point-mass at the origin: r_0.
pub fn origin_counts(space: &AffineSpace) -> CountTable {
    let mut values = vec![0; space.size()];
    values[0] = 1;
    CountTable {
        domain: Domain::Points {
            q: space.field().q(),
            dim: space.dim(),
        },
        values,
    }
}

/// Replaces `r` by `r * 1_E` (one more summand).
fn fold_once(space: &AffineSpace, r: &CountTable, set_digits: &[u32]) -> Result<CountTable> {
    let nd = space.digit_count();
    let mut next = vec![0u128; space.size()];
    let mut zd = vec![0u32; nd];
    for (z, &c) in r.values.iter().enumerate() {
        if c == 0 {
            continue;
        }
        space.digits_of(z, &mut zd);
        for e in set_digits.chunks_exact(nd) {
            let w = space.add_digits(&zd, e);
            next[w] = checked_add(next[w], c)?;
        }
    }
    Ok(CountTable {
        domain: r.domain,
        values: next,
    })
}

fn set_digits(space: &AffineSpace, set: &[usize]) -> Vec<u32> {
    let nd = space.digit_count();
    let mut out = vec![0u32; set.len() * nd];
    for (i, &x) in set.iter().enumerate() {
        space.digits_of(x, &mut out[i * nd..(i + 1) * nd]);
    }
    out
}

/// All of r_0, r_1, ..., r_depth.
pub fn fold_sequence(space: &AffineSpace, set: &[usize], depth: usize) -> Result<Vec<CountTable>> {
    let set = space.validate_set(set)?;
    let needed = set.len() as u128 * space.size() as u128 * depth.saturating_sub(1) as u128;
    if needed > FOLD_BUDGET {
        return Err(Error::BudgetExceeded {
            needed,
            limit: FOLD_BUDGET,
        });
    }
    let digits = set_digits(space, &set);
    let mut out = vec![origin_counts(space)];
    for j in 1..=depth {
        let next = fold_once(space, &out[j - 1], &digits)?;
        out.push(next);
    }
    Ok(out)
}

/// r_j for j >= 1.
pub fn fold_counts(space: &AffineSpace, set: &[usize], j: usize) -> Result<CountTable> {
    if j == 0 {
        return Err(Error::InvalidK(0));
    }
    Ok(fold_sequence(space, set, j)?.pop().expect("depth >= 1"))
}

/// Lambda_{2m} = sum_z r_m(z)^2.
pub fn energy_from_fold(r: &CountTable) -> BigUint {
    r.square_sum()
}

pub fn lambda_k(space: &AffineSpace, set: &[usize], k: usize) -> Result<BigUint> {
    if k == 0 {
        return Err(Error::InvalidK(k));
    }
    if k % 2 == 1 {
        return Err(Error::OddK(k));
    }
    let seq = fold_sequence(space, set, k / 2)?;
    Ok(energy_from_fold(&seq[k / 2]))
}

/// Lambda_2, Lambda_4, ..., Lambda_{max_even} plus the odd-k products
/// Lambda_{k-1} Lambda_{k+1}.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyProfile {
    pub size: usize,
    #[serde(serialize_with = "crate::report::big_map")]
    pub lambda: BTreeMap<usize, BigUint>,
    #[serde(serialize_with = "crate::report::big_map")]
    pub odd_products: BTreeMap<usize, BigUint>,
}

impl EnergyProfile {
    pub fn compute(space: &AffineSpace, set: &[usize], max_even: usize) -> Result<Self> {
        if max_even < 2 || max_even % 2 == 1 {
            return Err(Error::InvalidK(max_even));
        }
        let seq = fold_sequence(space, set, max_even / 2)?;
        let lambda: BTreeMap<usize, BigUint> = (1..=max_even / 2)
            .map(|m| (2 * m, energy_from_fold(&seq[m])))
            .collect();
        let odd_products = (3..max_even)
            .step_by(2)
            .map(|k| (k, &lambda[&(k - 1)] * &lambda[&(k + 1)]))
            .collect();
        Ok(EnergyProfile {
            size: set.len(),
            lambda,
            odd_products,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({
            "size": self.size,
            "lambda": crate::report::big_map_value(&self.lambda),
        }))
        .expect("serialisable")
    }
}

/// Histogram of `f(z)` weighted by `r(z)`.
fn push_forward<F: PointFunction + ?Sized>(
    space: &AffineSpace,
    r: &CountTable,
    f: &F,
) -> Result<CountTable> {
    let field = space.field();
    let mut values = vec![0u128; field.q() as usize];
    let mut buf = vec![0u32; space.dim()];
    for z in r.support() {
        space.decode_into(z, &mut buf);
        let t = f.eval_coords(field, &buf) as usize;
        values[t] = checked_add(values[t], r.values[z])?;
    }
    Ok(CountTable {
        domain: Domain::Field { q: field.q() },
        values,
    })
}

fn check_dim<F: PointFunction + ?Sized>(space: &AffineSpace, f: &F) -> Result<()> {
    if f.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: f.dim(),
        });
    }
    Ok(())
}

/// nu_k(t) = #{(x^1..x^k) in E^k : Q(x^1 + ... + x^k) = t}.
pub fn nu_k(
    space: &AffineSpace,
    set: &[usize],
    form: &QuadraticForm,
    k: usize,
) -> Result<CountTable> {
    check_dim(space, form)?;
    let r = fold_counts(space, set, k)?;
    nu_from_fold(space, &r, form)
}

pub fn nu_from_fold<F: PointFunction + ?Sized>(
    space: &AffineSpace,
    r: &CountTable,
    f: &F,
) -> Result<CountTable> {
    check_dim(space, f)?;
    push_forward(space, r, f)
}

/// nu_{P,k}(t) = #{(a, x_1..x_k) in X x E^k : a + P(x_1 + ... + x_k) = t}.
pub fn nu_p_k(
    space: &AffineSpace,
    set: &[usize],
    shifts: &[u32],
    poly: &DiagonalPoly,
    k: usize,
) -> Result<CountTable> {
    check_dim(space, poly)?;
    let r = fold_counts(space, set, k)?;
    shifted_nu(space, &r, shifts, poly)
}

pub fn shifted_nu(
    space: &AffineSpace,
    r: &CountTable,
    shifts: &[u32],
    poly: &DiagonalPoly,
) -> Result<CountTable> {
    if shifts.is_empty() {
        return Err(Error::EmptyX);
    }
    let field = space.field();
    let mut xs = shifts.to_vec();
    xs.sort_unstable();
    xs.dedup();
    if xs.len() != shifts.len() {
        return Err(Error::InvalidPlan(
            "X must not contain repeated elements".into(),
        ));
    }
    for &a in &xs {
        field.check(a as u64)?;
    }
    let base = push_forward(space, r, poly)?;
    let mut values = vec![0u128; field.q() as usize];
    for (u, &c) in base.values.iter().enumerate() {
        if c == 0 {
            continue;
        }
        for &a in &xs {
            let t = field.add(a, u as u32) as usize;
            values[t] = checked_add(values[t], c)?;
        }
    }
    Ok(CountTable {
        domain: base.domain,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeltaSet {
    pub values: Vec<u32>,
    pub covers_fq_star: bool,
    pub covers_fq: bool,
}

impl DeltaSet {
    pub fn from_counts(t: &CountTable) -> Self {
        let values: Vec<u32> = t.support().map(|i| i as u32).collect();
        let q = t.values.len();
        let covers_fq_star = (1..q).all(|i| t.values[i] > 0);
        DeltaSet {
            covers_fq: covers_fq_star && t.values[0] > 0,
            covers_fq_star,
            values,
        }
    }
}

/// Delta_{k,F}(E) = {F(x^1 + ... + x^k) : x^i in E}.
pub fn delta_set<F: PointFunction + ?Sized>(
    space: &AffineSpace,
    set: &[usize],
    f: &F,
    k: usize,
) -> Result<DeltaSet> {
    check_dim(space, f)?;
    let r = fold_counts(space, set, k)?;
    Ok(DeltaSet::from_counts(&push_forward(space, &r, f)?))
}

/// sum_t nu(t)^2, after checking the table carries the expected total mass.
pub fn second_moment(nu: &CountTable, expected_total: &BigUint) -> Result<BigUint> {
    let total = nu.total();
    if &total != expected_total {
        return Err(Error::InconsistentTotal {
            expected: expected_total.to_string(),
            got: total.to_string(),
        });
    }
    Ok(nu.square_sum())
}

/// Cauchy-Schwarz lower bound `|X|^2 |E|^{2k} / sum_t nu(t)^2` on |X + Delta|.
/// Zero when the moment is zero.
pub fn sumset_lower_bound(x_size: usize, e_size: usize, k: usize, moment: &BigUint) -> BigRational {
    if moment.is_zero() {
        return BigRational::zero();
    }
    let mass = BigUint::from(x_size) * BigUint::from(e_size).pow(k as u32);
    BigRational::new((&mass * &mass).into(), moment.clone().into())
}

/// |X + Delta_{k,P}(E)|, the support size of nu_{P,k}.
pub fn sumset_size(nu: &CountTable) -> usize {
    nu.support().count()
}

pub fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact integer compared against a floating bound built from measured eigenvalues.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityAudit {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub holds: bool,
}

impl InequalityAudit {
    fn new(lhs: f64, rhs: f64) -> Self {
        let gap = rhs - lhs;
        let holds = gap >= -(crate::spectra::AUDIT_SLACK * rhs.abs() + 1e-9);
        InequalityAudit {
            lhs,
            rhs,
            gap,
            holds,
        }
    }
}

/// Order, degree and largest nontrivial eigenvalue modulus of a Cayley graph.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GraphStats {
    pub order: usize,
    pub degree: usize,
    pub lambda: f64,
}

impl GraphStats {
    pub fn of(spectrum: &crate::spectra::Spectrum) -> Self {
        GraphStats {
            order: spectrum.order(),
            degree: spectrum.degree(),
            lambda: spectrum.max_nontrivial().0,
        }
    }
}

/// `|nu_k(t) - |S_t| |E|^k / q^d| <= lambda(E_q(d,Q,t)) * sqrt(Lambda_a Lambda_b)`
/// with (a, b) = (k, k) for even k and (k-1, k+1) for odd k. `degree` is |S_t|.
#[derive(Debug, Clone, Serialize)]
pub struct DistanceCountAudit {
    pub t: u32,
    pub nu: u128,
    pub mixing: MixingAudit,
    /// |nu_k(t) - |E|^k / q|, the deviation from the asymptotic main term.
    pub asymptotic_deviation: f64,
}

pub fn audit_distance_count(
    nu: &CountTable,
    t: u32,
    e_size: usize,
    k: usize,
    graph: GraphStats,
    energies: (&BigUint, &BigUint),
) -> DistanceCountAudit {
    let q = nu.values.len();
    let mass = (e_size as f64).powi(k as i32);
    let main = graph.degree as f64 * mass / graph.order as f64;
    let bound = graph.lambda * (big_to_f64(energies.0) * big_to_f64(energies.1)).sqrt();
    let value = nu.values[t as usize];
    DistanceCountAudit {
        t,
        nu: value,
        mixing: mixing_verdict(value, main, bound),
        asymptotic_deviation: (value as f64 - mass / q as f64).abs(),
    }
}

/// Energy step for E inside V and even k >= 4:
/// `Lambda_k <= e(B, A)` where A holds the k/2-fold sums and B the
/// (k/2 - 1)-fold sums, and `e(B, A)` obeys the mixing inequality in C_V.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyStepAudit {
    pub k: usize,
    #[serde(serialize_with = "crate::report::big")]
    pub lambda_k: BigUint,
    pub edges: u128,
    pub lambda_below_edges: bool,
    pub mixing: MixingAudit,
    /// Lambda_k - |E|^{k-1}/q
    pub asymptotic_gap: f64,
    pub holds: bool,
}

pub fn audit_energy_step(
    space: &AffineSpace,
    set: &[usize],
    variety: &[usize],
    k: usize,
    variety_lambda: f64,
) -> Result<EnergyStepAudit> {
    if k < 4 || k % 2 == 1 {
        return Err(Error::InvalidK(k));
    }
    let m = k / 2;
    let seq = fold_sequence(space, set, m)?;
    let (upper, lower) = (&seq[m], &seq[m - 1]);
    // e(B, A) = sum_a r_m(a) sum_{v in V} r_{m-1}(a - v)
    let mut edges = 0u128;
    for a in upper.support() {
        let mut inner = 0u128;
        for &v in variety {
            inner = checked_add(inner, lower.values[space.sub(a, v)])?;
        }
        edges = checked_add(
            edges,
            upper.values[a]
                .checked_mul(inner)
                .ok_or(Error::CountOverflow)?,
        )?;
    }
    let lambda_k = energy_from_fold(upper);
    let lambda_km2 = energy_from_fold(lower);
    let e = set.len() as f64;
    let main = variety.len() as f64 * e.powi(k as i32 - 1) / space.size() as f64;
    let bound = variety_lambda * (big_to_f64(&lambda_km2) * big_to_f64(&lambda_k)).sqrt();
    let mixing = mixing_verdict(edges, main, bound);
    let lambda_below_edges = lambda_k <= BigUint::from(edges);
    let q = space.field().q() as f64;
    Ok(EnergyStepAudit {
        k,
        asymptotic_gap: big_to_f64(&lambda_k) - e.powi(k as i32 - 1) / q,
        holds: lambda_below_edges && mixing.holds,
        lambda_k,
        edges,
        lambda_below_edges,
        mixing,
    })
}

/// `sum_t nu_{P,k}(t)^2 <= |E|^{2k}|X|^2/q + lambda(C_{P'}) |X| Lambda_a Lambda_b`
/// with (a, b) = (k, k) for even k and (k-1, k+1) for odd k.
#[derive(Debug, Clone, Serialize)]
pub struct MomentAudit {
    #[serde(serialize_with = "crate::report::big")]
    pub moment: BigUint,
    pub main_term: f64,
    pub error_term: f64,
    pub audit: InequalityAudit,
}

pub fn audit_second_moment(
    moment: &BigUint,
    x_size: usize,
    e_size: usize,
    k: usize,
    q: u32,
    affine_lambda: f64,
    energies: (&BigUint, &BigUint),
) -> MomentAudit {
    let main_term = (e_size as f64).powi(2 * k as i32) * (x_size as f64).powi(2) / q as f64;
    let error_term =
        affine_lambda * x_size as f64 * big_to_f64(energies.0) * big_to_f64(energies.1);
    MomentAudit {
        moment: moment.clone(),
        main_term,
        error_term,
        audit: InequalityAudit::new(big_to_f64(moment), main_term + error_term),
    }
}

/// Energies (Lambda_a, Lambda_b) that pair with k in the mixing arguments:
/// (Lambda_k, Lambda_k) for even k and (Lambda_{k-1}, Lambda_{k+1}) for odd k.
pub fn paired_energies(folds: &[CountTable], k: usize) -> (BigUint, BigUint) {
    if k.is_multiple_of(2) {
        let l = energy_from_fold(&folds[k / 2]);
        (l.clone(), l)
    } else {
        (
            energy_from_fold(&folds[(k - 1) / 2]),
            energy_from_fold(&folds[k.div_ceil(2)]),
        )
    }
}

/// Evaluate F at every point once; helper for repeated t scans.
pub fn values_everywhere<F: PointFunction + ?Sized>(space: &AffineSpace, f: &F) -> Vec<u32> {
    evaluate_everywhere(space, f)
}
