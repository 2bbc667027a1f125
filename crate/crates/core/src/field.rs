//! Arithmetic in F_q for q = p^n with p an odd prime and n <= 4.
//!
//! Elements are integers `0..q`; the base-p digits of an element are the
//! coefficients of its polynomial representative modulo a fixed monic
//! irreducible polynomial, lowest degree first. Addition is digit-wise
//! mod p, so F_q^d can be handled as (Z/p)^{nd} by the other modules.
//!
//! The additive character is `chi(x) = exp(2 pi i Tr(x) / p)` where `Tr` is
//! the absolute trace to F_p.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex value returned by character evaluations.
pub type ComplexValue = Complex64;

pub const MAX_ORDER: u64 = 1 << 20;
pub const MAX_DEGREE: u32 = 4;
/// Orders up to this size use discrete log / antilog tables for multiplication.
pub const LOG_TABLE_LIMIT: u32 = 1 << 16;

#[derive(Debug, Clone)]
enum Multiplier {
    /// n = 1: plain modular product.
    Prime,
    Tables {
        log: Vec<u32>,
        exp: Vec<u32>,
    },
    Poly,
}

/// Immutable description of F_q together with its trace and character tables.
#[derive(Debug, Clone)]
pub struct FieldContext {
    p: u32,
    n: u32,
    q: u32,
    /// Coefficients c_0..c_{n-1} of the modulus x^n + c_{n-1} x^{n-1} + ... + c_0.
    modulus: Vec<u32>,
    mul: Multiplier,
    trace: Vec<u32>,
    /// `trace_dual[y]` has digit a equal to Tr(y * x^a).
    trace_dual: Vec<u32>,
    roots: Vec<Complex64>,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

// Polynomials over F_p as coefficient vectors, lowest degree first.

fn poly_trim(a: &mut Vec<u32>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    // m monic
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = *r.last().unwrap() as u64;
        let shift = r.len() - 1 - dm;
        for (i, &c) in m.iter().enumerate() {
            let sub = (lead * c as u64 % p as u64) as u32;
            r[shift + i] = (r[shift + i] + p - sub) % p;
        }
        poly_trim(&mut r);
    }
    r
}

/// True when the monic polynomial `f` (lowest degree first) has no monic
/// factor of degree 1..=deg/2. Exhaustive, intended for deg <= 4.
fn is_irreducible(f: &[u32], p: u32) -> bool {
    let deg = f.len() - 1;
    if deg <= 1 {
        return true;
    }
    for fdeg in 1..=deg / 2 {
        let count = (p as u64).pow(fdeg as u32);
        for code in 0..count {
            let mut g = Vec::with_capacity(fdeg + 1);
            let mut c = code;
            for _ in 0..fdeg {
                g.push((c % p as u64) as u32);
                c /= p as u64;
            }
            g.push(1);
            if poly_rem(f, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// Lexicographically smallest monic irreducible polynomial of degree n,
/// ordered by the integer `c_0 + c_1 p + ... + c_{n-1} p^{n-1}`.
fn smallest_irreducible(p: u32, n: u32) -> Vec<u32> {
    if n == 1 {
        return vec![0, 1];
    }
    let count = (p as u64).pow(n);
    for code in 0..count {
        let mut f = Vec::with_capacity(n as usize + 1);
        let mut c = code;
        for _ in 0..n {
            f.push((c % p as u64) as u32);
            c /= p as u64;
        }
        f.push(1);
        if f[0] != 0 && is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

impl FieldContext {
    pub fn new(p: u64, n: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if p == 2 {
            return Err(Error::EvenCharacteristic(p));
        }
        if n == 0 || n > MAX_DEGREE {
            return Err(Error::DegreeTooLarge(n));
        }
        let q = (p as u128).pow(n);
        if q > MAX_ORDER as u128 {
            return Err(Error::OrderTooLarge {
                q: q.min(u64::MAX as u128) as u64,
            });
        }
        let (p, q) = (p as u32, q as u32);
        let full = smallest_irreducible(p, n);
        debug_assert!(is_irreducible(&full, p));
        let modulus = full[..n as usize].to_vec();

        let mut ctx = FieldContext {
            p,
            n,
            q,
            modulus,
            mul: if n == 1 {
                Multiplier::Prime
            } else {
                Multiplier::Poly
            },
            trace: Vec::new(),
            trace_dual: Vec::new(),
            roots: Vec::new(),
        };
        if n > 1 && q <= LOG_TABLE_LIMIT {
            ctx.mul = ctx.build_log_tables();
        }

        // Tr is F_p-linear; Tr(x) = sum_a x_a Tr(X^a).
        let basis_traces: Vec<u32> = (0..n).map(|a| ctx.trace_slow(p.pow(a))).collect();
        ctx.trace = (0..q)
            .map(|x| {
                let mut t = 0u64;
                let mut y = x;
                for &bt in &basis_traces {
                    t += (y % p) as u64 * bt as u64;
                    y /= p;
                }
                (t % p as u64) as u32
            })
            .collect();
        ctx.trace_dual = (0..q)
            .map(|y| {
                let mut code = 0u32;
                for a in (0..n).rev() {
                    code = code * p + ctx.trace[ctx.mul(y, p.pow(a)) as usize];
                }
                code
            })
            .collect();
        ctx.roots = (0..p)
            .map(|r| {
                if r == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::from_polar(1.0, std::f64::consts::TAU * r as f64 / p as f64)
                }
            })
            .collect();
        Ok(ctx)
    }

    fn build_log_tables(&self) -> Multiplier {
        let order = (self.q - 1) as u64;
        let factors = distinct_prime_factors(order);
        let gen = (2..self.q)
            .find(|&g| factors.iter().all(|&f| self.pow_poly(g, order / f) != 1))
            .expect("multiplicative group is cyclic");
        let mut log = vec![u32::MAX; self.q as usize];
        let mut exp = vec![0u32; 2 * order as usize];
        let mut x = 1u32;
        for k in 0..order as usize {
            exp[k] = x;
            exp[k + order as usize] = x;
            log[x as usize] = k as u32;
            x = self.mul_poly(x, gen);
        }
        debug_assert_eq!(x, 1);
        Multiplier::Tables { log, exp }
    }

    fn trace_slow(&self, x: u32) -> u32 {
        let mut acc = 0;
        let mut y = x;
        for _ in 0..self.n {
            acc = self.add(acc, y);
            y = self.pow_poly(y, self.p as u64);
        }
        debug_assert!(acc < self.p, "trace must land in the prime field");
        acc
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn q(&self) -> u32 {
        self.q
    }

    /// Full modulus coefficients, lowest degree first, including the leading 1.
    pub fn modulus(&self) -> Vec<u32> {
        let mut m = self.modulus.clone();
        m.push(1);
        m
    }

    pub fn check(&self, x: u64) -> Result<u32> {
        if x < self.q as u64 {
            Ok(x as u32)
        } else {
            Err(Error::ElementOutOfRange {
                value: x,
                q: self.q,
            })
        }
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        if self.n == 1 {
            let s = a + b;
            return if s >= self.p { s - self.p } else { s };
        }
        let (mut a, mut b) = (a, b);
        let mut out = 0;
        let mut scale = 1;
        for _ in 0..self.n {
            let d = (a % self.p + b % self.p) % self.p;
            out += d * scale;
            scale *= self.p;
            a /= self.p;
            b /= self.p;
        }
        out
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if self.n == 1 {
            return if a == 0 { 0 } else { self.p - a };
        }
        let mut a = a;
        let mut out = 0;
        let mut scale = 1;
        for _ in 0..self.n {
            let d = a % self.p;
            out += ((self.p - d) % self.p) * scale;
            scale *= self.p;
            a /= self.p;
        }
        out
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        match &self.mul {
            Multiplier::Prime => ((a as u64 * b as u64) % self.p as u64) as u32,
            Multiplier::Tables { log, exp } => {
                if a == 0 || b == 0 {
                    0
                } else {
                    exp[(log[a as usize] + log[b as usize]) as usize]
                }
            }
            Multiplier::Poly => self.mul_poly(a, b),
        }
    }

    fn digits(&self, mut x: u32) -> [u32; MAX_DEGREE as usize] {
        let mut d = [0; MAX_DEGREE as usize];
        for slot in d.iter_mut().take(self.n as usize) {
            *slot = x % self.p;
            x /= self.p;
        }
        d
    }

    fn mul_poly(&self, a: u32, b: u32) -> u32 {
        let n = self.n as usize;
        let p = self.p as u64;
        if n == 1 {
            return ((a as u64 * b as u64) % p) as u32;
        }
        let (da, db) = (self.digits(a), self.digits(b));
        let mut prod = [0u64; 2 * MAX_DEGREE as usize];
        for i in 0..n {
            for j in 0..n {
                prod[i + j] = (prod[i + j] + da[i] as u64 * db[j] as u64) % p;
            }
        }
        // reduce with x^n = -(c_0 + ... + c_{n-1} x^{n-1})
        for k in (n..2 * n - 1).rev() {
            let lead = prod[k];
            if lead == 0 {
                continue;
            }
            prod[k] = 0;
            for (i, &c) in self.modulus.iter().enumerate() {
                let idx = k - n + i;
                prod[idx] = (prod[idx] + p - lead * c as u64 % p) % p;
            }
        }
        let mut out = 0u64;
        for i in (0..n).rev() {
            out = out * p + prod[i];
        }
        out as u32
    }

    fn pow_poly(&self, a: u32, mut e: u64) -> u32 {
        let mut base = a;
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_poly(acc, base);
            }
            base = self.mul_poly(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn pow(&self, a: u32, mut e: u64) -> u32 {
        if let Multiplier::Tables { log, .. } = &self.mul {
            if a == 0 {
                return if e == 0 { 1 } else { 0 };
            }
            let order = (self.q - 1) as u64;
            let k = (log[a as usize] as u64 * (e % order)) % order;
            return self.exp_table()[k as usize];
        }
        let mut base = a;
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    fn exp_table(&self) -> &[u32] {
        match &self.mul {
            Multiplier::Tables { exp, .. } => exp,
            _ => unreachable!(),
        }
    }

    pub fn inv(&self, a: u32) -> Result<u32> {
        if a == 0 {
            return Err(Error::InverseOfZero);
        }
        Ok(match &self.mul {
            Multiplier::Tables { log, exp } => {
                let order = self.q - 1;
                exp[((order - log[a as usize]) % order) as usize]
            }
            _ => self.pow(a, self.q as u64 - 2),
        })
    }

    pub fn frobenius(&self, a: u32) -> u32 {
        self.pow(a, self.p as u64)
    }

    /// Absolute trace F_q -> F_p; the result is an element below p.
    #[inline]
    pub fn trace(&self, x: u32) -> u32 {
        self.trace[x as usize]
    }

    /// The F_p-linear map y -> (Tr(y), Tr(y x), ..., Tr(y x^{n-1})) packed as
    /// base-p digits. Converts the pairing Tr(m * x) into a digit dot product.
    #[inline]
    pub fn trace_dual(&self, y: u32) -> u32 {
        self.trace_dual[y as usize]
    }

    /// p-th root of unity `exp(2 pi i r / p)` for `r < p`.
    #[inline]
    pub fn root_of_unity(&self, r: u32) -> Complex64 {
        self.roots[r as usize]
    }

    pub fn roots_of_unity(&self) -> &[Complex64] {
        &self.roots
    }

    /// The canonical additive character.
    #[inline]
    pub fn additive_character(&self, x: u32) -> ComplexValue {
        self.roots[self.trace[x as usize] as usize]
    }

    /// Combine an exact histogram of trace values into the character sum
    /// `sum_r counts[r] * omega^r`.
    pub fn character_sum_from_buckets(&self, counts: &[u64]) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (r, &c) in counts.iter().enumerate() {
            if c != 0 {
                s += self.roots[r] * c as f64;
            }
        }
        s
    }

    pub fn elements(&self) -> std::ops::Range<u32> {
        0..self.q
    }

    /// Quadratic character: 1 for nonzero squares, -1 for non-squares, 0 at 0.
    pub fn quadratic_character(&self, a: u32) -> i32 {
        if a == 0 {
            return 0;
        }
        if self.pow(a, (self.q as u64 - 1) / 2) == 1 {
            1
        } else {
            -1
        }
    }
}

/// Convenience constructor mirroring the operation name used in reports.
pub fn make_field_context(p: u64, n: u32) -> Result<FieldContext> {
    FieldContext::new(p, n)
}
