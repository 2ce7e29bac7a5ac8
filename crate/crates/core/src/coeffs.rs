//! Exact multi-product extrapolation coefficients.
//!
//! A sequence of `n` distinct positive integers `{k_1, ..., k_n}` defines the
//! combination `Σ c_i T2^{k_i}(h / k_i)` of powers of a symmetric second-order
//! stepper. Because the powers carry errors in even powers of `1/k_i`, the
//! weights solve a Vandermonde system in the nodes `x_i = k_i^-2` and have the
//! closed form `c_i = Π_{j≠i} k_i² / (k_i² - k_j²)`. The leading error of the
//! resulting order-`2n` method is `(-1)^(n-1) Π k_i^-2` times `h^(2n+1)`.
//!
//! Two independent routes are provided: the closed-form product
//! ([`weights`]) and Lagrange basis polynomials evaluated at zero
//! ([`weights_via_lagrange`]); [`vandermonde_residual`] checks either.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Exact rational number, always reduced with a positive denominator.
pub type Rational = BigRational;

/// Distinct positive integers, stored ascending.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sequence(Vec<u32>);

impl Sequence {
    pub fn new(mut ks: Vec<u32>) -> Result<Self> {
        if ks.is_empty() {
            return Err(Error::InvalidSequence("sequence is empty".into()));
        }
        if ks.contains(&0) {
            return Err(Error::InvalidSequence("entries must be >= 1".into()));
        }
        ks.sort_unstable();
        if let Some(w) = ks.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidSequence(format!(
                "duplicate entry {} (k_i^2 - k_j^2 would vanish)",
                w[0]
            )));
        }
        Ok(Self(ks))
    }

    pub fn ks(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Order of the extrapolated method, `2n`.
    pub fn order(&self) -> u32 {
        2 * self.0.len() as u32
    }

    /// Total number of base steps, `Σ k_i`.
    pub fn total_steps(&self) -> u64 {
        self.0.iter().map(|&k| k as u64).sum()
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl std::str::FromStr for Sequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ks = s
            .split(',')
            .map(|p| p.trim())
            .filter(|p| !p.is_empty())
            .map(|p| {
                p.parse::<u32>()
                    .map_err(|_| Error::InvalidSequence(format!("not a positive integer: {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Sequence::new(ks)
    }
}

/// Extrapolation weights and leading error coefficient of a sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    pub cs: Vec<Rational>,
    pub err: Rational,
    pub order: u32,
}

impl Weights {
    /// Correctly rounded image of the weights in a scalar backend.
    pub fn to_real<T: Real>(&self) -> Vec<T> {
        self.cs.iter().map(T::from_rational).collect()
    }
}

fn int(k: u32) -> Rational {
    Rational::from_integer(BigInt::from(k))
}

fn square(k: u32) -> Rational {
    int(k) * int(k)
}

/// Closed-form weights `c_i = Π_{j≠i} k_i²/(k_i² − k_j²)` and error
/// coefficient `(−1)^(n−1) Π 1/k_i²`.
pub fn weights(seq: &Sequence) -> Weights {
    let ks = seq.ks();
    let cs = ks
        .iter()
        .enumerate()
        .map(|(i, &ki)| {
            ks.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(Rational::one(), |acc, (_, &kj)| {
                    acc * square(ki) / (square(ki) - square(kj))
                })
        })
        .collect();
    let magnitude = ks.iter().fold(Rational::one(), |acc, &k| acc / square(k));
    let err = if ks.len() % 2 == 1 {
        magnitude
    } else {
        -magnitude
    };
    Weights {
        cs,
        err,
        order: seq.order(),
    }
}

/// Value of the `i`-th Lagrange basis polynomial over `nodes` at `x`.
pub fn lagrange_basis_at(nodes: &[Rational], i: usize, x: &Rational) -> Rational {
    nodes
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .fold(Rational::one(), |acc, (_, xj)| {
            acc * (x - xj) / (&nodes[i] - xj)
        })
}

/// Weights as `c_i = L_i(0)` over the nodes `x_i = k_i^-2`.
///
/// The error coefficient is taken from the first unmatched moment,
/// `Σ c_i x_i^n`, which is how the truncated extrapolation fails.
pub fn weights_via_lagrange(seq: &Sequence) -> Weights {
    let nodes: Vec<Rational> = seq.ks().iter().map(|&k| square(k).recip()).collect();
    let zero = Rational::zero();
    let cs: Vec<Rational> = (0..nodes.len())
        .map(|i| lagrange_basis_at(&nodes, i, &zero))
        .collect();
    let n = nodes.len() as i32;
    let err = cs.iter().zip(&nodes).fold(Rational::zero(), |acc, (c, x)| {
        acc + c * num_traits::pow(x.clone(), n as usize)
    });
    Weights {
        cs,
        err,
        order: seq.order(),
    }
}

/// `V·cs − (1, 0, …, 0)` where row `m` of `V` is `(k_1^{-2m}, …, k_n^{-2m})`.
pub fn vandermonde_residual(seq: &Sequence, cs: &[Rational]) -> Result<Vec<Rational>> {
    if cs.len() != seq.len() {
        return Err(Error::LengthMismatch {
            expected: seq.len(),
            got: cs.len(),
        });
    }
    let nodes: Vec<Rational> = seq.ks().iter().map(|&k| square(k).recip()).collect();
    let mut powers: Vec<Rational> = vec![Rational::one(); nodes.len()];
    let mut residual = Vec::with_capacity(nodes.len());
    for m in 0..nodes.len() {
        let row: Rational = cs
            .iter()
            .zip(&powers)
            .fold(Rational::zero(), |acc, (c, p)| acc + c * p);
        residual.push(if m == 0 { row - Rational::one() } else { row });
        for (p, x) in powers.iter_mut().zip(&nodes) {
            *p = &*p * x;
        }
    }
    Ok(residual)
}

/// `{1, 2, …, n}`: the fewest base steps at order `2n`.
pub fn natural_sequence(n: usize) -> Result<Sequence> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    Sequence::new((1..=n as u32).collect())
}

/// The `n` distinct positive integers summing to `total` with the smallest
/// error coefficient `Π k_i^-2`, i.e. the largest product. Ties go to the
/// lexicographically smallest ascending sequence.
pub fn optimal_sequence(total: u64, n: usize) -> Result<Sequence> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let min = (n * (n + 1) / 2) as u64;
    if total < min {
        return Err(Error::Infeasible { total, n, min });
    }
    let mut search = OptimalSearch {
        best: None,
        current: Vec::with_capacity(n),
    };
    search.descend(total, n, 1, &BigUint::one());
    let (_, ks) = search.best.expect("feasible total always has a sequence");
    Sequence::new(ks)
}

struct OptimalSearch {
    best: Option<(BigUint, Vec<u32>)>,
    current: Vec<u32>,
}

impl OptimalSearch {
    // Enumerates ascending sequences in lexicographic order, so only a strictly
    // larger product replaces the incumbent.
    fn descend(&mut self, remaining: u64, slots: usize, lowest: u64, product: &BigUint) {
        if slots == 0 {
            if remaining == 0 {
                let better = match &self.best {
                    None => true,
                    Some((p, _)) => product > p,
                };
                if better {
                    self.best = Some((product.clone(), self.current.clone()));
                }
            }
            return;
        }
        if slots == 1 {
            if remaining >= lowest {
                self.current.push(remaining as u32);
                self.descend(0, 0, remaining + 1, &(product * BigUint::from(remaining)));
                self.current.pop();
            }
            return;
        }
        let s = slots as u64;
        // Smallest completion: lowest, lowest+1, ...; stop when it overshoots.
        let mut k = lowest;
        while k * s + s * (s - 1) / 2 <= remaining {
            self.current.push(k as u32);
            self.descend(
                remaining - k,
                slots - 1,
                k + 1,
                &(product * BigUint::from(k)),
            );
            self.current.pop();
            k += 1;
        }
    }
}

/// Render a rational as `p/q`, or `p` when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// `(-1)^(n-1) / (n!)^2`, the error coefficient of the natural sequence.
pub fn natural_error_coefficient(n: usize) -> Rational {
    let fact: BigInt = (1..=n as u64).map(BigInt::from).product();
    let magnitude = Rational::new(BigInt::one(), &fact * &fact);
    if n % 2 == 1 {
        magnitude
    } else {
        -magnitude
    }
}

/// True when `err` has sign `(-1)^(n-1)`.
pub fn error_sign_is_alternating(w: &Weights) -> bool {
    let n = w.cs.len();
    if n % 2 == 1 {
        w.err.is_positive()
    } else {
        w.err.is_negative()
    }
}
