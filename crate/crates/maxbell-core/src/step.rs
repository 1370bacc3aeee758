//! Non-increasing step functions on `(0, T]` and the calculus on them:
//! decreasing rearrangements, exact integrals of powers, the Hardy average
//! `Av g(t) = (1/t) ∫_0^t g`, and the level crossing `β(λ)` with
//! `Av g(β(λ)) = λ`.
//!
//! Exact cumulative integrals are stored next to the pieces, so every
//! evaluation is a binary search plus closed-form arithmetic on one piece:
//! no quadrature error and no drift along sweeps.

use alloc::vec::Vec;

use crate::math;
use crate::tree::{AtomFunction, ProbTree};
use crate::{Error, Result};

/// One piece of a step function: constant `value` on an interval of length
/// `len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub len: f64,
    pub value: f64,
}

/// A non-increasing, nonnegative step function.
///
/// Probability-normalized instances have total length 1; chunk arithmetic
/// (restrictions, partial integrals) works on any positive total.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    pieces: Vec<Piece>,
    /// `cum_len[i]` = left endpoint of piece `i`; last entry = total length.
    cum_len: Vec<f64>,
    /// `cum_int[i]` = `∫_0^{cum_len[i]} g`.
    cum_int: Vec<f64>,
}

impl StepFunction {
    /// Builds a step function from `(length, value)` pieces listed from the
    /// left end of the domain (largest values first).
    pub fn new(pieces: Vec<(f64, f64)>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidStep("no pieces"));
        }
        let mut prev = f64::INFINITY;
        for &(len, value) in &pieces {
            if !(len > 0.0) || !len.is_finite() {
                return Err(Error::InvalidStep("piece lengths must be positive"));
            }
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::InvalidStep("values must be nonnegative and finite"));
            }
            if value > prev {
                return Err(Error::InvalidStep("values must be non-increasing"));
            }
            prev = value;
        }
        let mut cum_len = Vec::with_capacity(pieces.len() + 1);
        let mut cum_int = Vec::with_capacity(pieces.len() + 1);
        cum_len.push(0.0);
        cum_int.push(0.0);
        let mut tl = 0.0;
        let mut ti = 0.0;
        for &(len, value) in &pieces {
            tl += len;
            ti += len * value;
            cum_len.push(tl);
            cum_int.push(ti);
        }
        Ok(StepFunction {
            pieces: pieces
                .into_iter()
                .map(|(len, value)| Piece { len, value })
                .collect(),
            cum_len,
            cum_int,
        })
    }

    /// The constant function `value` on `(0, 1]`.
    pub fn constant(value: f64) -> Self {
        StepFunction::new(alloc::vec![(1.0, value)]).expect("constant piece is valid")
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn total_length(&self) -> f64 {
        *self.cum_len.last().unwrap()
    }

    /// Whether the domain is `(0, 1]` up to the declared CSV tolerance.
    pub fn is_probability(&self) -> bool {
        math::abs(self.total_length() - 1.0) <= 1e-9
    }

    /// `∫_0^T g`, the mean when the domain is `(0, 1]`.
    pub fn mean(&self) -> f64 {
        *self.cum_int.last().unwrap()
    }

    /// Largest value, attained on the first piece.
    pub fn max_value(&self) -> f64 {
        self.pieces[0].value
    }

    /// Index of the piece whose interval `(cum_len[i], cum_len[i+1]]`
    /// contains `t`. Requires `0 < t <= total`.
    pub(crate) fn piece_index(&self, t: f64) -> usize {
        let n = self.pieces.len();
        self.cum_len[1..n].partition_point(|&x| x < t)
    }

    /// Right endpoints of the pieces: the breakpoint grid, ending at the
    /// total length.
    pub fn breakpoints(&self) -> &[f64] {
        &self.cum_len[1..]
    }

    /// On piece `i` the Hardy average is `Av(t) = v + c/t`; returns `(v, c)`.
    /// `c = ∫_0^{l_i} g - v_i·l_i` is nonnegative for non-increasing values
    /// and exactly zero on the first piece.
    pub(crate) fn avg_params(&self, i: usize) -> (f64, f64) {
        let v = self.pieces[i].value;
        let c = (self.cum_int[i] - v * self.cum_len[i]).max(0.0);
        (v, c)
    }

    fn check_t(&self, t: f64) -> Result<f64> {
        let total = self.total_length();
        if !(t > 0.0) || t > total * (1.0 + 1e-12) {
            return Err(Error::OutOfDomain {
                what: "t",
                value: t,
                lo: 0.0,
                hi: total,
            });
        }
        Ok(t.min(total))
    }

    /// `g(t)` for `t` in `(0, T]` (pieces are left-open, right-closed).
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let t = self.check_t(t)?;
        Ok(self.pieces[self.piece_index(t)].value)
    }

    /// `∫_0^t g`, exact.
    pub fn cumulative(&self, t: f64) -> Result<f64> {
        let t = self.check_t(t)?;
        let i = self.piece_index(t);
        Ok(self.cum_int[i] + self.pieces[i].value * (t - self.cum_len[i]))
    }

    /// The Hardy average `Av g(t) = (1/t) ∫_0^t g`; continuous and
    /// non-increasing on `(0, T]`.
    pub fn hardy_average(&self, t: f64) -> Result<f64> {
        let t = self.check_t(t)?;
        Ok(self.cumulative(t)? / t)
    }

    /// `∫_0^t g^q`, exact (the boundary piece is prorated).
    pub fn power_integral(&self, q: f64, t: f64) -> Result<f64> {
        if !(q >= 0.0) {
            return Err(Error::OutOfDomain {
                what: "q",
                value: q,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        let t = self.check_t(t)?;
        let i = self.piece_index(t);
        let mut acc = 0.0;
        for p in &self.pieces[..i] {
            acc += p.len * math::powf(p.value, q);
        }
        acc += (t - self.cum_len[i]) * math::powf(self.pieces[i].value, q);
        Ok(acc)
    }

    /// `∫_lo^hi f(g(u)) du`, exact for any pointwise map `f` (the integrand is
    /// piecewise constant).
    pub fn map_integral(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
        let total = self.total_length();
        if !(lo >= 0.0) || hi > total * (1.0 + 1e-12) || lo > hi {
            return Err(Error::OutOfDomain {
                what: "integration bound",
                value: if lo < 0.0 { lo } else { hi },
                lo: 0.0,
                hi: total,
            });
        }
        let hi = hi.min(total);
        let mut acc = 0.0;
        for (i, p) in self.pieces.iter().enumerate() {
            let a = self.cum_len[i].max(lo);
            let b = self.cum_len[i + 1].min(hi);
            if b > a {
                acc += (b - a) * f(p.value);
            }
        }
        Ok(acc)
    }

    /// The pieces of `g` restricted to `(lo, hi]`, in domain order.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
        let total = self.total_length();
        if !(lo >= 0.0) || hi > total * (1.0 + 1e-12) || lo >= hi {
            return Err(Error::OutOfDomain {
                what: "restriction bound",
                value: if lo < 0.0 { lo } else { hi },
                lo: 0.0,
                hi: total,
            });
        }
        let hi = hi.min(total);
        let mut out = Vec::new();
        for (i, p) in self.pieces.iter().enumerate() {
            let a = self.cum_len[i].max(lo);
            let b = self.cum_len[i + 1].min(hi);
            if b > a {
                out.push((b - a, p.value));
            }
        }
        Ok(out)
    }

    /// Maps values pointwise through a non-decreasing function, keeping the
    /// piece layout. The result is again a valid step function.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<StepFunction> {
        StepFunction::new(self.pieces.iter().map(|p| (p.len, f(p.value))).collect())
    }

    /// The largest `t` with `Av g(t) = λ`, solved piecewise in closed form.
    ///
    /// On piece `i` the average is `(v_i·t + C_i)/t` with
    /// `C_i = ∫_0^{l_i} g − v_i·l_i ≥ 0`, so the root is `C_i/(λ − v_i)`.
    ///
    /// Levels above the maximal value return the empty-level sentinel `0`;
    /// levels not exceeding the mean have no crossing inside the domain and
    /// are an error.
    pub fn beta_lambda(&self, lambda: f64) -> Result<f64> {
        let total = self.total_length();
        let mean_avg = self.mean() / total;
        let n = self.pieces.len();
        // First right endpoint where the average drops strictly below λ.
        // Written multiplicatively to avoid the division.
        let mut k = n + 1;
        for i in 1..=n {
            if self.cum_int[i] < lambda * self.cum_len[i] {
                k = i;
                break;
            }
        }
        if k == n + 1 {
            return Err(Error::LevelBelowAverage {
                lambda,
                mean: mean_avg,
            });
        }
        if k == 1 {
            // The average starts at the maximal value; λ lies above it.
            return Ok(0.0);
        }
        let i = k - 1;
        let v = self.pieces[i].value;
        let c = (self.cum_int[i] - v * self.cum_len[i]).max(0.0);
        let beta = c / (lambda - v);
        Ok(beta.clamp(self.cum_len[i], self.cum_len[i + 1]))
    }
}

/// The decreasing rearrangement `φ*` of a simple function: its atom
/// `(measure, value)` pairs sorted by value, descending. Ties keep the
/// original atom order; only the multiset matters downstream.
pub fn decreasing_rearrangement(tree: &ProbTree, phi: &AtomFunction) -> Result<StepFunction> {
    phi.check_against(tree)?;
    let mut pairs: Vec<(f64, f64)> = phi
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| (tree.leaf_measure(i), v))
        .collect();
    pairs.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("values are finite"));
    StepFunction::new(pairs)
}

/// Rearranges arbitrary `(measure, value)` pairs into a step function.
pub fn rearrange_pairs(pairs: Vec<(f64, f64)>) -> Result<StepFunction> {
    let mut pairs = pairs;
    pairs.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("values are finite"));
    StepFunction::new(pairs)
}

/// `∫_0^upto f(t)·g(t) dt` for two step functions, exact on the merged
/// breakpoint grid.
pub fn product_integral(f: &StepFunction, g: &StepFunction, upto: f64) -> Result<f64> {
    let hi = upto.min(f.total_length()).min(g.total_length());
    if !(upto > 0.0) {
        return Err(Error::OutOfDomain {
            what: "upto",
            value: upto,
            lo: 0.0,
            hi,
        });
    }
    let mut acc = 0.0;
    let mut t = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while t < hi {
        let fe = f.cum_len[i + 1];
        let ge = g.cum_len[j + 1];
        let next = fe.min(ge).min(hi);
        acc += (next - t) * f.pieces[i].value * g.pieces[j].value;
        t = next;
        if fe <= t && i + 1 < f.pieces.len() {
            i += 1;
        }
        if ge <= t && j + 1 < g.pieces.len() {
            j += 1;
        }
    }
    Ok(acc)
}
