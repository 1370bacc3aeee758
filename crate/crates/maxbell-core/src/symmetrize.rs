//! The symmetrization layer.
//!
//! For non-decreasing `G1`, `G2` and a non-increasing `g` on `(0,1]`, the
//! supremum of `∫_K G1(M_T φ) G2(φ) dμ` over all rearrangements `φ* = g` and
//! all `K` with `μ(K) = k` equals the one-dimensional integral
//! `∫_0^k G1((1/t)∫_0^t g) G2(g(t)) dt`. This module evaluates both sides:
//!
//! * [`rhs_integral`] — the one-dimensional side, exact per piece where the
//!   integrand has a closed form, adaptive quadrature otherwise;
//! * [`lhs_functional`] — the tree side for a concrete `φ` and optimal `K`;
//! * [`brute_force_sup`] — exhaustive enumeration of all rearrangements on
//!   small uniform atom spaces, the desk-scale oracle for the supremum;
//! * [`build_extremizer`] / [`extremizer_lower_bound`] — the chain family
//!   `φ_a` whose functional values Riemann-sum to the right side as `a → 0`.
//!
//! The second factor can also be an explicit non-increasing weight `h(t)`,
//! in which case the left side is `∫_0^k G1((M_T φ)*)(t) h(t) dt` — the
//! weighted symmetrization principle.

use alloc::vec::Vec;

use crate::math;
use crate::maximal::maximal_operator;
use crate::quad::{int_avg_pow, merge_breakpoints, DEFAULT_QUAD_REL_TOL};
use crate::step::{rearrange_pairs, product_integral, StepFunction};
use crate::tree::{AtomFunction, NodeId, ProbTree, TreeBuilder};
use crate::{Error, Result};

/// A non-decreasing, nonnegative function on `[0, ∞)` drawn from the menu
/// the verification sweeps need.
#[derive(Debug, Clone, PartialEq)]
pub enum GFunc {
    /// `t^q`, `q ≥ 0`.
    Power(f64),
    /// `max(t, level)^q`.
    PowerOfMax { exponent: f64, level: f64 },
    /// `t`.
    Identity,
    /// `c ≥ 0`.
    Constant(f64),
}

impl GFunc {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            GFunc::Power(q) => math::powf(t, q),
            GFunc::PowerOfMax { exponent, level } => math::powf(t.max(level), exponent),
            GFunc::Identity => t,
            GFunc::Constant(c) => c,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            GFunc::Power(q) => q >= 0.0 && q.is_finite(),
            GFunc::PowerOfMax { exponent, level } => {
                exponent >= 0.0 && exponent.is_finite() && level >= 0.0 && level.is_finite()
            }
            GFunc::Identity => true,
            GFunc::Constant(c) => c >= 0.0 && c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(
                "factors must be non-decreasing and nonnegative on [0, ∞)",
            ))
        }
    }
}

/// Second factor of the functional: either `G2` composed with the function
/// itself, or an explicit non-increasing weight in the rearrangement
/// variable.
#[derive(Debug, Clone)]
pub enum SecondFactor {
    Compose(GFunc),
    Weight(StepFunction),
}

/// The pair `(G1, second factor)` defining the functional under test.
#[derive(Debug, Clone)]
pub struct FunctionalSpec {
    outer: GFunc,
    second: SecondFactor,
}

impl FunctionalSpec {
    pub fn new(outer: GFunc, second: SecondFactor) -> Result<Self> {
        outer.validate()?;
        match &second {
            SecondFactor::Compose(inner) => inner.validate()?,
            SecondFactor::Weight(h) => {
                // Step functions are non-increasing and nonnegative by
                // construction; it only needs to cover (0, 1].
                if h.total_length() < 1.0 - 1e-9 {
                    return Err(Error::InvalidSpec("weight must cover (0, 1]"));
                }
            }
        }
        Ok(FunctionalSpec { outer, second })
    }

    /// Shorthand for the compose mode.
    pub fn compose(outer: GFunc, inner: GFunc) -> Result<Self> {
        FunctionalSpec::new(outer, SecondFactor::Compose(inner))
    }

    /// Shorthand for the explicit-weight mode.
    pub fn weighted(outer: GFunc, weight: StepFunction) -> Result<Self> {
        FunctionalSpec::new(outer, SecondFactor::Weight(weight))
    }

    pub fn outer(&self) -> &GFunc {
        &self.outer
    }

    pub fn second(&self) -> &SecondFactor {
        &self.second
    }
}

fn check_k(k: f64, total: f64) -> Result<f64> {
    if !(k > 0.0) || k > total * (1.0 + 1e-12) {
        return Err(Error::OutOfDomain {
            what: "k",
            value: k,
            lo: 0.0,
            hi: total,
        });
    }
    Ok(k.min(total))
}

/// `∫_0^k G1(Av g(t)) · w(t) dt` with `w = G2∘g` or the explicit weight.
///
/// On each cell of the merged breakpoint grid the weight is constant and
/// `Av g(t) = v + c/t`, so the integrand reduces to the piece kernel of
/// [`crate::quad`]: closed form for integer exponents, adaptive quadrature
/// to `rel_tol` otherwise.
pub fn rhs_integral(g: &StepFunction, spec: &FunctionalSpec, k: f64) -> Result<f64> {
    rhs_integral_tol(g, spec, k, DEFAULT_QUAD_REL_TOL)
}

/// [`rhs_integral`] with an explicit quadrature tolerance.
pub fn rhs_integral_tol(
    g: &StepFunction,
    spec: &FunctionalSpec,
    k: f64,
    rel_tol: f64,
) -> Result<f64> {
    let k = check_k(k, g.total_length())?;
    let end_average = g.mean() / g.total_length();
    // For G1 = max(·, L)^q the average crosses L at most once; split there.
    let crossing = match *spec.outer() {
        GFunc::PowerOfMax { level, .. } if level > end_average => {
            Some(g.beta_lambda(level)?)
        }
        _ => None,
    };
    let crossing_cuts: &[f64] = match &crossing {
        Some(beta) => core::slice::from_ref(beta),
        None => &[],
    };
    let empty: &[f64] = &[];
    let weight_cuts = match spec.second() {
        SecondFactor::Compose(_) => empty,
        SecondFactor::Weight(h) => h.breakpoints(),
    };
    let cuts = merge_breakpoints(&[g.breakpoints(), weight_cuts, crossing_cuts], k);

    let mut acc = 0.0;
    let mut lo = 0.0;
    for &hi in &cuts {
        let mid = 0.5 * (lo + hi);
        let i = g.piece_index(mid);
        let (v, c) = g.avg_params(i);
        let w = match spec.second() {
            SecondFactor::Compose(inner) => inner.eval(v),
            SecondFactor::Weight(h) => h.value_at(mid)?,
        };
        let outer_part = match *spec.outer() {
            GFunc::Constant(c0) => c0 * (hi - lo),
            GFunc::Identity => int_avg_pow(v, c, 1.0, lo.max(f64::MIN_POSITIVE), hi, rel_tol),
            GFunc::Power(q) => int_avg_pow(v, c, q, lo.max(f64::MIN_POSITIVE), hi, rel_tol),
            GFunc::PowerOfMax { exponent, level } => match crossing {
                // Left of the crossing the max is the average itself,
                // right of it the constant `level`.
                Some(beta) if mid > beta => math::powf(level, exponent) * (hi - lo),
                _ => int_avg_pow(v, c, exponent, lo.max(f64::MIN_POSITIVE), hi, rel_tol),
            },
        };
        acc += w * outer_part;
        lo = hi;
    }
    Ok(acc)
}

/// The tree side `sup_K ∫_K G1(M_T φ)·G2(φ) dμ` over `μ(K) = k`.
///
/// The integrand is nonnegative and constant on atoms, so the optimal `K`
/// fills atoms by descending integrand, prorating the boundary atom — the
/// finite-space surrogate of an exact measure-`k` subset. In weight mode the
/// left side is `∫_0^k G1((M_T φ)*)(t)·h(t) dt`, a product of non-increasing
/// step functions, hence the optimal `K = (0, k]` is exact.
pub fn lhs_functional(
    tree: &ProbTree,
    phi: &AtomFunction,
    spec: &FunctionalSpec,
    k: f64,
) -> Result<f64> {
    let k = check_k(k, 1.0)?;
    let maximal = maximal_operator(tree, phi)?;
    match spec.second() {
        SecondFactor::Compose(inner) => {
            let mut cells: Vec<(f64, f64)> = maximal
                .values()
                .iter()
                .enumerate()
                .map(|(i, &m)| {
                    (
                        spec.outer().eval(m) * inner.eval(phi.values()[i]),
                        tree.leaf_measure(i),
                    )
                })
                .collect();
            cells.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("integrand is finite"));
            let mut remaining = k;
            let mut acc = 0.0;
            for (integrand, measure) in cells {
                if remaining <= 0.0 {
                    break;
                }
                let take = measure.min(remaining);
                acc += integrand * take;
                remaining -= take;
            }
            Ok(acc)
        }
        SecondFactor::Weight(h) => {
            let pairs: Vec<(f64, f64)> = maximal
                .values()
                .iter()
                .enumerate()
                .map(|(i, &m)| (tree.leaf_measure(i), m))
                .collect();
            let mstar = rearrange_pairs(pairs)?;
            let mapped = mstar.map_values(|t| spec.outer().eval(t))?;
            product_integral(&mapped, h, k)
        }
    }
}

/// Result of the exhaustive search over rearrangements.
#[derive(Debug, Clone)]
pub struct BruteForceSup {
    /// The maximal functional value.
    pub value: f64,
    /// An assignment of values to atoms attaining it.
    pub assignment: Vec<f64>,
    /// Number of distinct assignments evaluated.
    pub evaluations: usize,
}

/// Maximizes `lhs_functional` over every distinct assignment of the value
/// multiset of `g` to the atoms of a uniform tree. Factorial enumeration:
/// refuses more than 10 atoms (use the extremizer lower bound at scale).
pub fn brute_force_sup(
    g: &StepFunction,
    tree: &ProbTree,
    spec: &FunctionalSpec,
    k: f64,
) -> Result<BruteForceSup> {
    let n = tree.leaf_count();
    if n > 10 {
        return Err(Error::TooLarge {
            what: "atom count for exhaustive rearrangement search (use the extremizer lower bound instead)",
            max: 10,
            got: n,
        });
    }
    if g.pieces().len() != n {
        return Err(Error::InvalidStep(
            "exhaustive search needs one piece per atom",
        ));
    }
    let share = 1.0 / n as f64;
    for p in g.pieces() {
        if math::abs(p.len - share) > 1e-9 {
            return Err(Error::InvalidStep(
                "exhaustive search needs equal piece lengths 1/n",
            ));
        }
    }
    for i in 0..n {
        if math::abs(tree.leaf_measure(i) - share) > 1e-9 {
            return Err(Error::InvalidTree(
                "exhaustive search needs uniform atoms of measure 1/n",
            ));
        }
    }
    let mut values: Vec<f64> = g.pieces().iter().map(|p| p.value).collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best = f64::NEG_INFINITY;
    let mut best_assignment = values.clone();
    let mut evaluations = 0usize;
    loop {
        let phi = AtomFunction::new(tree, values.clone())?;
        let value = lhs_functional(tree, &phi, spec, k)?;
        evaluations += 1;
        if value > best {
            best = value;
            best_assignment = values.clone();
        }
        if !next_permutation(&mut values) {
            break;
        }
    }
    Ok(BruteForceSup {
        value: best,
        assignment: best_assignment,
        evaluations,
    })
}

/// Lexicographic next permutation; skips duplicates, so iterating from the
/// sorted order enumerates each distinct multiset assignment exactly once.
fn next_permutation(a: &mut [f64]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// The chain realization of the extremizer family at one shrink factor `a`.
///
/// Level `m` holds a chain node of measure `(1-a)^m` whose children are the
/// next chain node and a ring of measure `a(1-a)^m`; the ring is subdivided
/// along the pieces of `g` restricted to `((1-a)^{m+1}, (1-a)^m]` and
/// carries those values, so the restriction of `φ_a` to the ring has exactly
/// that chunk as its rearrangement. Levels beyond the truncation are merged
/// into one terminal atom carrying the mean of the remaining chunk.
#[derive(Debug, Clone)]
pub struct ExtremizerTree {
    tree: ProbTree,
    phi: AtomFunction,
    shrink: f64,
    levels: usize,
    chain: Vec<NodeId>,
    rings: Vec<NodeId>,
    theta: Vec<f64>,
    gamma: Vec<f64>,
}

impl ExtremizerTree {
    pub fn tree(&self) -> &ProbTree {
        &self.tree
    }

    pub fn phi(&self) -> &AtomFunction {
        &self.phi
    }

    pub fn shrink(&self) -> f64 {
        self.shrink
    }

    /// Truncation level: number of subdivided chain levels.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Chain nodes, root first; the last one is the terminal atom.
    pub fn chain(&self) -> &[NodeId] {
        &self.chain
    }

    /// Ring nodes, one per subdivided level.
    pub fn rings(&self) -> &[NodeId] {
        &self.rings
    }

    /// `θ_m = (1-a)^{-m} ∫_0^{(1-a)^m} g`: the average of `φ_a` over the
    /// `m`-th chain node (entries `0..=levels`).
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// `γ_m`: the average of `φ_a` over the `m`-th ring.
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }
}

/// Smallest truncation level whose tail carries less than `tail_tol` of the
/// mass of `g`.
pub fn suggest_truncation(g: &StepFunction, a: f64, tail_tol: f64) -> Result<usize> {
    check_shrink(a)?;
    let mean = g.mean();
    let limit = tail_tol * mean;
    let mut scale = 1.0 - a;
    for m in 1..=4_000_000usize {
        if g.cumulative(scale)? < limit || mean == 0.0 {
            return Ok(m);
        }
        scale *= 1.0 - a;
    }
    Err(Error::TailTooHeavy {
        tail_mass: g.cumulative(scale)?,
        limit,
    })
}

fn check_shrink(a: f64) -> Result<()> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::OutOfDomain {
            what: "shrink factor a",
            value: a,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

fn check_extremizer_inputs(
    g: &StepFunction,
    a: f64,
    m_trunc: usize,
    tail_tol: f64,
) -> Result<Vec<f64>> {
    check_shrink(a)?;
    if m_trunc == 0 {
        return Err(Error::OutOfDomain {
            what: "truncation level",
            value: 0.0,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    if !g.is_probability() {
        return Err(Error::InvalidStep(
            "extremizer needs a probability-normalized step function",
        ));
    }
    let scales: Vec<f64> = (0..=m_trunc).map(|m| math::powi(1.0 - a, m as i32)).collect();
    let mean = g.mean();
    let tail_mass = g.cumulative(scales[m_trunc])?;
    if mean > 0.0 && tail_mass > tail_tol * mean {
        return Err(Error::TailTooHeavy {
            tail_mass,
            limit: tail_tol * mean,
        });
    }
    Ok(scales)
}

/// Builds the chain extremizer `φ_a` with `g` as its rearrangement (up to
/// the flattened tail below `(1-a)^{m_trunc}`).
///
/// The tail must carry less than `tail_tol · ∫g` of mass; convergence sweeps
/// use `1e-6`, doc-scale examples pass a loose tolerance.
pub fn build_extremizer(
    g: &StepFunction,
    a: f64,
    m_trunc: usize,
    tail_tol: f64,
) -> Result<ExtremizerTree> {
    let scales = check_extremizer_inputs(g, a, m_trunc, tail_tol)?;
    let mut builder = TreeBuilder::new();
    let mut chain = alloc::vec![builder.root()];
    let mut rings = Vec::with_capacity(m_trunc);
    let mut leaf_values: Vec<(NodeId, f64)> = Vec::new();
    for m in 0..m_trunc {
        let parent = chain[m];
        let next = builder.add_child(parent, scales[m + 1]);
        let ring_measure = scales[m] - scales[m + 1];
        let mut chunk = g.restrict(scales[m + 1], scales[m])?;
        // Snap the chunk lengths to the ring measure so children sums stay
        // exact even when the cuts round.
        let others: f64 = chunk[..chunk.len() - 1].iter().map(|c| c.0).sum();
        let last = chunk.len() - 1;
        chunk[last].0 = ring_measure - others;
        if !(chunk[last].0 > 0.0) {
            return Err(Error::Inconsistent(
                "chunk snapping produced a non-positive piece",
            ));
        }
        if chunk.len() == 1 {
            let atom = builder.add_child(parent, ring_measure);
            leaf_values.push((atom, chunk[0].1));
            rings.push(atom);
        } else {
            let ring = builder.add_child(parent, ring_measure);
            for &(len, value) in &chunk {
                let atom = builder.add_child(ring, len);
                leaf_values.push((atom, value));
            }
            rings.push(ring);
        }
        chain.push(next);
    }
    // Terminal atom: the remaining chunk as a single block at its mean.
    let tail_measure = scales[m_trunc];
    let tail_mass = g.cumulative(tail_measure)?;
    leaf_values.push((chain[m_trunc], tail_mass / tail_measure));

    let tree = builder.finish()?;
    let mut values = alloc::vec![0.0f64; tree.leaf_count()];
    for (node, value) in leaf_values {
        let li = tree
            .leaf_index_of(node)
            .ok_or(Error::Inconsistent("extremizer atom is not a leaf"))?;
        values[li] = value;
    }
    let phi = AtomFunction::new(&tree, values)?;

    let theta: Vec<f64> = (0..=m_trunc)
        .map(|m| g.cumulative(scales[m]).map(|c| c / scales[m]))
        .collect::<Result<_>>()?;
    let gamma: Vec<f64> = (0..m_trunc)
        .map(|m| {
            let hi = g.cumulative(scales[m])?;
            let lo = g.cumulative(scales[m + 1])?;
            Ok((hi - lo) / (scales[m] - scales[m + 1]))
        })
        .collect::<Result<_>>()?;

    // Verify the average identities the construction promises.
    let averages = tree.node_averages(&phi)?;
    for m in 0..=m_trunc {
        let got = averages[chain[m].index()];
        if !math::close(got, theta[m], 1e-9) {
            return Err(Error::Inconsistent("chain-node average drifted from θ_m"));
        }
    }
    for m in 0..m_trunc {
        let got = averages[rings[m].index()];
        if !math::close(got, gamma[m], 1e-9) {
            return Err(Error::Inconsistent("ring average drifted from γ_m"));
        }
    }

    Ok(ExtremizerTree {
        tree,
        phi,
        shrink: a,
        levels: m_trunc,
        chain,
        rings,
        theta,
        gamma,
    })
}

/// The truncated Riemann lower bound
/// `Σ_{m<M} G1(θ_m)·∫_{(1-a)^{m+1}}^{(1-a)^m} w + G1(θ_M)·∫_0^{(1-a)^M} w`
/// with `w = G2(g(u))` or the explicit weight.
///
/// Each chunk term is exact; since `θ_m` is non-decreasing in `m` for
/// non-increasing `g`, pricing the whole tail at `G1(θ_M)` underestimates
/// the untruncated sum, which in turn never exceeds [`rhs_integral`]. The
/// bound converges to the right side as `a → 0`.
pub fn extremizer_lower_bound(
    g: &StepFunction,
    a: f64,
    m_trunc: usize,
    spec: &FunctionalSpec,
    tail_tol: f64,
) -> Result<f64> {
    let scales = check_extremizer_inputs(g, a, m_trunc, tail_tol)?;
    let weight_mass = |lo: f64, hi: f64| -> Result<f64> {
        match spec.second() {
            SecondFactor::Compose(inner) => g.map_integral(lo, hi, |v| inner.eval(v)),
            SecondFactor::Weight(h) => {
                let upper = h.cumulative(hi)?;
                let lower = if lo > 0.0 { h.cumulative(lo)? } else { 0.0 };
                Ok(upper - lower)
            }
        }
    };
    let mut acc = 0.0;
    for m in 0..m_trunc {
        let theta = g.cumulative(scales[m])? / scales[m];
        acc += spec.outer().eval(theta) * weight_mass(scales[m + 1], scales[m])?;
    }
    let theta_tail = g.cumulative(scales[m_trunc])? / scales[m_trunc];
    acc += spec.outer().eval(theta_tail) * weight_mass(0.0, scales[m_trunc])?;
    Ok(acc)
}
