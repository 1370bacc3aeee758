//! The tree maximal operator and the classical inequalities it satisfies.
//!
//! `M_T φ(x) = sup { (1/μ(I)) ∫_I φ dμ : x ∈ I ∈ T }`. On a finite tree the
//! supremum is a maximum over the root-to-atom path, computed here from one
//! bottom-up integral pass and one top-down sweep. Atoms themselves belong
//! to the truncated tree, so `M_T φ ≥ φ` pointwise at this resolution (the
//! infinite-tree operator dominates the atom value only in the limit).

use alloc::vec::Vec;

use crate::math;
use crate::tree::{AtomFunction, NodeId, ProbTree};
use crate::{Error, Result};

/// Per-atom values of `M_T φ` together with the ancestor achieving each
/// maximum (nearest to the root on ties).
#[derive(Debug, Clone)]
pub struct MaximalResult {
    values: Vec<f64>,
    argmax: Vec<NodeId>,
}

impl MaximalResult {
    /// `M_T φ` per atom, in leaf order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The node whose average realizes the maximum for each atom.
    pub fn argmax(&self) -> &[NodeId] {
        &self.argmax
    }

    /// `∫_X max(M_T φ, level)^p dμ`, exact on atoms.
    pub fn clipped_power_moment(&self, tree: &ProbTree, p: f64, level: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &m)| tree.leaf_measure(i) * math::powf(m.max(level), p))
            .sum()
    }

    /// `‖M_T φ‖_p`.
    pub fn norm(&self, tree: &ProbTree, p: f64) -> f64 {
        math::powf(self.clipped_power_moment(tree, p, 0.0), 1.0 / p)
    }
}

/// Level-set convention: the classical weak-type inequality is stated for
/// the strict set `{M_T φ > λ}`; the non-strict variant `{M_T φ ≥ λ}`
/// differs only at finitely many levels on a finite tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelSetKind {
    Strict,
    NonStrict,
}

/// Both sides of the weak type `(1,1)` inequality at one level.
#[derive(Debug, Clone, Copy)]
pub struct WeakTypeReport {
    pub level: f64,
    /// `μ({M_T φ > λ})` (or `≥` for the non-strict variant).
    pub set_measure: f64,
    /// `(1/λ) ∫_{{M_T φ > λ}} φ dμ`.
    pub scaled_integral: f64,
}

impl WeakTypeReport {
    /// `μ({Mφ > λ}) ≤ (1/λ)∫_{{Mφ>λ}} φ`, with rounding slack.
    pub fn holds(&self) -> bool {
        self.set_measure <= self.scaled_integral + 1e-12 * self.scaled_integral.max(1.0)
    }
}

/// Evaluates `M_T φ` at every atom: one bottom-up integral pass, one
/// top-down sweep carrying the running path maximum.
pub fn maximal_operator(tree: &ProbTree, phi: &AtomFunction) -> Result<MaximalResult> {
    let averages = tree.node_averages(phi)?;
    let mut values = alloc::vec![0.0f64; tree.leaf_count()];
    let mut argmax = alloc::vec![tree.root(); tree.leaf_count()];
    let root = tree.root();
    let mut stack: Vec<(NodeId, f64, NodeId)> =
        alloc::vec![(root, averages[root.index()], root)];
    while let Some((id, mut best, mut arg)) = stack.pop() {
        let avg = averages[id.index()];
        if avg > best {
            best = avg;
            arg = id;
        }
        match tree.leaf_index_of(id) {
            Some(li) => {
                values[li] = best;
                argmax[li] = arg;
            }
            None => {
                for &c in tree.children(id) {
                    stack.push((c, best, arg));
                }
            }
        }
    }
    Ok(MaximalResult { values, argmax })
}

/// Both sides of the weak-type inequality at level `λ > 0` (strict set).
pub fn weak_type_report(tree: &ProbTree, phi: &AtomFunction, level: f64) -> Result<WeakTypeReport> {
    weak_type_report_with(tree, phi, level, LevelSetKind::Strict)
}

/// Weak-type report with an explicit level-set convention.
pub fn weak_type_report_with(
    tree: &ProbTree,
    phi: &AtomFunction,
    level: f64,
    kind: LevelSetKind,
) -> Result<WeakTypeReport> {
    if !(level > 0.0) || !level.is_finite() {
        return Err(Error::OutOfDomain {
            what: "level",
            value: level,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let maximal = maximal_operator(tree, phi)?;
    let mut set_measure = 0.0;
    let mut integral = 0.0;
    for (i, &m) in maximal.values().iter().enumerate() {
        let inside = match kind {
            LevelSetKind::Strict => m > level,
            LevelSetKind::NonStrict => m >= level,
        };
        if inside {
            let mu = tree.leaf_measure(i);
            set_measure += mu;
            integral += mu * phi.values()[i];
        }
    }
    Ok(WeakTypeReport {
        level,
        set_measure,
        scaled_integral: integral / level,
    })
}

/// `‖M_T φ‖_p / ((p/(p-1))·‖φ‖_p)`; at most 1 by Doob's inequality.
pub fn doob_ratio(tree: &ProbTree, phi: &AtomFunction, p: f64) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::OutOfDomain {
            what: "p",
            value: p,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    let phi_norm = math::powf(phi.power_moment(tree, p)?, 1.0 / p);
    if phi_norm == 0.0 {
        return Err(Error::DegenerateInput("φ ≡ 0 has no Doob ratio"));
    }
    let maximal = maximal_operator(tree, phi)?;
    let ratio = maximal.norm(tree, p) / (crate::bellman::conjugate_ratio(p) * phi_norm);
    Ok(ratio)
}
