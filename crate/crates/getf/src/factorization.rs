//! Sequential rank-1 pattern extraction: pattern-fiber finding, geometric
//! folding with a 2-D base case, candidate cost gating and the outer
//! decomposition loop.
//!
//! Each iteration reorders the residual to canonical LTL form, projects the
//! dense corner onto a simplex region, and for every folding direction
//! contracts the tensor one mode at a time against the seed fiber found at
//! the segmenting anchors. The cheapest candidate (full-tensor cost with the
//! candidate appended to the accepted factors) is kept; extraction stops at
//! the first candidate that fails the improvement gate.

use std::time::{Duration, Instant};

use crate::bits::BitVec;
use crate::error::{Error, Result};
use crate::geometry::{
    ltl_reorder, mask_to_region, segmenting_index, sort_desc_stable, two_ltl_projection,
    SimplexRegion,
};
use crate::tensor::{
    clear_pattern_into, for_each_one_in_range, or_pattern_into, xor_count, BoolTensor, FactorSet,
    IntTensor, ModeIndexSet, Rank1Pattern,
};

/// Position of a pattern fiber: the unfixed mode plus 1-based anchors for
/// the remaining modes in ascending mode order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberPosition {
    pub free_mode: usize,
    pub anchors: Vec<usize>,
}

/// A geometric-folding direction: the 1-based order in which modes fold off.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Direction {
    pub fold_order: Vec<usize>,
}

/// Tuning knobs of the extraction loop.
#[derive(Clone, Debug)]
pub struct GetfConfig {
    /// Noise tolerance of the fold discretization, in (0, 1).
    pub t: f64,
    /// Minimum relative error improvement (fraction of |x|) per accepted
    /// pattern; the loop stops at the first candidate below the gate.
    pub tau: f64,
    /// Search all k! folding directions instead of the k cyclic rotations.
    pub exha: bool,
    /// Hard cap on the number of extracted patterns.
    pub max_rank: usize,
    /// Minimum pattern size in entries; also the projection's region floor.
    pub lambda: usize,
    /// Flatness tolerance for LTL diagnostics (`is_flat_2ltl`); not consulted
    /// by the extraction loop itself.
    pub epsilon: f64,
    /// Reserved for tie randomization; the default pipeline is deterministic
    /// and never draws from it.
    pub seed: u64,
}

impl Default for GetfConfig {
    fn default() -> Self {
        GetfConfig {
            t: 0.7,
            tau: 0.01,
            exha: false,
            max_rank: 20,
            lambda: 4,
            epsilon: 1.0,
            seed: 0,
        }
    }
}

impl GetfConfig {
    /// Defaults with the rank cap clamped to `min(20, sum of mode lengths)`.
    pub fn defaults_for(shape: &[usize]) -> Self {
        GetfConfig {
            max_rank: 20.min(shape.iter().sum()),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t < 1.0) {
            return Err(Error::Parameter(format!(
                "noise tolerance t must lie in (0, 1), got {}",
                self.t
            )));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::Parameter(format!(
                "tau must lie in [0, 1], got {}",
                self.tau
            )));
        }
        if self.max_rank == 0 {
            return Err(Error::Parameter("max_rank must be at least 1".into()));
        }
        if self.lambda == 0 {
            return Err(Error::Parameter("lambda must be at least 1".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Parameter("epsilon must be non-negative".into()));
        }
        Ok(())
    }
}

/// Why the extraction loop stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvergedReason {
    /// The best candidate failed the improvement or size gate.
    Tau,
    /// The configured rank cap was reached.
    MaxRank,
    /// The residual ran out of set entries.
    EmptyResidual,
    /// The projection found no admissible corner region.
    NoRegion,
}

/// Extraction output: factors plus the per-acceptance error trace and timing.
#[derive(Clone, Debug)]
pub struct DecompositionResult {
    pub factors: FactorSet,
    /// Reconstruction error after each accepted pattern; non-increasing.
    pub error_trace: Vec<usize>,
    /// Wall-clock duration of the iteration that accepted each pattern.
    pub iteration_times: Vec<Duration>,
    pub converged_reason: ConvergedReason,
}

/// Folding directions: the k cyclic rotations of `(1..k)`, or every
/// permutation when `exha` is set. Order is deterministic.
pub fn direction_set(k: usize, exha: bool) -> Vec<Direction> {
    assert!(k >= 2, "direction sets need order >= 2");
    if !exha {
        (0..k)
            .map(|s| Direction {
                fold_order: (0..k).map(|i| (s + i) % k + 1).collect(),
            })
            .collect()
    } else {
        let mut perm: Vec<usize> = (1..=k).collect();
        let mut out = vec![Direction {
            fold_order: perm.clone(),
        }];
        while next_permutation(&mut perm) {
            out.push(Direction {
                fold_order: perm.clone(),
            });
        }
        out
    }
}

fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Locates the most likely pattern fiber of `x` along `free_mode` by fixing
/// the remaining modes one at a time, each at the segmenting anchor of the
/// current sub-tensor re-sorted along that mode.
///
/// The anchored fiber being all-zero is a [`Error::DegenerateFiber`]; callers
/// fall back to the densest fiber.
pub fn pattern_fiber_finding(x: &BoolTensor, free_mode: usize) -> Result<FiberPosition> {
    let k = x.order();
    if free_mode == 0 || free_mode > k {
        return Err(Error::Mode(format!("free mode {} out of 1..={}", free_mode, k)));
    }
    if x.is_zero() {
        return Err(Error::EmptyTensor);
    }
    let mut fixed: Vec<(usize, usize)> = Vec::with_capacity(k - 1);
    let mut k_rem = k;
    for mode0 in (0..k).filter(|&m| m != free_mode - 1) {
        let marg = x.marginal_with_fixed(&fixed, mode0);
        let order = sort_desc_stable(&marg);
        let a = segmenting_index(x.shape()[mode0], k_rem)?;
        fixed.push((mode0, order[a - 1] - 1));
        k_rem -= 1;
    }
    let anchors: Vec<usize> = fixed.iter().map(|&(_, i)| i + 1).collect();
    let fiber = x.mode_fiber(free_mode, &anchors)?;
    if fiber.is_zero() {
        return Err(Error::DegenerateFiber);
    }
    Ok(FiberPosition { free_mode, anchors })
}

/// Densest-fiber fallback: the position whose fiber along `free_mode` holds
/// the most ones, ties broken by lexicographically smallest anchors.
fn densest_fiber_position(x: &BoolTensor, free_mode: usize) -> Result<FiberPosition> {
    let sums = x.slice_sum(&ModeIndexSet::new(vec![free_mode])?)?;
    let data = sums.data();
    let mut best = 0usize;
    for (i, &v) in data.iter().enumerate() {
        if v > data[best] {
            best = i;
        }
    }
    if data[best] == 0 {
        return Err(Error::EmptyTensor);
    }
    // decode the flat index of the marginal tensor into 1-based anchors
    let mut anchors = vec![0usize; sums.order()];
    let mut rem = best;
    for (j, &m) in sums.shape().iter().enumerate().rev() {
        anchors[j] = rem % m + 1;
        rem /= m;
    }
    Ok(FiberPosition { free_mode, anchors })
}

fn fold_threshold(t: f64, fiber_norm: usize) -> u64 {
    ((t * fiber_norm as f64 - 1e-9).ceil() as u64).max(1)
}

/// Contracts `x` along `pos.free_mode`: the factor is the anchored fiber `f`,
/// the count tensor `H` holds the inner products of `f` with every fiber, and
/// the folded tensor keeps positions with `H >= t * |f|`.
pub fn fold_once(x: &BoolTensor, pos: &FiberPosition, t: f64) -> Result<(BitVec, BoolTensor)> {
    let (f, _, folded) = fold_once_with_counts(x, pos, t)?;
    Ok((f, folded))
}

pub(crate) fn fold_once_with_counts(
    x: &BoolTensor,
    pos: &FiberPosition,
    t: f64,
) -> Result<(BitVec, IntTensor, BoolTensor)> {
    let k = x.order();
    if k < 3 {
        return Err(Error::Parameter(
            "folding needs order >= 3; use the matrix base case for order 2".into(),
        ));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Parameter(format!(
            "fold tolerance must lie in (0, 1], got {}",
            t
        )));
    }
    let free0 = pos
        .free_mode
        .checked_sub(1)
        .filter(|&m| m < k)
        .ok_or_else(|| Error::Mode(format!("free mode {} out of 1..={}", pos.free_mode, k)))?;
    let f = x.mode_fiber(pos.free_mode, &pos.anchors)?;
    if f.is_zero() {
        return Err(Error::DegenerateFiber);
    }
    let h_shape: Vec<usize> = (0..k)
        .filter(|&m| m != free0)
        .map(|m| x.shape()[m])
        .collect();
    let mut h = IntTensor::zeros(&h_shape);
    if free0 == 0 {
        // slices along the leading mode are contiguous bit runs
        let slice_len: usize = h_shape.iter().product();
        let data = h.data_mut();
        for i in f.iter_ones() {
            for_each_one_in_range(x.words(), i * slice_len, slice_len, |off| {
                data[off] += 1;
            });
        }
    } else {
        let data = h.data_mut();
        let mut strides_h = vec![1usize; k - 1];
        for j in (0..k - 2).rev() {
            strides_h[j] = strides_h[j + 1] * h_shape[j + 1];
        }
        x.for_each_one(|coords0| {
            if f.get(coords0[free0]) {
                let mut lin = 0usize;
                let mut hj = 0usize;
                for (m, &c) in coords0.iter().enumerate() {
                    if m == free0 {
                        continue;
                    }
                    lin += c * strides_h[hj];
                    hj += 1;
                }
                data[lin] += 1;
            }
        });
    }
    let theta = fold_threshold(t, f.count_ones());
    let mut folded = BoolTensor::zeros(&h_shape)?;
    for (i, &v) in h.data().iter().enumerate() {
        if v >= theta {
            folded.set_lin(i, true);
        }
    }
    folded.refresh_count();
    Ok((f, h, folded))
}

/// 2-D base case: seeds a pattern from the median non-zero column (and,
/// symmetrically, row) of the marginal-sorted matrix, expands by thresholded
/// inner products, and returns the orientation covering more ones net of
/// false positives. Vectors come back in the matrix's own index order.
pub fn matrix_base_case(m: &BoolTensor, t: f64) -> Result<(BitVec, BitVec)> {
    if m.order() != 2 {
        return Err(Error::Parameter(format!(
            "matrix base case needs order 2, got {}",
            m.order()
        )));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Parameter(format!(
            "fold tolerance must lie in (0, 1], got {}",
            t
        )));
    }
    let (rows, cols) = (m.shape()[0], m.shape()[1]);
    if m.is_zero() {
        return Ok((BitVec::zeros(rows), BitVec::zeros(cols)));
    }
    let marg = m.marginals_all();

    let col_seeded = seed_from_mode(m, &marg[1], 2, t)?;
    let row_seeded = seed_from_mode(m, &marg[0], 1, t)?;

    let score = |rv: &BitVec, cv: &BitVec| -> i64 {
        let mut inside = 0usize;
        for j in cv.iter_ones() {
            let col = m.mode_fiber(1, &[j + 1]).expect("column in range");
            inside += col.and_count(rv);
        }
        2 * inside as i64 - (rv.count_ones() * cv.count_ones()) as i64
    };

    match (col_seeded, row_seeded) {
        (Some((rv_c, cv_c)), Some((cv_r, rv_r))) => {
            if score(&rv_c, &cv_c) >= score(&rv_r, &cv_r) {
                Ok((rv_c, cv_c))
            } else {
                Ok((rv_r, cv_r))
            }
        }
        (Some(p), None) => Ok(p),
        (None, Some((cv, rv))) => Ok((rv, cv)),
        (None, None) => Ok((BitVec::zeros(rows), BitVec::zeros(cols))),
    }
}

/// Seeds from the fiber ranked `ceil(nnz/2)` along `seed_mode`'s marginal
/// (non-zero fibers only, honoring the no-zero-fibers premise of the
/// segmenting rule). Returns (seed fiber content, expanded other-mode vector).
fn seed_from_mode(
    m: &BoolTensor,
    marg: &[u32],
    seed_mode: usize,
    t: f64,
) -> Result<Option<(BitVec, BitVec)>> {
    let nnz = marg.iter().filter(|&&v| v > 0).count();
    if nnz == 0 {
        return Ok(None);
    }
    let order = sort_desc_stable(marg);
    let pos = segmenting_index(nnz, 2)?;
    let seed_index = order[pos - 1];
    let read_mode = 3 - seed_mode; // the other mode of a matrix
    let seed = m.mode_fiber(read_mode, &[seed_index])?;
    if seed.is_zero() {
        return Ok(None);
    }
    let theta = fold_threshold(t, seed.count_ones());
    let other_len = m.shape()[seed_mode - 1];
    let mut expanded = BitVec::zeros(other_len);
    for j in 1..=other_len {
        let fiber = m.mode_fiber(read_mode, &[j])?;
        if fiber.and_count(&seed) as u64 >= theta {
            expanded.set(j - 1, true);
        }
    }
    Ok(Some((seed, expanded)))
}

/// Extracts one rank-1 candidate by folding the residual along `direction`.
///
/// The region (expressed in the canonical ordering of the residual) masks
/// only the first round's fiber search; folding itself always reads the
/// unmasked reordered residual, so recovered fibers keep their full support.
/// Degenerate folds yield the empty pattern rather than an error.
pub fn geometric_folding(
    x_residual: &BoolTensor,
    region: &SimplexRegion,
    direction: &Direction,
    t: f64,
) -> Result<Rank1Pattern> {
    let k = x_residual.order();
    if region.intercepts().len() != k {
        return Err(Error::Shape(format!(
            "region arity {} does not match tensor order {}",
            region.intercepts().len(),
            k
        )));
    }
    let empty = || Rank1Pattern::empty(x_residual.shape());
    if x_residual.is_zero() {
        return empty();
    }

    let xp = x_residual.permute_modes(&direction.fold_order)?;
    let region_p = region.permuted(&direction.fold_order);

    // acc[j][pos] = 1-based index in xp-space feeding position pos+1 of the
    // current tensor's mode j; composed with every reorder.
    let mut acc: Vec<Vec<usize>> = xp.shape().iter().map(|&m| (1..=m).collect()).collect();
    let mut factors_p: Vec<BitVec> = Vec::with_capacity(k);
    let mut cur = xp;

    for round in 0..k - 2 {
        let (cur_r, plan) = ltl_reorder(&cur);
        for (j, a) in acc.iter_mut().enumerate() {
            let composed: Vec<usize> = plan.perms()[j].iter().map(|&s| a[s - 1]).collect();
            *a = composed;
        }
        let masked;
        let search: &BoolTensor = if round == 0 {
            masked = mask_to_region(&cur_r, &region_p)?;
            &masked
        } else {
            &cur_r
        };
        let pos = match position_with_fallback(search) {
            Some(p) => Some(p),
            None if round == 0 => position_with_fallback(&cur_r),
            None => None,
        };
        let Some(pos) = pos else {
            return empty();
        };
        let (f, folded) = match fold_once(&cur_r, &pos, t) {
            Ok(v) => v,
            Err(Error::DegenerateFiber) => return empty(),
            Err(e) => return Err(e),
        };
        factors_p.push(unmap_bits(&f, &acc[0]));
        acc.remove(0);
        cur = folded;
    }

    let (rv, cv) = matrix_base_case(&cur, t)?;
    factors_p.push(unmap_bits(&rv, &acc[0]));
    factors_p.push(unmap_bits(&cv, &acc[1]));

    // place each extracted fiber back on its original mode
    let mut fibers: Vec<BitVec> = x_residual
        .shape()
        .iter()
        .map(|&m| BitVec::zeros(m))
        .collect();
    for (s, fv) in factors_p.into_iter().enumerate() {
        fibers[direction.fold_order[s] - 1] = fv;
    }
    Rank1Pattern::new(fibers)
}

fn position_with_fallback(search: &BoolTensor) -> Option<FiberPosition> {
    match pattern_fiber_finding(search, 1) {
        Ok(p) => Some(p),
        Err(Error::DegenerateFiber) => densest_fiber_position(search, 1).ok(),
        Err(_) => None,
    }
}

fn unmap_bits(v: &BitVec, acc: &[usize]) -> BitVec {
    let mut out = BitVec::zeros(v.len());
    for pos in v.iter_ones() {
        out.set(acc[pos] - 1, true);
    }
    out
}

/// Full-tensor cost of appending `candidate` to the accepted factors: the L1
/// error between `x` and the OR of the accepted reconstruction with the
/// candidate's outer product.
pub fn candidate_cost(
    candidate: &Rank1Pattern,
    x: &BoolTensor,
    accepted: &FactorSet,
) -> Result<usize> {
    if accepted.shape() != x.shape() {
        return Err(Error::Shape(format!(
            "factor shape {:?} does not match tensor shape {:?}",
            accepted.shape(),
            x.shape()
        )));
    }
    let recon = accepted.reconstruct()?;
    cost_with_recon(x, &recon, candidate)
}

fn cost_with_recon(x: &BoolTensor, recon: &BoolTensor, candidate: &Rank1Pattern) -> Result<usize> {
    if candidate.shape() != x.shape() {
        return Err(Error::Shape(format!(
            "candidate shape {:?} does not match tensor shape {:?}",
            candidate.shape(),
            x.shape()
        )));
    }
    if candidate.is_empty_pattern() {
        return Ok(xor_count(x, recon));
    }
    let pt = candidate.outer()?;
    Ok(x
        .words()
        .iter()
        .zip(recon.words().iter().zip(pt.words()))
        .map(|(&xw, (&rw, &pw))| (xw ^ (rw | pw)).count_ones() as usize)
        .sum())
}

/// Clears every residual entry covered by the pattern's outer product.
pub fn residual_clear(residual: &BoolTensor, pattern: &Rank1Pattern) -> Result<BoolTensor> {
    if pattern.shape() != residual.shape() {
        return Err(Error::Shape(format!(
            "pattern shape {:?} does not match residual shape {:?}",
            pattern.shape(),
            residual.shape()
        )));
    }
    let mut out = residual.clone();
    clear_pattern_into(&mut out, pattern);
    out.refresh_count();
    Ok(out)
}

/// Runs the sequential extraction loop until the improvement gate, the rank
/// cap, an empty residual or a missing corner region stops it.
pub fn getf_decompose(x: &BoolTensor, config: &GetfConfig) -> Result<DecompositionResult> {
    config.validate()?;
    let k = x.order();
    let x_norm = x.count_ones();
    let dirs = direction_set(k, config.exha);

    let mut residual = x.clone();
    let mut factors = FactorSet::empty(x.shape())?;
    let mut recon = BoolTensor::zeros(x.shape())?;
    let mut error_trace: Vec<usize> = Vec::new();
    let mut iteration_times: Vec<Duration> = Vec::new();

    let reason = loop {
        if residual.is_zero() {
            break ConvergedReason::EmptyResidual;
        }
        if factors.rank() >= config.max_rank {
            break ConvergedReason::MaxRank;
        }
        let started = Instant::now();

        // The projection depends only on the residual, not the direction, so
        // it is computed once per iteration and re-indexed per direction.
        let (canon, _plan) = ltl_reorder(&residual);
        let region = match two_ltl_projection(&canon, config.lambda) {
            Ok(r) => r,
            Err(Error::NoRegion { .. }) => break ConvergedReason::NoRegion,
            Err(e) => return Err(e),
        };

        let mut best: Option<(usize, Rank1Pattern)> = None;
        for dir in &dirs {
            let pat = geometric_folding(&residual, &region, dir, config.t)?;
            let cost = cost_with_recon(x, &recon, &pat)?;
            if best.as_ref().map_or(true, |(bc, _)| cost < *bc) {
                best = Some((cost, pat));
            }
        }
        let (cost, pat) = best.expect("direction set is non-empty");

        let prev = error_trace.last().copied().unwrap_or(x_norm);
        let improvement = prev.saturating_sub(cost);
        let accepted = cost < prev
            && improvement as f64 >= config.tau * x_norm as f64 - 1e-9
            && pat.size() >= config.lambda;
        if !accepted {
            break ConvergedReason::Tau;
        }

        residual = residual_clear(&residual, &pat)?;
        or_pattern_into(&mut recon, &pat);
        recon.refresh_count();
        factors.push_pattern(&pat)?;
        error_trace.push(cost);
        iteration_times.push(started.elapsed());
    };

    Ok(DecompositionResult {
        factors,
        error_trace,
        iteration_times,
        converged_reason: reason,
    })
}
