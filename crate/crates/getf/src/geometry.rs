//! Index reordering to left-triangular-like (LTL) form, LTL property
//! checkers, segmenting-point arithmetic and the flat simplex projection
//! that locates the densest corner region of a reordered tensor.
//!
//! The engine-wide canonical orientation is DESCENDING marginals: after
//! [`ltl_reorder`] every mode's marginal vector is non-increasing, so the
//! dense corner sits at index 1 of every mode. The ascending form used by
//! the mirror convention is available through the `orientation` parameter
//! of [`is_p_ltl`].

use crate::bits::{count_ones_range, low_mask};
use crate::error::{Error, Result};
use crate::tensor::BoolTensor;
use rayon::prelude::*;

/// Grid resolution of the projection search: per-mode intercept fractions
/// `1/GRID..=GRID/GRID` of the mode length.
pub const PROJECTION_GRID: usize = 8;
/// Weight of in-region zeros in the projection score.
pub const PROJECTION_ALPHA: f64 = 1.0;
/// Default band width of returned regions (full simplex body).
pub const PROJECTION_BAND: f64 = 0.0;

/// Marginal monotonicity direction for the LTL checkers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Ascending,
    Descending,
}

/// A recorded index reordering transformation and its inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IrtPlan {
    perms: Vec<Vec<usize>>,
    inverse_perms: Vec<Vec<usize>>,
}

impl IrtPlan {
    pub fn identity(shape: &[usize]) -> Self {
        let perms: Vec<Vec<usize>> = shape.iter().map(|&m| (1..=m).collect()).collect();
        IrtPlan {
            inverse_perms: perms.clone(),
            perms,
        }
    }

    /// Per-mode permutations: `perms()[j][pos]` is the 1-based source index
    /// that lands at position `pos + 1` after the transform.
    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }

    pub fn inverse_perms(&self) -> &[Vec<usize>] {
        &self.inverse_perms
    }

    pub fn is_identity(&self) -> bool {
        self.perms
            .iter()
            .all(|p| p.iter().enumerate().all(|(i, &v)| v == i + 1))
    }

    pub fn apply(&self, x: &BoolTensor) -> Result<BoolTensor> {
        x.apply_irt(&self.perms)
    }

    pub fn undo(&self, x: &BoolTensor) -> Result<BoolTensor> {
        x.apply_irt(&self.inverse_perms)
    }
}

fn sort_desc_stable(marg: &[u32]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..marg.len()).collect();
    order.sort_by(|&a, &b| marg[b].cmp(&marg[a]).then(a.cmp(&b)));
    order.iter().map(|&i| i + 1).collect()
}

/// Reorders every mode by decreasing marginal so the dense corner sits at
/// index 1, returning the reordered tensor and the plan to undo it. Ties
/// keep the original index order, so an already-sorted tensor gets the
/// identity plan.
pub fn ltl_reorder(x: &BoolTensor) -> (BoolTensor, IrtPlan) {
    let marg = x.marginals_all();
    let perms: Vec<Vec<usize>> = marg.iter().map(|m| sort_desc_stable(m)).collect();
    let mut inverse_perms: Vec<Vec<usize>> = Vec::with_capacity(perms.len());
    for p in &perms {
        let mut inv = vec![0usize; p.len()];
        for (pos, &v) in p.iter().enumerate() {
            inv[v - 1] = pos + 1;
        }
        inverse_perms.push(inv);
    }
    let plan = IrtPlan {
        perms,
        inverse_perms,
    };
    if plan.is_identity() {
        return (x.clone(), plan);
    }
    let reordered = x
        .apply_irt(&plan.perms)
        .expect("reorder permutations are valid by construction");
    (reordered, plan)
}

/// Checks the p-LTL property: every p-order slice has monotone marginals
/// along each of its unfixed modes, in the given orientation.
pub fn is_p_ltl(x: &BoolTensor, p: usize, orientation: Orientation) -> Result<bool> {
    let k = x.order();
    if p < 2 || p > k {
        return Err(Error::Parameter(format!("p must be in 2..={}, got {}", k, p)));
    }
    let mut subset: Vec<usize> = Vec::new();
    check_subsets(x, p, 0, &mut subset, orientation)
}

fn check_subsets(
    x: &BoolTensor,
    p: usize,
    start: usize,
    subset: &mut Vec<usize>,
    orientation: Orientation,
) -> Result<bool> {
    let k = x.order();
    if subset.len() == p {
        if !check_slices(x, subset, orientation) {
            return Ok(false);
        }
        return Ok(true);
    }
    for m in start..k {
        subset.push(m);
        if !check_subsets(x, p, m + 1, subset, orientation)? {
            subset.pop();
            return Ok(false);
        }
        subset.pop();
    }
    Ok(true)
}

fn check_slices(x: &BoolTensor, unfixed: &[usize], orientation: Orientation) -> bool {
    let k = x.order();
    let fixed_modes: Vec<usize> = (0..k).filter(|m| !unfixed.contains(m)).collect();
    let mut fixing = vec![0usize; fixed_modes.len()];
    loop {
        let fixed: Vec<(usize, usize)> = fixed_modes
            .iter()
            .zip(&fixing)
            .map(|(&m, &i)| (m, i))
            .collect();
        for &j in unfixed {
            let marg = x.marginal_with_fixed(&fixed, j);
            let monotone = match orientation {
                Orientation::Ascending => marg.windows(2).all(|w| w[0] <= w[1]),
                Orientation::Descending => marg.windows(2).all(|w| w[0] >= w[1]),
            };
            if !monotone {
                return false;
            }
        }
        // advance the fixing odometer
        let mut done = true;
        for (pos, &m) in fixed_modes.iter().enumerate().rev() {
            fixing[pos] += 1;
            if fixing[pos] < x.shape()[m] {
                done = false;
                break;
            }
            fixing[pos] = 0;
        }
        if fixed_modes.is_empty() || done {
            return true;
        }
    }
}

/// Checks the flat 2-LTL property: the tensor must be 2-LTL in the canonical
/// descending orientation, and every 2-order slice marginal must satisfy the
/// second-difference bound `|s[j1] + s[j2] - 2 s[(j1+j2)/2]| < epsilon` for
/// all index pairs with an integral midpoint.
///
/// A tensor that is not 2-LTL yields [`Error::NotTwoLtl`], distinct from a
/// `false` flatness verdict.
pub fn is_flat_2ltl(x: &BoolTensor, epsilon: f64) -> Result<bool> {
    if epsilon < 0.0 {
        return Err(Error::Parameter("epsilon must be non-negative".into()));
    }
    if !is_p_ltl(x, 2, Orientation::Descending)? {
        return Err(Error::NotTwoLtl);
    }
    let k = x.order();
    for a in 0..k {
        for b in a + 1..k {
            if !flat_check_slices(x, &[a, b], epsilon) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn flat_check_slices(x: &BoolTensor, unfixed: &[usize; 2], epsilon: f64) -> bool {
    let k = x.order();
    let fixed_modes: Vec<usize> = (0..k).filter(|m| !unfixed.contains(m)).collect();
    let mut fixing = vec![0usize; fixed_modes.len()];
    loop {
        let fixed: Vec<(usize, usize)> = fixed_modes
            .iter()
            .zip(&fixing)
            .map(|(&m, &i)| (m, i))
            .collect();
        for &j in unfixed {
            let s = x.marginal_with_fixed(&fixed, j);
            let m = s.len();
            for j1 in 0..m {
                for j2 in (j1 + 2..m).step_by(2) {
                    let mid = (j1 + j2) / 2;
                    let d = s[j1] as f64 + s[j2] as f64 - 2.0 * s[mid] as f64;
                    if d.abs() >= epsilon {
                        return false;
                    }
                }
            }
        }
        let mut done = true;
        for (pos, &m) in fixed_modes.iter().enumerate().rev() {
            fixing[pos] += 1;
            if fixing[pos] < x.shape()[m] {
                done = false;
                break;
            }
            fixing[pos] = 0;
        }
        if fixed_modes.is_empty() || done {
            return true;
        }
    }
}

/// Anchor position `ceil(m / k_rem)` measured from the dense corner.
pub fn segmenting_index(m: usize, k_rem: usize) -> Result<usize> {
    if m == 0 {
        return Err(Error::Parameter("mode length must be positive".into()));
    }
    if k_rem < 2 {
        return Err(Error::Parameter(format!(
            "remaining order must be at least 2, got {}",
            k_rem
        )));
    }
    Ok(m.div_ceil(k_rem))
}

/// Exact rational membership data for grid-born regions (band width 0).
#[derive(Clone, Debug, PartialEq, Eq)]
struct ExactMembership {
    /// weight per mode; membership is `sum_j i_j * w_j <= threshold`.
    weights: Vec<u128>,
    threshold: u128,
}

/// A corner simplex: index tuples with `sum_j i_j / c_j <= 1 + band_width`
/// under the canonical dense-corner-first ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexRegion {
    intercepts: Vec<f64>,
    band_width: f64,
    exact: Option<ExactMembership>,
}

impl SimplexRegion {
    /// Builds a region from raw intercepts. Membership uses float arithmetic
    /// with a tiny boundary slack; prefer [`SimplexRegion::from_grid`] when
    /// the intercepts are grid fractions of the mode lengths.
    pub fn new(intercepts: Vec<f64>, band_width: f64) -> Result<Self> {
        if intercepts.len() < 2 {
            return Err(Error::Shape("a region needs at least two intercepts".into()));
        }
        if intercepts.iter().any(|&c| !c.is_finite() || c <= 0.0) {
            return Err(Error::Parameter("intercepts must be positive".into()));
        }
        if !band_width.is_finite() || band_width < 0.0 {
            return Err(Error::Parameter("band width must be non-negative".into()));
        }
        Ok(SimplexRegion {
            intercepts,
            band_width,
            exact: None,
        })
    }

    /// Region with intercepts `numerators[j] * shape[j] / resolution` and exact
    /// integer membership when `band_width` is zero.
    pub fn from_grid(
        shape: &[usize],
        numerators: &[usize],
        resolution: usize,
        band_width: f64,
    ) -> Result<Self> {
        if numerators.len() != shape.len() {
            return Err(Error::Shape(format!(
                "expected {} numerators, got {}",
                shape.len(),
                numerators.len()
            )));
        }
        if resolution == 0 || numerators.iter().any(|&g| g == 0 || g > resolution) {
            return Err(Error::Parameter(
                "grid numerators must lie in 1..=resolution".into(),
            ));
        }
        let intercepts: Vec<f64> = shape
            .iter()
            .zip(numerators)
            .map(|(&m, &g)| g as f64 * m as f64 / resolution as f64)
            .collect();
        let mut region = SimplexRegion::new(intercepts, band_width)?;
        if band_width == 0.0 {
            let mut p: u128 = 1;
            let mut ok = true;
            for (&m, &g) in shape.iter().zip(numerators) {
                match p.checked_mul((g * m) as u128) {
                    Some(v) => p = v,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                let weights: Vec<u128> = shape
                    .iter()
                    .zip(numerators)
                    .map(|(&m, &g)| resolution as u128 * (p / ((g * m) as u128)))
                    .collect();
                region.exact = Some(ExactMembership {
                    weights,
                    threshold: p,
                });
            }
        }
        Ok(region)
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    pub fn band_width(&self) -> f64 {
        self.band_width
    }

    /// Membership of a 1-based coordinate tuple.
    pub fn contains(&self, coords: &[usize]) -> bool {
        debug_assert_eq!(coords.len(), self.intercepts.len());
        if let Some(exact) = &self.exact {
            let sum: u128 = coords
                .iter()
                .zip(&exact.weights)
                .map(|(&i, &w)| i as u128 * w)
                .sum();
            return sum <= exact.threshold;
        }
        let sum: f64 = coords
            .iter()
            .zip(&self.intercepts)
            .map(|(&i, &c)| i as f64 / c)
            .sum();
        sum <= 1.0 + self.band_width + 1e-9
    }

    /// Reindexes the per-mode data so position `s` carries mode `order[s]`
    /// (1-based), matching a mode transposition of the tensor it masks.
    pub fn permuted(&self, order: &[usize]) -> SimplexRegion {
        SimplexRegion {
            intercepts: order.iter().map(|&o| self.intercepts[o - 1]).collect(),
            band_width: self.band_width,
            exact: self.exact.as_ref().map(|e| ExactMembership {
                weights: order.iter().map(|&o| e.weights[o - 1]).collect(),
                threshold: e.threshold,
            }),
        }
    }
}

/// Entry-wise AND of `x` with the region's indicator tensor.
pub fn mask_to_region(x: &BoolTensor, region: &SimplexRegion) -> Result<BoolTensor> {
    if region.intercepts().len() != x.order() {
        return Err(Error::Shape(format!(
            "region arity {} does not match tensor order {}",
            region.intercepts().len(),
            x.order()
        )));
    }
    let mut out = BoolTensor::zeros(x.shape())?;
    let k = x.order();
    let mut coords1 = vec![0usize; k];
    x.for_each_one(|coords0| {
        for (c1, &c0) in coords1.iter_mut().zip(coords0) {
            *c1 = c0 + 1;
        }
        if region.contains(&coords1) {
            out.set_lin(out_linear(&out, coords0), true);
        }
    });
    out.refresh_count();
    Ok(out)
}

#[inline]
fn out_linear(out: &BoolTensor, coords0: &[usize]) -> usize {
    out.linear0(coords0)
}

/// One evaluated grid candidate.
#[derive(Clone, Debug)]
struct Candidate {
    numerators: Vec<usize>,
    score: f64,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    // higher score wins; ties prefer lexicographically smaller numerators
    if a.score != b.score {
        return a.score > b.score;
    }
    a.numerators < b.numerators
}

/// Searches the full fraction grid and returns the simplex region maximizing
/// `ones_inside - alpha * zeros_inside`, restricted to regions holding at
/// least `lambda` lattice entries.
///
/// The input is expected in canonical dense-corner-first order (see
/// [`ltl_reorder`]); the search itself does not reorder.
pub fn two_ltl_projection(x: &BoolTensor, lambda: usize) -> Result<SimplexRegion> {
    two_ltl_projection_with(x, lambda, PROJECTION_GRID, PROJECTION_ALPHA, PROJECTION_BAND)
}

/// [`two_ltl_projection`] with explicit grid resolution, zero penalty and
/// band width. Band width zero (the default) is scored with exact integer
/// arithmetic.
pub fn two_ltl_projection_with(
    x: &BoolTensor,
    lambda: usize,
    resolution: usize,
    alpha: f64,
    band_width: f64,
) -> Result<SimplexRegion> {
    if x.is_zero() {
        return Err(Error::EmptyTensor);
    }
    if lambda == 0 {
        return Err(Error::Parameter("lambda must be at least 1".into()));
    }
    if resolution == 0 || resolution > 64 {
        return Err(Error::Parameter("grid resolution must be in 1..=64".into()));
    }
    let k = x.order();
    let shape = x.shape().to_vec();
    let prefix_combos: usize = resolution.pow((k - 1) as u32);

    // The sweep's per-leaf products must fit u64 for the loosest candidate.
    let mut worst: u128 = (resolution * resolution * shape[k - 1]) as u128;
    for &m in &shape[..k - 1] {
        worst = worst.saturating_mul((resolution * m) as u128);
    }
    if 2 * worst > u64::MAX as u128 {
        return Err(Error::Budget(format!(
            "projection grid arithmetic overflows for shape {:?}",
            shape
        )));
    }

    let best = (0..prefix_combos)
        .into_par_iter()
        .map(|combo_id| scan_prefix_combo(x, &shape, combo_id, resolution, alpha, band_width, lambda))
        .reduce(
            || None,
            |a, b| match (a, b) {
                (None, b) => b,
                (a, None) => a,
                (Some(a), Some(b)) => {
                    if better(&a, &b) {
                        Some(a)
                    } else {
                        Some(b)
                    }
                }
            },
        );

    match best {
        Some(c) => SimplexRegion::from_grid(&shape, &c.numerators, resolution, band_width),
        None => Err(Error::NoRegion { lambda }),
    }
}

/// How last-mode fiber bits are read in the sweep's inner loop.
enum FiberPath {
    /// whole fiber fits one shifted u64
    Word,
    /// fits a shifted u128
    Double,
    /// generic range popcount
    Slow,
}

/// Evaluates the `resolution` candidates sharing one prefix-fraction combo.
/// Exact integer arithmetic throughout: membership of `(i_1..i_k)` in the
/// candidate with numerators `(g_1..g_k)` is
/// `sum_j R*i_j / (g_j*m_j) <= 1 + band`, scaled here by the prefix product
/// `P' = prod_{j<k} g_j*m_j` so that the last-mode cutoff per `g_k` is a
/// single integer division.
fn scan_prefix_combo(
    x: &BoolTensor,
    shape: &[usize],
    combo_id: usize,
    resolution: usize,
    alpha: f64,
    band_width: f64,
    lambda: usize,
) -> Option<Candidate> {
    let k = shape.len();
    let r = resolution as u64;
    let m_last = shape[k - 1] as u64;

    // decode prefix numerators, most-significant first for lex order
    let mut g_pre = vec![0u64; k - 1];
    let mut id = combo_id;
    for j in (0..k - 1).rev() {
        g_pre[j] = (id % resolution) as u64 + 1;
        id /= resolution;
    }

    // P' = prod g_j*m_j over prefix modes; weights W_j = R * P' / (g_j*m_j)
    let mut p_pre: u64 = 1;
    for (j, &g) in g_pre.iter().enumerate() {
        p_pre *= g * shape[j] as u64;
    }
    let denom = r * p_pre;
    let weights: Vec<u64> = g_pre
        .iter()
        .enumerate()
        .map(|(j, &g)| r * (p_pre / (g * shape[j] as u64)))
        .collect();
    let threshold = if band_width == 0.0 {
        p_pre
    } else {
        ((1.0 + band_width) * p_pre as f64).floor() as u64
    };

    let words = x.words();
    let strides = x.strides();
    let path = {
        let m = shape[k - 1];
        if m <= 64 {
            FiberPath::Word
        } else if m <= 128 {
            FiberPath::Double
        } else {
            FiberPath::Slow
        }
    };

    let mut vol = vec![0u64; resolution];
    let mut ones = vec![0u64; resolution];

    // enumerate prefix lattice points inside the partial simplex
    let mut stack_i = vec![0u64; k - 1];
    let mut stack_rem = vec![0u64; k];
    let mut stack_base = vec![0usize; k];
    stack_rem[0] = threshold;
    stack_base[0] = 0;
    let mut level = 0usize;
    'outer: loop {
        if level == k - 1 {
            // leaf: accumulate the resolution candidates of this prefix point
            let rem = stack_rem[level];
            let base = stack_base[level];
            let mk_rem = m_last * rem;
            match path {
                FiberPath::Word => {
                    let off = base % 64;
                    let wi = base / 64;
                    let mut fb = words[wi] >> off;
                    if off > 0 && wi + 1 < words.len() {
                        fb |= words[wi + 1] << (64 - off);
                    }
                    fb &= low_mask(m_last as usize);
                    for g in 1..=r {
                        let q = (g * mk_rem / denom).min(m_last);
                        vol[(g - 1) as usize] += q;
                        if q > 0 && fb != 0 {
                            ones[(g - 1) as usize] +=
                                (fb & low_mask(q as usize)).count_ones() as u64;
                        }
                    }
                }
                FiberPath::Double => {
                    let off = base % 64;
                    let wi = base / 64;
                    let mut fb: u128 = (words[wi] as u128) >> off;
                    let mut have = 64 - off;
                    for extra in 1..=2 {
                        if have >= m_last as usize || wi + extra >= words.len() {
                            break;
                        }
                        fb |= (words[wi + extra] as u128) << have;
                        have += 64;
                    }
                    if m_last < 128 {
                        fb &= (1u128 << m_last) - 1;
                    }
                    for g in 1..=r {
                        let q = (g * mk_rem / denom).min(m_last);
                        vol[(g - 1) as usize] += q;
                        if q > 0 && fb != 0 {
                            let mask = if q >= 128 { u128::MAX } else { (1u128 << q) - 1 };
                            ones[(g - 1) as usize] += (fb & mask).count_ones() as u64;
                        }
                    }
                }
                FiberPath::Slow => {
                    for g in 1..=r {
                        let q = (g * mk_rem / denom).min(m_last);
                        vol[(g - 1) as usize] += q;
                        if q > 0 {
                            ones[(g - 1) as usize] +=
                                count_ones_range(words, base, q as usize) as u64;
                        }
                    }
                }
            }
            // backtrack to the next sibling
            loop {
                if level == 0 {
                    break 'outer;
                }
                level -= 1;
                let w = weights[level];
                let next = stack_i[level] + 1;
                let rem_here = stack_rem[level];
                if next * w <= rem_here && next <= shape[level] as u64 {
                    stack_i[level] = next;
                    stack_rem[level + 1] = rem_here - next * w;
                    stack_base[level + 1] =
                        stack_base[level] + (next as usize - 1) * strides[level];
                    level += 1;
                    continue 'outer;
                }
            }
        } else {
            // descend with i = 1 if it fits, else this prefix branch is empty
            let w = weights[level];
            let rem_here = stack_rem[level];
            if w <= rem_here && shape[level] >= 1 {
                stack_i[level] = 1;
                stack_rem[level + 1] = rem_here - w;
                stack_base[level + 1] = stack_base[level];
                level += 1;
            } else {
                // no lattice point at this level; backtrack
                loop {
                    if level == 0 {
                        break 'outer;
                    }
                    level -= 1;
                    let w = weights[level];
                    let next = stack_i[level] + 1;
                    let rem_here = stack_rem[level];
                    if next * w <= rem_here && next <= shape[level] as u64 {
                        stack_i[level] = next;
                        stack_rem[level + 1] = rem_here - next * w;
                        stack_base[level + 1] =
                            stack_base[level] + (next as usize - 1) * strides[level];
                        level += 1;
                        break;
                    }
                }
            }
        }
    }

    // pick the best of this combo's candidates
    let mut best: Option<Candidate> = None;
    for g in 1..=resolution {
        let v = vol[g - 1];
        if (v as u128) < lambda as u128 {
            continue;
        }
        let o = ones[g - 1] as f64;
        let score = (1.0 + alpha) * o - alpha * v as f64;
        let mut numerators: Vec<usize> = g_pre.iter().map(|&x| x as usize).collect();
        numerators.push(g);
        let cand = Candidate { numerators, score };
        if best.as_ref().map_or(true, |b| better(&cand, b)) {
            best = Some(cand);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{BoolTensor, IndexTuple};

    fn t2(shape: [usize; 2], rows: &[&[u8]]) -> BoolTensor {
        let flat: Vec<u8> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        BoolTensor::from_dense(&shape, &flat).unwrap()
    }

    #[test]
    fn reorder_matrix_example() {
        // [[0,1],[1,1]] has marginals (1,2) per mode; sorting flips both.
        let x = t2([2, 2], &[&[0, 1], &[1, 1]]);
        let (y, plan) = ltl_reorder(&x);
        assert_eq!(y, t2([2, 2], &[&[1, 1], &[1, 0]]));
        assert_eq!(plan.perms()[0], vec![2, 1]);
        assert_eq!(plan.perms()[1], vec![2, 1]);
        assert_eq!(plan.undo(&y).unwrap(), x);
    }

    #[test]
    fn reorder_sorted_is_identity() {
        let x = t2([2, 2], &[&[1, 1], &[1, 0]]);
        let (y, plan) = ltl_reorder(&x);
        assert!(plan.is_identity());
        assert_eq!(y, x);
    }

    #[test]
    fn reorder_marginals_nonincreasing() {
        let mut ones = Vec::new();
        // deterministic pseudo-random fill of a 4x4x4 tensor
        let mut v = 7usize;
        for a in 1..=4usize {
            for b in 1..=4usize {
                for c in 1..=4usize {
                    v = v.wrapping_mul(2654435761).wrapping_add(13);
                    if (v >> 7) % 3 == 0 {
                        ones.push(vec![a, b, c]);
                    }
                }
            }
        }
        let x = BoolTensor::from_coordinates(&[4, 4, 4], ones).unwrap();
        let (y, _) = ltl_reorder(&x);
        for marg in y.marginals_all() {
            assert!(marg.windows(2).all(|w| w[0] >= w[1]), "marginal {marg:?}");
        }
        assert_eq!(y.count_ones(), x.count_ones());
    }

    #[test]
    fn p_ltl_matrix_cases() {
        let zero = BoolTensor::zeros(&[3, 3]).unwrap();
        assert!(is_p_ltl(&zero, 2, Orientation::Descending).unwrap());
        assert!(is_p_ltl(&zero, 2, Orientation::Ascending).unwrap());

        let tri = t2([2, 2], &[&[1, 1], &[1, 0]]);
        assert!(is_p_ltl(&tri, 2, Orientation::Descending).unwrap());

        let diag = t2([2, 2], &[&[1, 0], &[0, 1]]);
        assert!(!is_p_ltl(&diag, 2, Orientation::Descending).unwrap());
        assert!(!is_p_ltl(&diag, 2, Orientation::Ascending).unwrap());

        assert!(matches!(
            is_p_ltl(&tri, 1, Orientation::Descending),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn flat_2ltl_staircase_true() {
        // rows with 4,3,2,1 ones, left-aligned: exact linear marginals
        let x = t2(
            [4, 4],
            &[&[1, 1, 1, 1], &[1, 1, 1, 0], &[1, 1, 0, 0], &[1, 0, 0, 0]],
        );
        assert!(is_flat_2ltl(&x, 0.5).unwrap());
        assert!(is_flat_2ltl(&x, 1e-6).unwrap());
        // strict inequality: epsilon 0 rejects even perfect ramps
        assert!(!is_flat_2ltl(&x, 0.0).unwrap());
    }

    #[test]
    fn flat_2ltl_profile_8881_false() {
        // row marginals (8,8,8,1): second difference 8 + 1 - 2*8 = -7
        let mut rows: Vec<&[u8]> = vec![&[1; 8], &[1; 8], &[1; 8]];
        let last: &[u8] = &[1, 0, 0, 0, 0, 0, 0, 0];
        rows.push(last);
        let x = t2([4, 8], &rows);
        assert!(!is_flat_2ltl(&x, 1.0).unwrap());
        assert!(is_flat_2ltl(&x, 8.0).unwrap());
    }

    #[test]
    fn flat_2ltl_requires_2ltl() {
        let diag = t2([2, 2], &[&[1, 0], &[0, 1]]);
        assert!(matches!(is_flat_2ltl(&diag, 1.0), Err(Error::NotTwoLtl)));
    }

    #[test]
    fn flat_2ltl_all_ones() {
        let x = t2([3, 3], &[&[1; 3], &[1; 3], &[1; 3]]);
        assert!(is_flat_2ltl(&x, 0.5).unwrap());
    }

    #[test]
    fn segmenting_examples() {
        assert_eq!(segmenting_index(6, 3).unwrap(), 2);
        assert_eq!(segmenting_index(4, 2).unwrap(), 2);
        assert_eq!(segmenting_index(1, 5).unwrap(), 1);
        assert!(matches!(segmenting_index(4, 1), Err(Error::Parameter(_))));
    }

    /// Independent scorer: direct loops over the whole index space with
    /// exact rational membership.
    fn brute_score(x: &BoolTensor, numerators: &[usize], res: usize, alpha: f64) -> (f64, u64) {
        let shape = x.shape();
        let k = shape.len();
        let mut ones = 0u64;
        let mut total = 0u64;
        let mut coords = vec![1usize; k];
        loop {
            let mut lhs = 0u128;
            let mut p: u128 = 1;
            for (j, &g) in numerators.iter().enumerate() {
                p *= (g * shape[j]) as u128;
            }
            for (j, &i) in coords.iter().enumerate() {
                lhs += i as u128 * (res as u128 * (p / ((numerators[j] * shape[j]) as u128)));
            }
            if lhs <= p {
                total += 1;
                if x.get(&IndexTuple::from(coords.clone())).unwrap() {
                    ones += 1;
                }
            }
            let mut j = k;
            loop {
                if j == 0 {
                    let score = (1.0 + alpha) * ones as f64 - alpha * total as f64;
                    return (score, total);
                }
                j -= 1;
                coords[j] += 1;
                if coords[j] <= shape[j] {
                    break;
                }
                coords[j] = 1;
            }
        }
    }

    #[test]
    fn projection_recovers_exact_triangle() {
        // x = indicator of the discrete simplex with intercepts (6, 6)
        let mut ones = Vec::new();
        for i in 1..=6usize {
            for j in 1..=6usize {
                if i + j <= 6 {
                    ones.push(vec![i, j]);
                }
            }
        }
        let x = BoolTensor::from_coordinates(&[6, 6], ones).unwrap();
        let region = two_ltl_projection(&x, 4).unwrap();
        assert_eq!(region.intercepts(), &[6.0, 6.0]);

        // cross-check against the independent brute-force grid argmax
        let mut best: Option<(f64, Vec<usize>)> = None;
        for g1 in 1..=8usize {
            for g2 in 1..=8usize {
                let (score, total) = brute_score(&x, &[g1, g2], 8, 1.0);
                if total < 4 {
                    continue;
                }
                let cand = (score, vec![g1, g2]);
                best = match best {
                    None => Some(cand),
                    Some(b) => {
                        if cand.0 > b.0 || (cand.0 == b.0 && cand.1 < b.1) {
                            Some(cand)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
        }
        let best = best.unwrap();
        assert_eq!(best.1, vec![8, 8]);
        assert_eq!(best.0, 15.0);
    }

    #[test]
    fn projection_matches_brute_force_on_random_tensors() {
        // every grid candidate's (score, volume) must match direct counting
        let shapes: [&[usize]; 3] = [&[5, 7], &[4, 5, 6], &[3, 3, 3, 3]];
        let mut v = 11usize;
        for shape in shapes {
            let n: usize = shape.iter().product();
            let mut bits = vec![0u8; n];
            for b in bits.iter_mut() {
                v = v.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                *b = ((v >> 33) % 10 < 3) as u8;
            }
            let x = BoolTensor::from_dense(shape, &bits).unwrap();
            if x.is_zero() {
                continue;
            }
            let region = two_ltl_projection(&x, 1).unwrap();
            // recover numerators from intercepts
            let nums: Vec<usize> = region
                .intercepts()
                .iter()
                .zip(shape)
                .map(|(&c, &m)| (c * 8.0 / m as f64).round() as usize)
                .collect();
            let (impl_score, _) = brute_score(&x, &nums, 8, 1.0);
            // exhaustive brute argmax
            let k = shape.len();
            let mut best_score = f64::NEG_INFINITY;
            let mut best_nums = vec![0usize; k];
            let mut g = vec![1usize; k];
            loop {
                let (score, total) = brute_score(&x, &g, 8, 1.0);
                if total >= 1 && (score > best_score || (score == best_score && g < best_nums)) {
                    best_score = score;
                    best_nums = g.clone();
                }
                let mut j = k;
                let mut done = false;
                loop {
                    if j == 0 {
                        done = true;
                        break;
                    }
                    j -= 1;
                    g[j] += 1;
                    if g[j] <= 8 {
                        break;
                    }
                    g[j] = 1;
                }
                if done {
                    break;
                }
            }
            assert_eq!(impl_score, best_score, "score mismatch on {shape:?}");
            assert_eq!(nums, best_nums, "argmax mismatch on {shape:?}");
        }
    }

    #[test]
    fn projection_all_ones_full_region() {
        let x = BoolTensor::from_dense(&[4, 4], &[1u8; 16]).unwrap();
        let region = two_ltl_projection(&x, 1).unwrap();
        assert_eq!(region.intercepts(), &[4.0, 4.0]);
    }

    #[test]
    fn projection_zero_tensor_errors() {
        let x = BoolTensor::zeros(&[4, 4]).unwrap();
        assert!(matches!(two_ltl_projection(&x, 1), Err(Error::EmptyTensor)));
    }

    #[test]
    fn projection_no_region_errors() {
        // single one but lambda larger than any region can hold
        let x = BoolTensor::from_coordinates(&[2, 2], [[1usize, 1]]).unwrap();
        assert!(matches!(
            two_ltl_projection(&x, 1000),
            Err(Error::NoRegion { lambda: 1000 })
        ));
    }

    #[test]
    fn mask_full_none_and_block() {
        let x = t2([2, 2], &[&[1, 1], &[1, 0]]);
        // generous region keeps everything
        let all = SimplexRegion::new(vec![100.0, 100.0], 0.0).unwrap();
        assert_eq!(mask_to_region(&x, &all).unwrap(), x);
        // tiny region keeps nothing
        let none = SimplexRegion::new(vec![0.25, 0.25], 0.0).unwrap();
        assert!(mask_to_region(&x, &none).unwrap().is_zero());
    }

    #[test]
    fn mask_preserves_corner_block() {
        // 4x4 all-ones block in an 8x8 matrix; region i/8 + j/8 <= 1 covers it
        let mut ones = Vec::new();
        for i in 1..=4usize {
            for j in 1..=4usize {
                ones.push(vec![i, j]);
            }
        }
        let x = BoolTensor::from_coordinates(&[8, 8], ones).unwrap();
        let region = SimplexRegion::from_grid(&[8, 8], &[8, 8], 8, 0.0).unwrap();
        assert_eq!(mask_to_region(&x, &region).unwrap(), x);
    }

    #[test]
    fn region_permuted_matches() {
        let region = SimplexRegion::from_grid(&[4, 6], &[2, 8], 8, 0.0).unwrap();
        let p = region.permuted(&[2, 1]);
        assert_eq!(p.intercepts(), &[6.0, 1.0]);
        assert_eq!(region.contains(&[1, 3]), p.contains(&[3, 1]));
    }
}
