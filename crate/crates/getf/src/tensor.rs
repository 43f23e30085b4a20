//! Dense bit-packed Boolean tensors and the Boolean algebra on them.
//!
//! A [`BoolTensor`] stores a k-order binary array (2 <= k <= 8) row-major in
//! packed 64-bit words. External indices are 1-based throughout the public
//! API; the linearization is an internal detail. Tensors are immutable after
//! construction: every operation returns a new value, so sharing across
//! threads is safe.

use crate::bits::{count_ones_range, low_mask, words_for, BitVec, WORD_BITS};
use crate::error::{Error, Result};

/// Highest supported tensor order.
pub const MAX_ORDER: usize = 8;

/// Entry-count guard applied at construction.
const MAX_BITS: u128 = 1 << 46;

/// A 1-based coordinate tuple addressing one tensor entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexTuple {
    coords: Vec<usize>,
}

impl IndexTuple {
    pub fn new(coords: Vec<usize>) -> Self {
        IndexTuple { coords }
    }

    pub fn coords(&self) -> &[usize] {
        &self.coords
    }
}

impl From<Vec<usize>> for IndexTuple {
    fn from(coords: Vec<usize>) -> Self {
        IndexTuple { coords }
    }
}

impl From<&[usize]> for IndexTuple {
    fn from(coords: &[usize]) -> Self {
        IndexTuple {
            coords: coords.to_vec(),
        }
    }
}

impl<const N: usize> From<[usize; N]> for IndexTuple {
    fn from(coords: [usize; N]) -> Self {
        IndexTuple {
            coords: coords.to_vec(),
        }
    }
}

/// A non-empty, strictly increasing set of 1-based mode indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeIndexSet {
    modes: Vec<usize>,
}

impl ModeIndexSet {
    pub fn new(modes: Vec<usize>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Mode("mode set must be non-empty".into()));
        }
        for w in modes.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Mode(format!(
                    "mode set must be strictly increasing, got {:?}",
                    modes
                )));
            }
        }
        if modes[0] == 0 {
            return Err(Error::Mode("modes are 1-based".into()));
        }
        Ok(ModeIndexSet { modes })
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn contains(&self, mode: usize) -> bool {
        self.modes.binary_search(&mode).is_ok()
    }
}

/// Entry-wise Boolean operators: sum is OR, diff is XOR, product is AND.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoolOp {
    Sum,
    Diff,
    Product,
}

/// Dense bit-packed k-order Boolean tensor.
#[derive(Clone, PartialEq, Eq)]
pub struct BoolTensor {
    shape: Vec<usize>,
    /// strides[j] = product of mode lengths after j; last stride is 1.
    strides: Vec<usize>,
    words: Vec<u64>,
    nbits: usize,
    ones: usize,
}

impl std::fmt::Debug for BoolTensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "BoolTensor(shape={:?}, ones={}/{})",
            self.shape, self.ones, self.nbits
        )
    }
}

fn validate_shape(shape: &[usize]) -> Result<(Vec<usize>, usize)> {
    let k = shape.len();
    if !(2..=MAX_ORDER).contains(&k) {
        return Err(Error::Shape(format!(
            "tensor order must be in 2..={}, got {}",
            MAX_ORDER, k
        )));
    }
    let mut total: u128 = 1;
    for &m in shape {
        if m == 0 {
            return Err(Error::Shape("zero-length mode".into()));
        }
        total = total.checked_mul(m as u128).ok_or_else(|| {
            Error::Shape(format!("entry count overflows for shape {:?}", shape))
        })?;
    }
    if total > MAX_BITS {
        return Err(Error::Shape(format!(
            "shape {:?} exceeds the addressable entry budget",
            shape
        )));
    }
    let mut strides = vec![1usize; k];
    for j in (0..k - 1).rev() {
        strides[j] = strides[j + 1] * shape[j + 1];
    }
    Ok((strides, total as usize))
}

impl BoolTensor {
    /// All-zero tensor of the given shape.
    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let (strides, nbits) = validate_shape(shape)?;
        Ok(BoolTensor {
            shape: shape.to_vec(),
            strides,
            words: vec![0u64; words_for(nbits)],
            nbits,
            ones: 0,
        })
    }

    /// Builds a tensor from the listed 1-based coordinates; duplicates collapse.
    pub fn from_coordinates<I>(shape: &[usize], ones: I) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<IndexTuple>,
    {
        let mut t = BoolTensor::zeros(shape)?;
        for tuple in ones {
            let tuple = tuple.into();
            let lin = t.linear_checked(tuple.coords())?;
            t.set_lin(lin, true);
        }
        t.ones = t.recount();
        Ok(t)
    }

    /// Builds from a row-major slice of 0/1 entries (mainly for tests and IO).
    pub fn from_dense(shape: &[usize], entries: &[u8]) -> Result<Self> {
        let mut t = BoolTensor::zeros(shape)?;
        if entries.len() != t.nbits {
            return Err(Error::Shape(format!(
                "expected {} entries for shape {:?}, got {}",
                t.nbits,
                shape,
                entries.len()
            )));
        }
        for (i, &e) in entries.iter().enumerate() {
            if e != 0 {
                t.set_lin(i, true);
            }
        }
        t.ones = t.recount();
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    /// Total number of entries.
    pub fn len(&self) -> usize {
        self.nbits
    }

    pub fn is_empty(&self) -> bool {
        self.nbits == 0
    }

    /// L1 norm: the number of set entries.
    pub fn count_ones(&self) -> usize {
        self.ones
    }

    pub fn is_zero(&self) -> bool {
        self.ones == 0
    }

    /// Reads the entry at a 1-based coordinate tuple.
    pub fn get(&self, idx: &IndexTuple) -> Result<bool> {
        let lin = self.linear_checked(idx.coords())?;
        Ok(self.get_lin(lin))
    }

    fn linear_checked(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.order() {
            return Err(Error::Bounds {
                tuple: coords.to_vec(),
                shape: self.shape.clone(),
            });
        }
        let mut lin = 0usize;
        for (j, &c) in coords.iter().enumerate() {
            if c == 0 || c > self.shape[j] {
                return Err(Error::Bounds {
                    tuple: coords.to_vec(),
                    shape: self.shape.clone(),
                });
            }
            lin += (c - 1) * self.strides[j];
        }
        Ok(lin)
    }

    #[inline]
    pub(crate) fn linear0(&self, coords0: &[usize]) -> usize {
        coords0
            .iter()
            .zip(&self.strides)
            .map(|(&c, &s)| c * s)
            .sum()
    }

    #[inline]
    pub(crate) fn get_lin(&self, lin: usize) -> bool {
        (self.words[lin / WORD_BITS] >> (lin % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub(crate) fn set_lin(&mut self, lin: usize, value: bool) {
        let mask = 1u64 << (lin % WORD_BITS);
        if value {
            self.words[lin / WORD_BITS] |= mask;
        } else {
            self.words[lin / WORD_BITS] &= !mask;
        }
    }

    pub(crate) fn recount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub(crate) fn refresh_count(&mut self) {
        self.ones = self.recount();
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    pub(crate) fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Entry-wise Boolean sum (OR), difference (XOR) or product (AND).
    pub fn elementwise(&self, other: &BoolTensor, op: BoolOp) -> Result<BoolTensor> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        let mut out = self.clone();
        match op {
            BoolOp::Sum => {
                for (w, &o) in out.words.iter_mut().zip(&other.words) {
                    *w |= o;
                }
            }
            BoolOp::Diff => {
                for (w, &o) in out.words.iter_mut().zip(&other.words) {
                    *w ^= o;
                }
            }
            BoolOp::Product => {
                for (w, &o) in out.words.iter_mut().zip(&other.words) {
                    *w &= o;
                }
            }
        }
        out.ones = out.recount();
        Ok(out)
    }

    /// Sums out the modes in `p`, producing an integer tensor of order k - |p|.
    /// Summing over every mode yields an order-0 scalar holding the L1 norm.
    pub fn slice_sum(&self, p: &ModeIndexSet) -> Result<IntTensor> {
        let k = self.order();
        for &m in p.modes() {
            if m > k {
                return Err(Error::Mode(format!("mode {} out of 1..={}", m, k)));
            }
        }
        let kept: Vec<usize> = (0..k).filter(|j| !p.contains(j + 1)).collect();
        let out_shape: Vec<usize> = kept.iter().map(|&j| self.shape[j]).collect();
        let mut out = IntTensor::zeros(&out_shape);
        self.for_each_one(|coords0| {
            let mut lin = 0usize;
            for (o, &j) in kept.iter().enumerate() {
                lin += coords0[j] * out.strides[o];
            }
            out.data[lin] += 1;
        });
        Ok(out)
    }

    /// Reads the mode-`mode` fiber with the remaining coordinates fixed.
    /// `fixed` lists 1-based indices for the other modes in ascending mode order.
    pub fn mode_fiber(&self, mode: usize, fixed: &[usize]) -> Result<BitVec> {
        let k = self.order();
        if mode == 0 || mode > k {
            return Err(Error::Mode(format!("mode {} out of 1..={}", mode, k)));
        }
        if fixed.len() != k - 1 {
            return Err(Error::Bounds {
                tuple: fixed.to_vec(),
                shape: self.shape.clone(),
            });
        }
        let m0 = mode - 1;
        let mut base = 0usize;
        let mut fi = 0;
        for j in 0..k {
            if j == m0 {
                continue;
            }
            let c = fixed[fi];
            fi += 1;
            if c == 0 || c > self.shape[j] {
                return Err(Error::Bounds {
                    tuple: fixed.to_vec(),
                    shape: self.shape.clone(),
                });
            }
            base += (c - 1) * self.strides[j];
        }
        let step = self.strides[m0];
        let mut fiber = BitVec::zeros(self.shape[m0]);
        for i in 0..self.shape[m0] {
            if self.get_lin(base + i * step) {
                fiber.set(i, true);
            }
        }
        Ok(fiber)
    }

    /// Index reordering transformation: entry `(i_1..i_k)` of the output reads
    /// entry `(perm_1(i_1)..perm_k(i_k))` of the input. Each `perms[j]` must be
    /// a permutation of `1..=m_j`.
    pub fn apply_irt(&self, perms: &[Vec<usize>]) -> Result<BoolTensor> {
        let k = self.order();
        if perms.len() != k {
            return Err(Error::Permutation(format!(
                "expected {} permutations, got {}",
                k,
                perms.len()
            )));
        }
        let mut inv: Vec<Vec<usize>> = Vec::with_capacity(k);
        for (j, p) in perms.iter().enumerate() {
            inv.push(invert_permutation(p, self.shape[j])?);
        }
        let mut out = BoolTensor::zeros(&self.shape)?;
        self.for_each_one(|coords0| {
            let mut lin = 0usize;
            for (j, &c) in coords0.iter().enumerate() {
                lin += inv[j][c] * out.strides[j];
            }
            out.set_lin(lin, true);
        });
        out.ones = self.ones;
        Ok(out)
    }

    /// Transposes modes: output position `s` carries input mode `order[s]`
    /// (1-based permutation of the modes).
    pub fn permute_modes(&self, order: &[usize]) -> Result<BoolTensor> {
        let k = self.order();
        let _ = invert_permutation(order, k)?;
        let new_shape: Vec<usize> = order.iter().map(|&o| self.shape[o - 1]).collect();
        let mut out = BoolTensor::zeros(&new_shape)?;
        self.for_each_one(|coords0| {
            let mut lin = 0usize;
            for (s, &o) in order.iter().enumerate() {
                lin += coords0[o - 1] * out.strides[s];
            }
            out.set_lin(lin, true);
        });
        out.ones = self.ones;
        Ok(out)
    }

    /// Calls `f` with the 0-based coordinates of every set entry, row-major.
    pub(crate) fn for_each_one<F: FnMut(&[usize])>(&self, mut f: F) {
        let k = self.order();
        let m_last = self.shape[k - 1];
        let fiber_count = self.nbits / m_last;
        let mut coords = vec![0usize; k];
        for p in 0..fiber_count {
            let base = p * m_last;
            for_each_one_in_range(&self.words, base, m_last, |q| {
                coords[k - 1] = q;
                f(&coords);
            });
            // odometer over the prefix coordinates
            for j in (0..k - 1).rev() {
                coords[j] += 1;
                if coords[j] < self.shape[j] {
                    break;
                }
                coords[j] = 0;
            }
        }
    }

    /// Marginal of the sub-tensor at `fixed` (0-based mode/index pairs) along
    /// `target` (0-based mode not present in `fixed`).
    pub(crate) fn marginal_with_fixed(&self, fixed: &[(usize, usize)], target: usize) -> Vec<u32> {
        let k = self.order();
        let m_last = self.shape[k - 1];
        let fiber_count = self.nbits / m_last;
        let mut marg = vec![0u32; self.shape[target]];
        let last_fixed = fixed.iter().find(|&&(m, _)| m == k - 1).map(|&(_, q)| q);
        let prefix_fixed: Vec<(usize, usize)> =
            fixed.iter().copied().filter(|&(m, _)| m < k - 1).collect();
        let mut coords = vec![0usize; k - 1];
        for p in 0..fiber_count {
            let ok = prefix_fixed.iter().all(|&(m, q)| coords[m] == q);
            if ok {
                let base = p * m_last;
                if target == k - 1 {
                    for_each_one_in_range(&self.words, base, m_last, |q| {
                        marg[q] += 1;
                    });
                } else if let Some(q) = last_fixed {
                    if self.get_lin(base + q) {
                        marg[coords[target]] += 1;
                    }
                } else {
                    marg[coords[target]] += count_ones_range(&self.words, base, m_last) as u32;
                }
            }
            for j in (0..k - 1).rev() {
                coords[j] += 1;
                if coords[j] < self.shape[j] {
                    break;
                }
                coords[j] = 0;
            }
        }
        marg
    }

    /// All k full marginals (mode j summed over every other mode) in one pass.
    pub(crate) fn marginals_all(&self) -> Vec<Vec<u32>> {
        let k = self.order();
        let m_last = self.shape[k - 1];
        let fiber_count = self.nbits / m_last;
        let mut marg: Vec<Vec<u32>> = self.shape.iter().map(|&m| vec![0u32; m]).collect();
        let mut coords = vec![0usize; k - 1];
        for p in 0..fiber_count {
            let base = p * m_last;
            let cnt = count_ones_range(&self.words, base, m_last) as u32;
            if cnt > 0 {
                for j in 0..k - 1 {
                    marg[j][coords[j]] += cnt;
                }
                for_each_one_in_range(&self.words, base, m_last, |q| {
                    marg[k - 1][q] += 1;
                });
            }
            for j in (0..k - 1).rev() {
                coords[j] += 1;
                if coords[j] < self.shape[j] {
                    break;
                }
                coords[j] = 0;
            }
        }
        marg
    }
}

/// Iterates set bits of the bit range `[start, start + len)`, passing offsets
/// relative to `start`.
pub(crate) fn for_each_one_in_range<F: FnMut(usize)>(
    words: &[u64],
    start: usize,
    len: usize,
    mut f: F,
) {
    if len == 0 {
        return;
    }
    let end = start + len;
    let mut wi = start / WORD_BITS;
    let last = (end - 1) / WORD_BITS;
    while wi <= last {
        let mut w = words[wi];
        let word_base = wi * WORD_BITS;
        if wi == start / WORD_BITS {
            let head = start - word_base;
            if head > 0 {
                w &= !low_mask(head);
            }
        }
        if wi == last {
            let tail = end - word_base;
            w &= low_mask(tail);
        }
        while w != 0 {
            let tz = w.trailing_zeros() as usize;
            w &= w - 1;
            f(word_base + tz - start);
        }
        wi += 1;
    }
}

fn invert_permutation(perm: &[usize], m: usize) -> Result<Vec<usize>> {
    if perm.len() != m {
        return Err(Error::Permutation(format!(
            "permutation length {} does not match mode length {}",
            perm.len(),
            m
        )));
    }
    let mut inv = vec![usize::MAX; m];
    for (pos, &v) in perm.iter().enumerate() {
        if v == 0 || v > m || inv[v - 1] != usize::MAX {
            return Err(Error::Permutation(format!(
                "{:?} is not a permutation of 1..={}",
                perm, m
            )));
        }
        inv[v - 1] = pos;
    }
    Ok(inv)
}

/// Non-negative integer tensor, the output of slice sums and fold counts.
/// Order 0 (empty shape) is a scalar with a single entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntTensor {
    shape: Vec<usize>,
    strides: Vec<usize>,
    data: Vec<u64>,
}

impl IntTensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let k = shape.len();
        let mut strides = vec![1usize; k.max(1)];
        if k > 0 {
            for j in (0..k - 1).rev() {
                strides[j] = strides[j + 1] * shape[j + 1];
            }
        }
        let len: usize = shape.iter().product();
        IntTensor {
            shape: shape.to_vec(),
            strides: strides[..k].to_vec(),
            data: vec![0u64; len.max(1)],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [u64] {
        &mut self.data
    }

    /// Sum of all entries.
    pub fn total(&self) -> u64 {
        self.data.iter().sum()
    }

    /// Reads an entry at 1-based coordinates; order 0 accepts an empty slice.
    pub fn get(&self, coords: &[usize]) -> Result<u64> {
        if coords.len() != self.shape.len() {
            return Err(Error::Bounds {
                tuple: coords.to_vec(),
                shape: self.shape.clone(),
            });
        }
        let mut lin = 0usize;
        for (j, &c) in coords.iter().enumerate() {
            if c == 0 || c > self.shape[j] {
                return Err(Error::Bounds {
                    tuple: coords.to_vec(),
                    shape: self.shape.clone(),
                });
            }
            lin += (c - 1) * self.strides[j];
        }
        Ok(self.data[lin])
    }
}

/// k binary fibers whose Boolean outer product is one rank-1 component.
/// A pattern with any all-zero fiber is the empty pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rank1Pattern {
    fibers: Vec<BitVec>,
}

impl Rank1Pattern {
    pub fn new(fibers: Vec<BitVec>) -> Result<Self> {
        let k = fibers.len();
        if !(2..=MAX_ORDER).contains(&k) {
            return Err(Error::Arity(format!(
                "a rank-1 pattern needs 2..={} fibers, got {}",
                MAX_ORDER, k
            )));
        }
        if fibers.iter().any(|f| f.is_empty()) {
            return Err(Error::Shape("zero-length pattern fiber".into()));
        }
        Ok(Rank1Pattern { fibers })
    }

    /// The all-empty pattern for a given shape.
    pub fn empty(shape: &[usize]) -> Result<Self> {
        Rank1Pattern::new(shape.iter().map(|&m| BitVec::zeros(m)).collect())
    }

    pub fn fibers(&self) -> &[BitVec] {
        &self.fibers
    }

    pub fn order(&self) -> usize {
        self.fibers.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.fibers.iter().map(|f| f.len()).collect()
    }

    /// True when any fiber is all-zero (outer product is the zero tensor).
    pub fn is_empty_pattern(&self) -> bool {
        self.fibers.iter().any(|f| f.is_zero())
    }

    /// Number of entries in the outer-product support: the product of fiber norms.
    pub fn size(&self) -> usize {
        self.fibers.iter().map(|f| f.count_ones()).product()
    }

    /// Support overlap with another pattern of the same shape.
    pub fn overlap(&self, other: &Rank1Pattern) -> usize {
        self.fibers
            .iter()
            .zip(&other.fibers)
            .map(|(a, b)| a.and_count(b))
            .product()
    }

    /// Materializes the Boolean outer product of the fibers.
    pub fn outer(&self) -> Result<BoolTensor> {
        let shape = self.shape();
        let mut out = BoolTensor::zeros(&shape)?;
        or_pattern_into(&mut out, self);
        out.refresh_count();
        Ok(out)
    }
}

/// Sets every entry of `pattern`'s support in `out`. Shapes must already agree.
pub(crate) fn or_pattern_into(out: &mut BoolTensor, pattern: &Rank1Pattern) {
    let k = pattern.order();
    debug_assert_eq!(out.shape(), pattern.shape().as_slice());
    if pattern.is_empty_pattern() {
        return;
    }
    let supports: Vec<Vec<usize>> = pattern.fibers.iter().map(|f| f.iter_ones().collect()).collect();
    let mut idx = vec![0usize; k - 1];
    let strides = out.strides.clone();
    loop {
        let base: usize = idx
            .iter()
            .enumerate()
            .map(|(j, &i)| supports[j][i] * strides[j])
            .sum();
        for &q in &supports[k - 1] {
            out.set_lin(base + q, true);
        }
        let mut j = k - 1;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < supports[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// k pattern matrices sharing a common rank; column j across the modes is the
/// j-th rank-1 pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorSet {
    shape: Vec<usize>,
    /// columns[mode][j] is the j-th pattern fiber of that mode.
    columns: Vec<Vec<BitVec>>,
}

impl FactorSet {
    /// Rank-0 factor set for a tensor of the given shape.
    pub fn empty(shape: &[usize]) -> Result<Self> {
        let (_, _) = validate_shape(shape)?;
        Ok(FactorSet {
            shape: shape.to_vec(),
            columns: vec![Vec::new(); shape.len()],
        })
    }

    /// Builds from per-mode column lists; all modes must share a column count.
    pub fn from_columns(shape: &[usize], columns: Vec<Vec<BitVec>>) -> Result<Self> {
        let (_, _) = validate_shape(shape)?;
        if columns.len() != shape.len() {
            return Err(Error::Shape(format!(
                "expected {} factor matrices, got {}",
                shape.len(),
                columns.len()
            )));
        }
        let rank = columns[0].len();
        for (j, cols) in columns.iter().enumerate() {
            if cols.len() != rank {
                return Err(Error::Shape(format!(
                    "mode {} has {} columns, expected {}",
                    j + 1,
                    cols.len(),
                    rank
                )));
            }
            for c in cols {
                if c.len() != shape[j] {
                    return Err(Error::Shape(format!(
                        "mode {} column length {} does not match mode length {}",
                        j + 1,
                        c.len(),
                        shape[j]
                    )));
                }
            }
        }
        Ok(FactorSet {
            shape: shape.to_vec(),
            columns,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn rank(&self) -> usize {
        self.columns[0].len()
    }

    /// Columns of the mode-`mode` (1-based) pattern matrix.
    pub fn mode_columns(&self, mode: usize) -> &[BitVec] {
        &self.columns[mode - 1]
    }

    /// The j-th (0-based) rank-1 pattern.
    pub fn pattern(&self, j: usize) -> Rank1Pattern {
        Rank1Pattern {
            fibers: self.columns.iter().map(|cols| cols[j].clone()).collect(),
        }
    }

    pub fn patterns(&self) -> impl Iterator<Item = Rank1Pattern> + '_ {
        (0..self.rank()).map(|j| self.pattern(j))
    }

    /// Appends one pattern as a new column in every mode.
    pub fn push_pattern(&mut self, pattern: &Rank1Pattern) -> Result<()> {
        if pattern.shape() != self.shape {
            return Err(Error::Shape(format!(
                "pattern shape {:?} does not match factor shape {:?}",
                pattern.shape(),
                self.shape
            )));
        }
        for (mode, fiber) in pattern.fibers.iter().enumerate() {
            self.columns[mode].push(fiber.clone());
        }
        Ok(())
    }

    /// Boolean OR of the rank-1 outer products; rank 0 yields the zero tensor.
    pub fn reconstruct(&self) -> Result<BoolTensor> {
        let mut out = BoolTensor::zeros(&self.shape)?;
        for j in 0..self.rank() {
            let p = self.pattern(j);
            if !p.is_empty_pattern() {
                or_pattern_into(&mut out, &p);
            }
        }
        out.refresh_count();
        Ok(out)
    }
}

/// Reconstruction cost: L1 norm of the XOR between `x` and the factor
/// reconstruction.
pub fn reconstruction_error(x: &BoolTensor, factors: &FactorSet) -> Result<usize> {
    if factors.shape() != x.shape() {
        return Err(Error::Shape(format!(
            "factor shape {:?} does not match tensor shape {:?}",
            factors.shape(),
            x.shape()
        )));
    }
    let recon = factors.reconstruct()?;
    Ok(xor_count(x, &recon))
}

/// Popcount of `a XOR b` without materializing the difference.
pub(crate) fn xor_count(a: &BoolTensor, b: &BoolTensor) -> usize {
    debug_assert_eq!(a.shape, b.shape);
    a.words
        .iter()
        .zip(&b.words)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t2(shape: [usize; 2], rows: &[&[u8]]) -> BoolTensor {
        let flat: Vec<u8> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        BoolTensor::from_dense(&shape, &flat).unwrap()
    }

    #[test]
    fn from_coordinates_single_and_duplicate() {
        let t = BoolTensor::from_coordinates(&[2, 2], [[1usize, 1]]).unwrap();
        assert_eq!(t.count_ones(), 1);
        let t = BoolTensor::from_coordinates(&[2, 2], [[1usize, 1], [1, 1]]).unwrap();
        assert_eq!(t.count_ones(), 1);
    }

    #[test]
    fn from_coordinates_out_of_bounds() {
        let err = BoolTensor::from_coordinates(&[2, 2], [[3usize, 1]]).unwrap_err();
        match err {
            Error::Bounds { tuple, .. } => assert_eq!(tuple, vec![3, 1]),
            e => panic!("expected bounds error, got {e:?}"),
        }
    }

    #[test]
    fn shape_validation() {
        assert!(matches!(BoolTensor::zeros(&[]), Err(Error::Shape(_))));
        assert!(matches!(BoolTensor::zeros(&[4]), Err(Error::Shape(_))));
        assert!(matches!(BoolTensor::zeros(&[2, 0]), Err(Error::Shape(_))));
        assert!(matches!(
            BoolTensor::zeros(&[2; 9]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn elementwise_truth_tables() {
        let a = t2([1, 2].map(|_| 2), &[&[1, 1], &[0, 0]]);
        let b = t2([2, 2], &[&[1, 0], &[1, 0]]);
        let sum = a.elementwise(&b, BoolOp::Sum).unwrap();
        let diff = a.elementwise(&b, BoolOp::Diff).unwrap();
        let prod = a.elementwise(&b, BoolOp::Product).unwrap();
        // pairs: (1,1), (1,0), (0,1), (0,0)
        assert_eq!(sum, t2([2, 2], &[&[1, 1], &[1, 0]]));
        assert_eq!(diff, t2([2, 2], &[&[0, 1], &[1, 0]]));
        assert_eq!(prod, t2([2, 2], &[&[1, 0], &[0, 0]]));
        // X diff X = 0
        let z = a.elementwise(&a, BoolOp::Diff).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn elementwise_shape_mismatch() {
        let a = BoolTensor::zeros(&[2, 2]).unwrap();
        let b = BoolTensor::zeros(&[2, 3]).unwrap();
        assert!(matches!(
            a.elementwise(&b, BoolOp::Sum),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn rank1_outer_norm_and_edges() {
        let p = Rank1Pattern::new(vec![
            BitVec::from_01(&[1, 1]),
            BitVec::from_01(&[1, 0]),
            BitVec::from_01(&[0, 1]),
        ])
        .unwrap();
        let t = p.outer().unwrap();
        assert_eq!(t.order(), 3);
        assert_eq!(t.count_ones(), 2);
        assert_eq!(t.count_ones(), p.size());

        let ones = Rank1Pattern::new(vec![BitVec::from_01(&[1, 1]), BitVec::from_01(&[1, 1, 1])])
            .unwrap();
        assert_eq!(ones.outer().unwrap().count_ones(), 6);

        let empty = Rank1Pattern::new(vec![BitVec::from_01(&[0, 0]), BitVec::from_01(&[1, 1])])
            .unwrap();
        assert!(empty.outer().unwrap().is_zero());
        assert!(empty.is_empty_pattern());

        assert!(matches!(
            Rank1Pattern::new(vec![]),
            Err(Error::Arity(_))
        ));
    }

    #[test]
    fn reconstruct_rank0_rank1_and_idempotence() {
        let shape = [3, 4];
        let empty = FactorSet::empty(&shape).unwrap();
        assert!(empty.reconstruct().unwrap().is_zero());

        let p = Rank1Pattern::new(vec![
            BitVec::from_01(&[1, 0, 1]),
            BitVec::from_01(&[0, 1, 1, 0]),
        ])
        .unwrap();
        let mut f1 = FactorSet::empty(&shape).unwrap();
        f1.push_pattern(&p).unwrap();
        assert_eq!(f1.reconstruct().unwrap(), p.outer().unwrap());

        let mut f2 = f1.clone();
        f2.push_pattern(&p).unwrap();
        assert_eq!(f2.reconstruct().unwrap(), p.outer().unwrap());
    }

    #[test]
    fn reconstruction_error_basics() {
        let p = Rank1Pattern::new(vec![
            BitVec::from_01(&[1, 1, 0]),
            BitVec::from_01(&[1, 0, 1]),
        ])
        .unwrap();
        let x = p.outer().unwrap();
        let mut exact = FactorSet::empty(x.shape()).unwrap();
        exact.push_pattern(&p).unwrap();
        assert_eq!(reconstruction_error(&x, &exact).unwrap(), 0);

        let rank0 = FactorSet::empty(x.shape()).unwrap();
        assert_eq!(reconstruction_error(&x, &rank0).unwrap(), x.count_ones());

        let zero = BoolTensor::zeros(x.shape()).unwrap();
        assert_eq!(reconstruction_error(&zero, &exact).unwrap(), p.size());
    }

    #[test]
    fn slice_sum_examples() {
        let mut ones = Vec::new();
        for a in 1..=2usize {
            for b in 1..=3usize {
                for c in 1..=4usize {
                    ones.push(vec![a, b, c]);
                }
            }
        }
        let x = BoolTensor::from_coordinates(&[2, 3, 4], ones).unwrap();
        let s = x.slice_sum(&ModeIndexSet::new(vec![2]).unwrap()).unwrap();
        assert_eq!(s.shape(), &[2, 4]);
        assert!(s.data().iter().all(|&v| v == 3));

        let total = x
            .slice_sum(&ModeIndexSet::new(vec![1, 2, 3]).unwrap())
            .unwrap();
        assert_eq!(total.order(), 0);
        assert_eq!(total.total(), 24);

        let z = BoolTensor::zeros(&[2, 3, 4]).unwrap();
        let zs = z.slice_sum(&ModeIndexSet::new(vec![1, 3]).unwrap()).unwrap();
        assert!(zs.data().iter().all(|&v| v == 0));

        assert!(matches!(
            x.slice_sum(&ModeIndexSet::new(vec![4]).unwrap()),
            Err(Error::Mode(_))
        ));
    }

    #[test]
    fn mode_fiber_rank1_structure() {
        let a = BitVec::from_01(&[1, 0, 1]);
        let b = BitVec::from_01(&[0, 1]);
        let c = BitVec::from_01(&[1, 1, 0, 0]);
        let x = Rank1Pattern::new(vec![a.clone(), b, c]).unwrap().outer().unwrap();
        // fixed (i2, i3) in-support: fiber equals a
        assert_eq!(x.mode_fiber(1, &[2, 1]).unwrap(), a);
        // b[1] = 0: zero fiber
        assert!(x.mode_fiber(1, &[1, 1]).unwrap().is_zero());
        // bounds check
        assert!(x.mode_fiber(1, &[3, 1]).is_err());
    }

    #[test]
    fn mode_fiber_matrix_column() {
        let x = t2([2, 3], &[&[1, 0, 1], &[0, 1, 1]]);
        assert_eq!(x.mode_fiber(1, &[3]).unwrap(), BitVec::from_01(&[1, 1]));
        assert_eq!(x.mode_fiber(2, &[2]).unwrap(), BitVec::from_01(&[0, 1, 1]));
    }

    #[test]
    fn apply_irt_identity_inverse_norm() {
        let x = t2([2, 3], &[&[1, 0, 1], &[0, 1, 1]]);
        let id = vec![vec![1, 2], vec![1, 2, 3]];
        assert_eq!(x.apply_irt(&id).unwrap(), x);

        let perms = vec![vec![2, 1], vec![3, 1, 2]];
        let y = x.apply_irt(&perms).unwrap();
        assert_eq!(y.count_ones(), x.count_ones());
        // invert
        let inv = vec![vec![2, 1], vec![2, 3, 1]];
        assert_eq!(y.apply_irt(&inv).unwrap(), x);

        assert!(matches!(
            x.apply_irt(&[vec![1, 1], vec![1, 2, 3]]),
            Err(Error::Permutation(_))
        ));
    }

    #[test]
    fn permute_modes_transpose() {
        let x = t2([2, 3], &[&[1, 0, 1], &[0, 1, 1]]);
        let y = x.permute_modes(&[2, 1]).unwrap();
        assert_eq!(y.shape(), &[3, 2]);
        for r in 1..=2usize {
            for c in 1..=3usize {
                assert_eq!(
                    x.get(&IndexTuple::from([r, c])).unwrap(),
                    y.get(&IndexTuple::from([c, r])).unwrap()
                );
            }
        }
    }

    #[test]
    fn int_tensor_scalar_get() {
        let s = IntTensor::zeros(&[]);
        assert_eq!(s.order(), 0);
        assert_eq!(s.get(&[]).unwrap(), 0);
    }
}
