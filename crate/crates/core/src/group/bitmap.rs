/// A dense set of integers `offset + i`, one bit per `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Bitmap {
    pub offset: i64,
    pub words: Vec<u64>,
}

impl Bitmap {
    /// Builds from sorted, deduplicated values.
    pub fn from_sorted(values: &[i64]) -> Self {
        let (Some(&first), Some(&last)) = (values.first(), values.last()) else {
            return Bitmap { offset: 0, words: Vec::new() };
        };
        let span = (last as i128 - first as i128 + 1) as usize;
        let mut words = vec![0u64; span.div_ceil(64)];
        for &v in values {
            let i = (v as i128 - first as i128) as usize;
            words[i / 64] |= 1u64 << (i % 64);
        }
        Bitmap { offset: first, words }
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn contains(&self, v: i64) -> bool {
        let i = v as i128 - self.offset as i128;
        if i < 0 || i >= (self.words.len() * 64) as i128 {
            return false;
        }
        let i = i as usize;
        self.words[i / 64] & (1u64 << (i % 64)) != 0
    }

    /// Positions of set bits, relative to `offset`.
    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let bit = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(wi * 64 + bit)
            })
        })
    }

    pub fn values(&self) -> impl Iterator<Item = i64> + '_ {
        let offset = self.offset as i128;
        self.positions().map(move |p| (offset + p as i128) as i64)
    }

    /// `{ -v : v in self }`.
    pub fn negated(&self) -> Self {
        let values: Vec<i64> = self.values().collect();
        let negated: Vec<i64> = values.iter().rev().map(|&v| -v).collect();
        Bitmap::from_sorted(&negated)
    }

    /// Raw integer sumset `{ a + b }` by shift-or of `other` for each bit of
    /// `self`.
    pub fn convolve(&self, other: &Bitmap) -> Bitmap {
        if self.words.is_empty() || other.words.is_empty() {
            return Bitmap { offset: 0, words: Vec::new() };
        }
        let mut out = vec![0u64; self.words.len() + other.words.len() + 1];
        for shift in self.positions() {
            let (ws, bs) = (shift / 64, shift % 64);
            for (i, &w) in other.words.iter().enumerate() {
                if w == 0 {
                    continue;
                }
                out[i + ws] |= w << bs;
                if bs != 0 {
                    out[i + ws + 1] |= w >> (64 - bs);
                }
            }
        }
        while out.last() == Some(&0) {
            out.pop();
        }
        Bitmap { offset: self.offset + other.offset, words: out }
    }

    /// Representation counts `r(s) = #{(a, b) : a + b = s}` over raw integers,
    /// indexed by `s - (self.offset + other.offset)`.
    pub fn sum_counts(&self, other: &Bitmap) -> Vec<u64> {
        let span = self.words.len() * 64 + other.words.len() * 64;
        let mut counts = vec![0u64; span];
        let theirs: Vec<usize> = other.positions().collect();
        for p in self.positions() {
            for &q in &theirs {
                counts[p + q] += 1;
            }
        }
        counts
    }
}
