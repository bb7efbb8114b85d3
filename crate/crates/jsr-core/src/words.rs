//! Words over a finite matrix alphabet and their products.
//!
//! Letters are 1-based member indices; a word evaluates left-to-right, so
//! the word `(2, 1)` over `{A1, A2}` is the product `A2 * A1`. Enumeration
//! is always lexicographic, which downstream code relies on for
//! deterministic tie-breaking. Long products renormalize by a tracked
//! power-of-two scale once entries pass `RENORM_LIMIT`, keeping every value
//! the callers see finite.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use std::fmt;

/// Entry magnitude that triggers power-of-two renormalization of a running
/// product.
pub const RENORM_LIMIT: f64 = 1e100;

/// A non-empty word of 1-based letters over some alphabet `{1..=K}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<usize>);

impl Word {
    /// Validates letters against an alphabet size.
    pub fn new(letters: Vec<usize>, alphabet: usize) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::EmptyWord);
        }
        for (position, &letter) in letters.iter().enumerate() {
            if letter == 0 || letter > alphabet {
                return Err(Error::LetterRange {
                    letter,
                    position,
                    alphabet,
                });
            }
        }
        Ok(Word(letters))
    }

    pub(crate) fn from_letters(letters: Vec<usize>) -> Self {
        debug_assert!(!letters.is_empty());
        Word(letters)
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Words are never empty; this exists for clippy-style completeness.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Parses the `"2,1"` rendering.
    pub fn parse(s: &str, alphabet: usize) -> Result<Self> {
        let mut letters = Vec::new();
        for piece in s.split(',') {
            let piece = piece.trim();
            let letter: usize = piece
                .parse()
                .map_err(|_| Error::WordParse(format!("invalid letter {piece:?}")))?;
            letters.push(letter);
        }
        Word::new(letters, alphabet)
    }

    /// Left rotation by `r` positions.
    pub fn rotated(&self, r: usize) -> Word {
        let n = self.0.len();
        let r = r % n;
        let mut v = Vec::with_capacity(n);
        v.extend_from_slice(&self.0[r..]);
        v.extend_from_slice(&self.0[..r]);
        Word(v)
    }

    /// Lexicographically least rotation (the canonical representative of
    /// the cyclic class).
    pub fn rotate_min(&self) -> Word {
        let mut best = self.clone();
        for r in 1..self.0.len() {
            let cand = self.rotated(r);
            if cand < best {
                best = cand;
            }
        }
        best
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, letter) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{letter}")?;
        }
        Ok(())
    }
}

/// True iff `w` is a Lyndon word: aperiodic and strictly smallest among its
/// rotations. Linear-time check via Duval's period argument.
pub fn is_lyndon(w: &[usize]) -> bool {
    let n = w.len();
    if n == 0 {
        return false;
    }
    let mut i = 0usize;
    let mut j = 1usize;
    while j < n {
        if w[j] > w[i] {
            i = 0;
            j += 1;
        } else if w[j] == w[i] {
            i += 1;
            j += 1;
        } else {
            return false;
        }
    }
    j - i == n
}

/// A finite, non-empty family of equal-dimension matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSet {
    dim: usize,
    members: Vec<Matrix>,
}

impl MatrixSet {
    pub fn new(members: Vec<Matrix>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptySet)?;
        let dim = first.dim();
        for (index, m) in members.iter().enumerate() {
            if m.dim() != dim {
                return Err(Error::MemberDimension {
                    index,
                    got: m.dim(),
                    expected: dim,
                });
            }
        }
        Ok(MatrixSet { dim, members })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Alphabet size: the number of members.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn members(&self) -> &[Matrix] {
        &self.members
    }

    /// Member for a 1-based letter.
    pub fn member(&self, letter: usize) -> Option<&Matrix> {
        if letter == 0 {
            return None;
        }
        self.members.get(letter - 1)
    }

    pub fn ensure_dim_cap(&self, cap: usize) -> Result<()> {
        if self.dim > cap {
            return Err(Error::DimensionCap { dim: self.dim, cap });
        }
        Ok(())
    }

    fn check_word(&self, word: &Word) -> Result<()> {
        for (position, &letter) in word.letters().iter().enumerate() {
            if letter == 0 || letter > self.members.len() {
                return Err(Error::LetterRange {
                    letter,
                    position,
                    alphabet: self.members.len(),
                });
            }
        }
        Ok(())
    }
}

/// Plain left-to-right product of the word over the set. Errors if any
/// entry of the result leaves the finite range.
pub fn evaluate(set: &MatrixSet, word: &Word) -> Result<Matrix> {
    let (mut prod, mut pow2) = evaluate_scaled(set, word)?;
    // Fold the tracked power back in, in exponent-range-sized chunks so a
    // representable result is never routed through an infinity. Scaling up
    // is monotone, so a chunk that overflows means the product overflows.
    while pow2 != 0 {
        let step = pow2.clamp(-1023, 1023);
        prod = prod
            .scale(2.0_f64.powi(step as i32))
            .map_err(|_| Error::ProductOverflow)?;
        pow2 -= step;
    }
    Ok(prod)
}

/// Left-to-right product with power-of-two renormalization: the true
/// product is `matrix * 2^pow2`. Entries of `matrix` stay below
/// `RENORM_LIMIT` between steps.
pub(crate) fn evaluate_scaled(set: &MatrixSet, word: &Word) -> Result<(Matrix, i64)> {
    set.check_word(word)?;
    let mut letters = word.letters().iter();
    let first = *letters.next().expect("words are non-empty");
    let mut prod = set.member(first).expect("validated letter").clone();
    let mut pow2 = 0i64;
    for &letter in letters {
        renormalize(&mut prod, &mut pow2);
        prod = prod.mul(set.member(letter).expect("validated letter"))?;
        if !prod.entries().iter().all(|v| v.is_finite()) {
            return Err(Error::ProductOverflow);
        }
    }
    Ok((prod, pow2))
}

/// Divides out a power of two when entries grow past `RENORM_LIMIT`.
pub(crate) fn renormalize(m: &mut Matrix, pow2: &mut i64) {
    let max = m.max_abs();
    if max > RENORM_LIMIT {
        let e = max.log2().floor() as i32;
        let scaled = m
            .scale(2.0_f64.powi(-e))
            .expect("power-of-two scaling preserves finiteness");
        *m = scaled;
        *pow2 += e as i64;
    }
}

/// `value^(1/n) * 2^(pow2/n)` computed without materializing the huge value.
pub(crate) fn nth_root_scaled(value: f64, pow2: i64, n: usize) -> f64 {
    let root = value.powf(1.0 / n as f64);
    if pow2 == 0 {
        root
    } else {
        root * 2.0_f64.powf(pow2 as f64 / n as f64)
    }
}

/// Exact count of length-`n` Lyndon words over `k` letters (Moebius
/// necklace formula), saturating at `u128::MAX` on overflow.
fn lyndon_count(k: usize, n: usize) -> u128 {
    let mut total: i128 = 0;
    for e in 1..=n {
        if n % e != 0 {
            continue;
        }
        let mu = moebius(e);
        if mu == 0 {
            continue;
        }
        let Some(p) = (k as u128).checked_pow((n / e) as u32) else {
            return u128::MAX;
        };
        if p > i128::MAX as u128 {
            return u128::MAX;
        }
        total += mu as i128 * p as i128;
    }
    (total.max(0) as u128) / n as u128
}

fn moebius(mut n: usize) -> i32 {
    let mut mu = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            mu = -mu;
        }
        p += 1;
    }
    if n > 1 {
        mu = -mu;
    }
    mu
}

/// All Lyndon words of length exactly `n` over `{1..=k}`, in lexicographic
/// order, by Duval's generation. The exact count is budget-checked before
/// any allocation.
pub fn lyndon_words(k: usize, n: usize, budget: u64) -> Result<Vec<Word>> {
    let count = lyndon_count(k, n);
    if count > budget as u128 {
        return Err(Error::BudgetExceeded {
            required: count,
            budget,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    for_each_lyndon(k, n, |w| out.push(Word(w.to_vec())));
    Ok(out)
}

/// Streams Lyndon words of length exactly `n` in lexicographic order.
pub(crate) fn for_each_lyndon(k: usize, n: usize, mut f: impl FnMut(&[usize])) {
    if n == 0 {
        return;
    }
    let mut w = vec![1usize];
    loop {
        if w.len() == n {
            f(&w);
        }
        let len = w.len();
        while w.len() < n {
            let c = w[w.len() % len];
            w.push(c);
        }
        while w.last() == Some(&k) {
            w.pop();
        }
        match w.last_mut() {
            None => return,
            Some(last) => *last += 1,
        }
    }
}

/// Lexicographic iterator over all `k^n` words of length `n`.
/// Fails upfront when `k^n` exceeds the budget.
pub fn all_words(k: usize, n: usize, budget: u64) -> Result<AllWords> {
    if k == 0 || n == 0 {
        return Err(Error::EmptyWord);
    }
    let required = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if required > budget as u128 {
        return Err(Error::BudgetExceeded { required, budget });
    }
    Ok(AllWords {
        k,
        state: Some(vec![1; n]),
    })
}

#[derive(Debug)]
pub struct AllWords {
    k: usize,
    state: Option<Vec<usize>>,
}

impl Iterator for AllWords {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        let state = self.state.as_mut()?;
        let current = Word(state.clone());
        // Odometer increment, least-significant letter last.
        let mut pos = state.len();
        loop {
            if pos == 0 {
                self.state = None;
                break;
            }
            pos -= 1;
            if state[pos] < self.k {
                state[pos] += 1;
                for cell in state[pos + 1..].iter_mut() {
                    *cell = 1;
                }
                break;
            }
        }
        Some(current)
    }
}

/// Subtree decision returned by a product-walk visitor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Walk {
    Descend,
    Skip,
}

/// Depth-first walk over all words up to `max_depth`, reusing prefix
/// products through an explicit stack. The visitor sees every node in
/// lexicographic order as `(word, product, pow2)` where the true product is
/// `product * 2^pow2`, and decides whether to descend. Each visited node
/// consumes one unit of `quota`; the walk reports whether it completed
/// without exhausting it.
///
/// `root_letter` restricts the walk to the subtree under one first letter,
/// which is the partitioning unit for parallel scans: partitions are
/// disjoint, and merging their results in letter order reproduces the
/// serial outcome exactly.
pub(crate) fn walk_products<F>(
    set: &MatrixSet,
    root_letter: Option<usize>,
    max_depth: usize,
    quota: &mut u64,
    f: &mut F,
) -> Result<bool>
where
    F: FnMut(&[usize], &Matrix, i64) -> Walk,
{
    struct Frame {
        prod: Matrix,
        pow2: i64,
    }

    fn descend<F>(
        set: &MatrixSet,
        word: &mut Vec<usize>,
        frame: &Frame,
        max_depth: usize,
        quota: &mut u64,
        f: &mut F,
    ) -> Result<bool>
    where
        F: FnMut(&[usize], &Matrix, i64) -> Walk,
    {
        if word.len() >= max_depth {
            return Ok(true);
        }
        for letter in 1..=set.len() {
            if *quota == 0 {
                return Ok(false);
            }
            *quota -= 1;
            let mut prod = frame.prod.clone();
            let mut pow2 = frame.pow2;
            renormalize(&mut prod, &mut pow2);
            prod = prod.mul(set.member(letter).expect("letter in range"))?;
            if !prod.entries().iter().all(|v| v.is_finite()) {
                return Err(Error::ProductOverflow);
            }
            word.push(letter);
            let action = f(word, &prod, pow2);
            if action == Walk::Descend {
                let child = Frame { prod, pow2 };
                if !descend(set, word, &child, max_depth, quota, f)? {
                    word.pop();
                    return Ok(false);
                }
            }
            word.pop();
        }
        Ok(true)
    }

    let mut word = Vec::with_capacity(max_depth);
    match root_letter {
        None => {
            let root = Frame {
                prod: Matrix::identity(set.dim())?,
                pow2: 0,
            };
            descend(set, &mut word, &root, max_depth, quota, f)
        }
        Some(letter) => {
            if set.member(letter).is_none() {
                return Err(Error::LetterRange {
                    letter,
                    position: 0,
                    alphabet: set.len(),
                });
            }
            if *quota == 0 {
                return Ok(false);
            }
            *quota -= 1;
            let prod = set.member(letter).expect("checked").clone();
            word.push(letter);
            let action = f(&word, &prod, 0);
            if action == Walk::Skip {
                return Ok(true);
            }
            let frame = Frame { prod, pow2: 0 };
            descend(set, &mut word, &frame, max_depth, quota, f)
        }
    }
}
