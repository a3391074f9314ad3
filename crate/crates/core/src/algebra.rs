//! Graded algebras and their tensor powers.
//!
//! Two kinds of algebra share one element representation:
//!
//! * free (tensor) algebras on bigraded generators — used for resolutions;
//! * finite multiplication tables on a graded basis — used for the homology
//!   algebras being resolved and for zero-differential targets.
//!
//! Elements are exact rational linear combinations of *words*.  In the free
//! case a word is a sequence of generator indices; in the table case a word
//! is empty (the unit) or a single basis index.  Tensor powers reuse the same
//! machinery with one word per slot.  All products use the Koszul sign rule
//! in total degree.  Words of total degree above the truncation are zero.

use crate::Q;
use num_traits::{One, Signed, Zero};
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

/// Bigraded generator of a free algebra. `col` is the resolution degree,
/// `deg` the total degree; always `deg >= col + 1 >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenInfo {
    pub name: String,
    pub col: i64,
    pub deg: i64,
}

/// Basis element of a table algebra (positive degree; the unit is implicit).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableElt {
    pub name: String,
    pub deg: i64,
}

#[derive(Debug, Clone)]
pub enum AlgebraKind {
    Free {
        gens: Vec<GenInfo>,
    },
    Table {
        basis: Vec<TableElt>,
        /// (i, j) -> Σ c · basis[k]; absent entries are zero.
        products: BTreeMap<(u32, u32), Vec<(u32, Q)>>,
    },
}

/// A word: empty = unit; otherwise generator/basis indices left to right.
/// The derived order (length-lexicographic on index sequences via `Vec`'s
/// lexicographic `Ord`) is the canonical term order everywhere.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(pub Vec<u32>);

impl Word {
    pub fn one() -> Self {
        Word(Vec::new())
    }
    pub fn letter(i: u32) -> Self {
        Word(vec![i])
    }
    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Algebra {
    pub kind: AlgebraKind,
    /// Words of total degree above this bound are identified with zero.
    pub truncation: i64,
    deg_cache: RefCell<BTreeMap<i64, Rc<Vec<Word>>>>,
}

impl Algebra {
    pub fn free(gens: Vec<GenInfo>, truncation: i64) -> Self {
        Algebra {
            kind: AlgebraKind::Free { gens },
            truncation,
            deg_cache: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn table(
        basis: Vec<TableElt>,
        products: BTreeMap<(u32, u32), Vec<(u32, Q)>>,
        truncation: i64,
    ) -> Self {
        Algebra {
            kind: AlgebraKind::Table { basis, products },
            truncation,
            deg_cache: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn gens(&self) -> &[GenInfo] {
        match &self.kind {
            AlgebraKind::Free { gens } => gens,
            AlgebraKind::Table { .. } => &[],
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self.kind, AlgebraKind::Free { .. })
    }

    pub fn letter_count(&self) -> usize {
        match &self.kind {
            AlgebraKind::Free { gens } => gens.len(),
            AlgebraKind::Table { basis, .. } => basis.len(),
        }
    }

    pub fn letter_deg(&self, i: u32) -> i64 {
        match &self.kind {
            AlgebraKind::Free { gens } => gens[i as usize].deg,
            AlgebraKind::Table { basis, .. } => basis[i as usize].deg,
        }
    }

    pub fn letter_col(&self, i: u32) -> i64 {
        match &self.kind {
            AlgebraKind::Free { gens } => gens[i as usize].col,
            AlgebraKind::Table { .. } => 0,
        }
    }

    pub fn letter_name(&self, i: u32) -> &str {
        match &self.kind {
            AlgebraKind::Free { gens } => &gens[i as usize].name,
            AlgebraKind::Table { basis, .. } => &basis[i as usize].name,
        }
    }

    pub fn word_deg(&self, w: &Word) -> i64 {
        w.0.iter().map(|&i| self.letter_deg(i)).sum()
    }

    pub fn word_col(&self, w: &Word) -> i64 {
        w.0.iter().map(|&i| self.letter_col(i)).sum()
    }

    /// Product of two words as a linear combination, truncation applied.
    pub fn mul_word(&self, a: &Word, b: &Word) -> Vec<(Word, Q)> {
        if a.is_one() {
            return vec![(b.clone(), Q::one())];
        }
        if b.is_one() {
            return vec![(a.clone(), Q::one())];
        }
        match &self.kind {
            AlgebraKind::Free { .. } => {
                let mut v = a.0.clone();
                v.extend_from_slice(&b.0);
                let w = Word(v);
                if self.word_deg(&w) > self.truncation {
                    vec![]
                } else {
                    vec![(w, Q::one())]
                }
            }
            AlgebraKind::Table { products, .. } => {
                // table words are single letters
                debug_assert!(a.len() == 1 && b.len() == 1);
                let key = (a.0[0], b.0[0]);
                match products.get(&key) {
                    None => vec![],
                    Some(terms) => terms
                        .iter()
                        .filter(|(k, _)| self.letter_deg(*k) <= self.truncation)
                        .map(|(k, c)| (Word::letter(*k), c.clone()))
                        .collect(),
                }
            }
        }
    }

    /// All words of the given total degree, in canonical order.
    pub fn words_of_degree(&self, m: i64) -> Rc<Vec<Word>> {
        if m < 0 || m > self.truncation {
            return Rc::new(Vec::new());
        }
        if let Some(v) = self.deg_cache.borrow().get(&m) {
            return v.clone();
        }
        let out: Vec<Word> = match &self.kind {
            AlgebraKind::Free { gens } => {
                if m == 0 {
                    vec![Word::one()]
                } else {
                    let mut acc = Vec::new();
                    for (i, g) in gens.iter().enumerate() {
                        if g.deg <= m {
                            let rest = self.words_of_degree(m - g.deg);
                            for w in rest.iter() {
                                let mut v = Vec::with_capacity(1 + w.0.len());
                                v.push(i as u32);
                                v.extend_from_slice(&w.0);
                                acc.push(Word(v));
                            }
                        }
                    }
                    acc
                }
            }
            AlgebraKind::Table { basis, .. } => {
                if m == 0 {
                    vec![Word::one()]
                } else {
                    basis
                        .iter()
                        .enumerate()
                        .filter(|(_, b)| b.deg == m)
                        .map(|(i, _)| Word::letter(i as u32))
                        .collect()
                }
            }
        };
        let rc = Rc::new(out);
        self.deg_cache.borrow_mut().insert(m, rc.clone());
        rc
    }

    /// Words of bidegree (col, deg), canonical order.
    pub fn words_by_coldeg(&self, col: i64, deg: i64) -> Vec<Word> {
        self.words_of_degree(deg)
            .iter()
            .filter(|w| self.word_col(w) == col)
            .cloned()
            .collect()
    }

    /// Basis tuples of the `rank`-fold tensor power in total degree `deg`,
    /// canonical order (lexicographic in the slot-degree composition).
    pub fn power_words(&self, rank: usize, deg: i64) -> Vec<Vec<Word>> {
        if deg < 0 {
            return Vec::new();
        }
        if rank == 0 {
            return if deg == 0 { vec![Vec::new()] } else { Vec::new() };
        }
        if rank == 1 {
            return self.words_of_degree(deg).iter().map(|w| vec![w.clone()]).collect();
        }
        let mut out = Vec::new();
        for d0 in 0..=deg {
            let heads = self.words_of_degree(d0);
            if heads.is_empty() {
                continue;
            }
            let tails = self.power_words(rank - 1, deg - d0);
            for h in heads.iter() {
                for t in &tails {
                    let mut v = Vec::with_capacity(rank);
                    v.push(h.clone());
                    v.extend_from_slice(t);
                    out.push(v);
                }
            }
        }
        out
    }

    pub fn gen_index(&self, name: &str) -> Option<u32> {
        match &self.kind {
            AlgebraKind::Free { gens } => gens
                .iter()
                .position(|g| g.name == name)
                .map(|i| i as u32),
            AlgebraKind::Table { basis, .. } => basis
                .iter()
                .position(|b| b.name == name)
                .map(|i| i as u32),
        }
    }

    pub fn render_word(&self, w: &Word) -> String {
        if w.is_one() {
            return "1".to_string();
        }
        w.0.iter()
            .map(|&i| self.letter_name(i).to_string())
            .collect::<Vec<_>>()
            .join("*")
    }

    pub fn render_ten(&self, t: &Ten) -> String {
        if t.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (slots, c)) in t.terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    out.push_str("-");
                }
            } else if neg {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            let body = slots
                .iter()
                .map(|w| self.render_word(w))
                .collect::<Vec<_>>()
                .join(" ox ");
            let all_unit = slots.iter().all(|w| w.is_one());
            if mag.is_one() && !all_unit {
                out.push_str(&body);
            } else if all_unit {
                out.push_str(&format!("{}", mag));
            } else {
                out.push_str(&format!("{}*{}", mag, body));
            }
        }
        out
    }
}

/// Element of the `rank`-fold tensor power of an algebra (rank 1 = the
/// algebra itself).  Keys are slot tuples, values nonzero scalars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ten {
    pub rank: usize,
    pub terms: BTreeMap<Vec<Word>, Q>,
}

impl Ten {
    pub fn zero(rank: usize) -> Self {
        Ten {
            rank,
            terms: BTreeMap::new(),
        }
    }

    pub fn unit(rank: usize) -> Self {
        let mut t = Ten::zero(rank);
        t.terms.insert(vec![Word::one(); rank], Q::one());
        t
    }

    pub fn from_word(w: Word) -> Self {
        let mut t = Ten::zero(1);
        t.terms.insert(vec![w], Q::one());
        t
    }

    pub fn from_slots(slots: Vec<Word>, c: Q) -> Self {
        let mut t = Ten::zero(slots.len());
        if !c.is_zero() {
            t.terms.insert(slots, c);
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn upsert(&mut self, slots: Vec<Word>, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(slots) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let v = e.get_mut();
                *v += c;
                if v.is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Ten) -> Ten {
        debug_assert_eq!(self.rank, other.rank);
        let mut t = self.clone();
        for (k, c) in &other.terms {
            t.upsert(k.clone(), c.clone());
        }
        t
    }

    pub fn sub(&self, other: &Ten) -> Ten {
        debug_assert_eq!(self.rank, other.rank);
        let mut t = self.clone();
        for (k, c) in &other.terms {
            t.upsert(k.clone(), -c.clone());
        }
        t
    }

    pub fn neg(&self) -> Ten {
        let mut t = Ten::zero(self.rank);
        for (k, c) in &self.terms {
            t.terms.insert(k.clone(), -c.clone());
        }
        t
    }

    pub fn scale(&self, c: &Q) -> Ten {
        if c.is_zero() {
            return Ten::zero(self.rank);
        }
        let mut t = Ten::zero(self.rank);
        for (k, v) in &self.terms {
            t.terms.insert(k.clone(), v * c);
        }
        t
    }

    /// Koszul product in the tensor power: on terms,
    /// (u₁⊗…⊗u_r)(v₁⊗…⊗v_r) = ± u₁v₁ ⊗ … ⊗ u_rv_r with sign exponent
    /// Σ_i |v_i| · Σ_{j>i} |u_j|.
    pub fn mul(&self, other: &Ten, alg: &Algebra) -> Ten {
        debug_assert_eq!(self.rank, other.rank);
        let r = self.rank;
        let mut out = Ten::zero(r);
        for (u, a) in &self.terms {
            let udegs: Vec<i64> = u.iter().map(|w| alg.word_deg(w)).collect();
            // suffix degree sums of u
            let mut suffix = vec![0i64; r + 1];
            for i in (0..r).rev() {
                suffix[i] = suffix[i + 1] + udegs[i];
            }
            for (v, b) in &other.terms {
                let mut exp = 0i64;
                for i in 0..r {
                    exp += alg.word_deg(&v[i]) * suffix[i + 1];
                }
                let sign = if exp % 2 == 0 { Q::one() } else { -Q::one() };
                // slotwise products, expanded multilinearly
                let mut partial: Vec<(Vec<Word>, Q)> =
                    vec![(Vec::with_capacity(r), &sign * a * b)];
                for i in 0..r {
                    let factors = alg.mul_word(&u[i], &v[i]);
                    if factors.is_empty() {
                        partial.clear();
                        break;
                    }
                    let mut next = Vec::with_capacity(partial.len() * factors.len());
                    for (slots, c) in &partial {
                        for (w, f) in &factors {
                            let mut s2 = slots.clone();
                            s2.push(w.clone());
                            next.push((s2, c * f));
                        }
                    }
                    partial = next;
                }
                for (slots, c) in partial {
                    out.upsert(slots, c);
                }
            }
        }
        out
    }

    /// Juxtaposition a ⊗ b (no sign; signs only arise when maps move past
    /// elements).
    pub fn tensor(&self, other: &Ten) -> Ten {
        let mut out = Ten::zero(self.rank + other.rank);
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                let mut slots = u.clone();
                slots.extend_from_slice(v);
                out.upsert(slots, a * b);
            }
        }
        out
    }

    /// Total degree if homogeneous (None for 0 or inhomogeneous).
    pub fn total_deg(&self, alg: &Algebra) -> Option<i64> {
        let mut deg = None;
        for k in self.terms.keys() {
            let d: i64 = k.iter().map(|w| alg.word_deg(w)).sum();
            match deg {
                None => deg = Some(d),
                Some(d0) if d0 == d => {}
                _ => return None,
            }
        }
        deg
    }

    /// Graded twist on rank-2 tensors: x⊗y ↦ (−1)^{|x||y|} y⊗x.
    pub fn twist(&self, alg: &Algebra) -> Ten {
        debug_assert_eq!(self.rank, 2);
        let mut out = Ten::zero(2);
        for (k, c) in &self.terms {
            let (a, b) = (&k[0], &k[1]);
            let exp = alg.word_deg(a) * alg.word_deg(b);
            let c2 = if exp % 2 == 0 { c.clone() } else { -c.clone() };
            out.upsert(vec![b.clone(), a.clone()], c2);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qi;

    /// Free algebra on x0 (0,1), y0 (0,3), z0 (0,4), x1 (1,3).
    fn sample() -> Algebra {
        Algebra::free(
            vec![
                GenInfo { name: "x0".into(), col: 0, deg: 1 },
                GenInfo { name: "y0".into(), col: 0, deg: 3 },
                GenInfo { name: "z0".into(), col: 0, deg: 4 },
                GenInfo { name: "x1".into(), col: 1, deg: 3 },
            ],
            12,
        )
    }

    fn w(alg: &Algebra, names: &[&str]) -> Word {
        Word(names.iter().map(|n| alg.gen_index(n).unwrap()).collect())
    }

    #[test]
    fn koszul_sign_rank2() {
        let a = sample();
        let x0 = w(&a, &["x0"]);
        let y0 = w(&a, &["y0"]);
        let z0 = w(&a, &["z0"]);
        // (1 ⊗ x0)(x0 ⊗ 1) = -x0 ⊗ x0
        let l = Ten::from_slots(vec![Word::one(), x0.clone()], Q::one());
        let r = Ten::from_slots(vec![x0.clone(), Word::one()], Q::one());
        let p = l.mul(&r, &a);
        let mut expect = Ten::zero(2);
        expect.upsert(vec![x0.clone(), x0.clone()], -qi(1));
        assert_eq!(p, expect);
        // (y0 ⊗ 1)(1 ⊗ z0) = y0 ⊗ z0
        let l = Ten::from_slots(vec![y0.clone(), Word::one()], Q::one());
        let r = Ten::from_slots(vec![Word::one(), z0.clone()], Q::one());
        let p = l.mul(&r, &a);
        let mut expect = Ten::zero(2);
        expect.upsert(vec![y0.clone(), z0.clone()], qi(1));
        assert_eq!(p, expect);
        // (1 ⊗ y0)(z0 ⊗ 1) = +z0 ⊗ y0   (even |z0| = 4)
        let l = Ten::from_slots(vec![Word::one(), y0.clone()], Q::one());
        let r = Ten::from_slots(vec![z0.clone(), Word::one()], Q::one());
        let p = l.mul(&r, &a);
        let mut expect = Ten::zero(2);
        expect.upsert(vec![z0.clone(), y0.clone()], qi(1));
        assert_eq!(p, expect);
    }

    #[test]
    fn basis_enumeration() {
        let a = sample();
        let b01: Vec<Word> = a.words_by_coldeg(0, 1);
        assert_eq!(b01, vec![w(&a, &["x0"])]);
        let b02 = a.words_by_coldeg(0, 2);
        assert_eq!(b02, vec![w(&a, &["x0", "x0"])]);
        // (1,4): x0*x1 and x1*x0, in canonical (index-lex) order
        let b14 = a.words_by_coldeg(1, 4);
        assert_eq!(b14, vec![w(&a, &["x0", "x1"]), w(&a, &["x1", "x0"])]);
    }

    #[test]
    fn word_count_matches_recursion() {
        // counts satisfy c(n) = Σ_g c(n - deg g)
        let a = sample();
        let c = |n: i64| a.words_of_degree(n).len() as i64;
        for n in 1..=10 {
            let mut expect = 0;
            for g in a.gens() {
                if g.deg <= n {
                    expect += c(n - g.deg);
                }
            }
            assert_eq!(c(n), expect, "degree {n}");
        }
    }

    #[test]
    fn truncation_kills_deep_words() {
        let mut a = sample();
        a.truncation = 3;
        let x0 = w(&a, &["x0"]);
        let y0 = w(&a, &["y0"]);
        let p = Ten::from_word(y0).mul(&Ten::from_word(x0), &a);
        assert!(p.is_zero());
    }

    #[test]
    fn twist_signs() {
        let a = sample();
        let x0 = w(&a, &["x0"]);
        let y0 = w(&a, &["y0"]);
        let t = Ten::from_slots(vec![x0.clone(), y0.clone()], Q::one());
        let tw = t.twist(&a);
        let mut expect = Ten::zero(2);
        expect.upsert(vec![y0, x0], -qi(1)); // |x0||y0| = 3 odd
        assert_eq!(tw, expect);
    }

    #[test]
    fn render_basic() {
        let a = sample();
        let x0 = w(&a, &["x0"]);
        let mut t = Ten::zero(2);
        t.upsert(vec![x0.clone(), x0.clone()], Q::new(3.into(), 2.into()));
        t.upsert(vec![Word::one(), x0.clone()], -qi(1));
        assert_eq!(a.render_ten(&t), "-1 ox x0 + 3/2*x0 ox x0");
    }
}
