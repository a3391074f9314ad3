//! Maps out of free algebras, given by their values on generators (or, for
//! plain linear maps, on words) together with an extension rule.
//!
//! * `Derivation` — extends by the graded Leibniz rule; endomorphism-valued.
//! * `Morphism` — extends multiplicatively; may land in any tensor power.
//! * `Homotopy{f,g}` — extends by s(xy) = s(x)·g(y) + (−1)^{|s||x|} f(x)·s(y)
//!   for morphism endpoints f, g into the same tensor power.
//! * `Linear` — no extension: zero off the stored words.
//!
//! Values are stored sparsely; a missing generator value means zero (or the
//! identity for morphisms flagged `identity_default`, which is how gauge
//! transformations near the identity are written).

use crate::algebra::{Algebra, Ten, Word};
use crate::Q;
use num_traits::One;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    Derivation,
    Morphism { identity_default: bool },
    Homotopy { f: Box<GenMap>, g: Box<GenMap> },
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenMap {
    pub name: String,
    pub deg: i64,
    /// Tensor rank of the codomain power (1 = the algebra itself).
    pub rank: usize,
    pub rule: Rule,
    pub vals: BTreeMap<Word, Ten>,
}

impl GenMap {
    pub fn derivation(name: impl Into<String>, deg: i64) -> Self {
        GenMap {
            name: name.into(),
            deg,
            rank: 1,
            rule: Rule::Derivation,
            vals: BTreeMap::new(),
        }
    }

    pub fn morphism(name: impl Into<String>, rank: usize, identity_default: bool) -> Self {
        GenMap {
            name: name.into(),
            deg: 0,
            rank,
            rule: Rule::Morphism { identity_default },
            vals: BTreeMap::new(),
        }
    }

    pub fn linear(name: impl Into<String>, deg: i64, rank: usize) -> Self {
        GenMap {
            name: name.into(),
            deg,
            rank,
            rule: Rule::Linear,
            vals: BTreeMap::new(),
        }
    }

    pub fn homotopy(name: impl Into<String>, deg: i64, f: GenMap, g: GenMap) -> Self {
        let rank = f.rank;
        GenMap {
            name: name.into(),
            deg,
            rank,
            rule: Rule::Homotopy {
                f: Box::new(f),
                g: Box::new(g),
            },
            vals: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, key: Word, val: Ten) {
        // For a morphism an explicit zero value is data (the generator maps
        // to 0); for the other rules a missing key already means zero.
        let keep_zero = matches!(self.rule, Rule::Morphism { .. });
        if val.is_zero() && !keep_zero {
            self.vals.remove(&key);
        } else {
            debug_assert_eq!(val.rank, self.rank);
            self.vals.insert(key, val);
        }
    }

    pub fn val_of_letter(&self, i: u32) -> Option<&Ten> {
        self.vals.get(&Word::letter(i))
    }

    pub fn is_zero_map(&self) -> bool {
        self.vals.is_empty()
    }

    /// Identity morphism of a free algebra.
    pub fn identity(alg: &Algebra) -> Self {
        let mut m = GenMap::morphism("id", 1, true);
        for (i, _) in alg.gens().iter().enumerate() {
            m.set(Word::letter(i as u32), Ten::from_word(Word::letter(i as u32)));
        }
        m
    }

    /// Apply to a single word of the domain.
    pub fn apply_word(&self, w: &Word, dom: &Algebra, cod: &Algebra) -> Ten {
        match &self.rule {
            Rule::Linear => self
                .vals
                .get(w)
                .cloned()
                .unwrap_or_else(|| Ten::zero(self.rank)),
            Rule::Morphism { identity_default } => {
                let mut acc = Ten::unit(self.rank);
                for &l in &w.0 {
                    let lv;
                    let v = match self.val_of_letter(l) {
                        Some(v) => v,
                        None => {
                            if *identity_default {
                                lv = Ten::from_word(Word::letter(l));
                                &lv
                            } else {
                                panic!(
                                    "morphism {} has no value on generator index {l}",
                                    self.name
                                );
                            }
                        }
                    };
                    acc = acc.mul(v, cod);
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
            Rule::Derivation => {
                debug_assert_eq!(self.rank, 1);
                let mut acc = Ten::zero(1);
                let mut predeg = 0i64;
                for (i, &l) in w.0.iter().enumerate() {
                    if let Some(v) = self.val_of_letter(l) {
                        let sign = if (self.deg * predeg) % 2 == 0 {
                            Q::one()
                        } else {
                            -Q::one()
                        };
                        let pre = Ten::from_word(Word(w.0[..i].to_vec()));
                        let post = Ten::from_word(Word(w.0[i + 1..].to_vec()));
                        let term = pre.mul(v, cod).mul(&post, cod).scale(&sign);
                        acc = acc.add(&term);
                    }
                    predeg += dom.letter_deg(l);
                }
                acc
            }
            Rule::Homotopy { f, g } => {
                let mut acc = Ten::zero(self.rank);
                let mut predeg = 0i64;
                for (i, &l) in w.0.iter().enumerate() {
                    if let Some(v) = self.val_of_letter(l) {
                        let sign = if (self.deg * predeg) % 2 == 0 {
                            Q::one()
                        } else {
                            -Q::one()
                        };
                        let pre = Word(w.0[..i].to_vec());
                        let post = Word(w.0[i + 1..].to_vec());
                        let fpre = f.apply_word(&pre, dom, cod);
                        let gpost = g.apply_word(&post, dom, cod);
                        let term = fpre.mul(v, cod).mul(&gpost, cod).scale(&sign);
                        acc = acc.add(&term);
                    }
                    predeg += dom.letter_deg(l);
                }
                acc
            }
        }
    }

    /// Apply linearly to a rank-1 element of the domain.
    pub fn apply(&self, x: &Ten, dom: &Algebra, cod: &Algebra) -> Ten {
        debug_assert_eq!(x.rank, 1);
        let mut acc = Ten::zero(self.rank);
        for (slots, c) in &x.terms {
            let v = self.apply_word(&slots[0], dom, cod).scale(c);
            acc = acc.add(&v);
        }
        acc
    }
}

/// One slot of a simultaneous tensor application: identity or a map.
pub enum Slot<'a> {
    Id,
    M(&'a GenMap),
}

impl<'a> Slot<'a> {
    fn deg(&self) -> i64 {
        match self {
            Slot::Id => 0,
            Slot::M(m) => m.deg,
        }
    }
    fn rank(&self) -> usize {
        match self {
            Slot::Id => 1,
            Slot::M(m) => m.rank,
        }
    }
}

/// Apply maps simultaneously to the slots of a tensor element:
/// (f₁⊗…⊗f_r)(w₁⊗…⊗w_r) with Koszul sign Σ_j |f_j| · (|w₁|+…+|w_{j−1}|).
/// Slot outputs are spliced in order, so the result rank is Σ rank(f_j).
pub fn apply_slots(slots: &[Slot], x: &Ten, dom: &Algebra, cod: &Algebra) -> Ten {
    debug_assert_eq!(slots.len(), x.rank);
    let out_rank: usize = slots.iter().map(|s| s.rank()).sum();
    let mut out = Ten::zero(out_rank);
    for (ws, c) in &x.terms {
        let mut exp = 0i64;
        let mut predeg = 0i64;
        for (j, s) in slots.iter().enumerate() {
            exp += s.deg() * predeg;
            predeg += dom.word_deg(&ws[j]);
        }
        let sign = if exp % 2 == 0 { Q::one() } else { -Q::one() };
        let mut partial: Vec<(Vec<Word>, Q)> = vec![(Vec::new(), c * sign)];
        for (j, s) in slots.iter().enumerate() {
            let piece = match s {
                Slot::Id => Ten::from_word(ws[j].clone()),
                Slot::M(m) => m.apply_word(&ws[j], dom, cod),
            };
            if piece.is_zero() {
                partial.clear();
                break;
            }
            let mut next = Vec::with_capacity(partial.len() * piece.terms.len());
            for (acc_slots, acc_c) in &partial {
                for (pw, pc) in &piece.terms {
                    let mut s2 = acc_slots.clone();
                    s2.extend_from_slice(pw);
                    next.push((s2, acc_c * pc));
                }
            }
            partial = next;
        }
        for (s2, c2) in partial {
            out.upsert(s2, c2);
        }
    }
    out
}

/// Extend an endomorphism-valued map (differential, perturbation, …) to the
/// rank-r tensor power as a derivation: Σ_i 1⊗…⊗m⊗…⊗1.
pub fn apply_on_power(m: &GenMap, rank: usize, x: &Ten, alg: &Algebra) -> Ten {
    debug_assert_eq!(m.rank, 1);
    let mut acc = Ten::zero(rank);
    for i in 0..rank {
        let slots: Vec<Slot> = (0..rank)
            .map(|j| if j == i { Slot::M(m) } else { Slot::Id })
            .collect();
        acc = acc.add(&apply_slots(&slots, x, alg, alg));
    }
    acc
}

/// Evaluate `outer ∘ inner` on generators and store as a morphism (legitimate
/// whenever both factors are algebra maps, since both sides then agree on all
/// of the domain).
pub fn compose_morphisms(
    name: impl Into<String>,
    outer: impl Fn(&Ten) -> Ten,
    inner: &GenMap,
    out_rank: usize,
    dom: &Algebra,
    cod: &Algebra,
) -> GenMap {
    let mut m = GenMap::morphism(name, out_rank, false);
    for (i, _) in dom.gens().iter().enumerate() {
        let w = Word::letter(i as u32);
        let inner_v = inner.apply_word(&w, dom, cod);
        m.set(w, outer(&inner_v));
    }
    m
}
