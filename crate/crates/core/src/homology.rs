//! Homology of generator-presented complexes: bigraded slots when the
//! differential drops the column grading uniformly, total-degree slots
//! otherwise. Ranks are computed over the fraction field; torsion comes from
//! Smith normal form with invertible primes stripped.

use crate::algebra::{Algebra, Ten, Word};
use crate::linalg::{integer_kernel, integerize, inv_unimodular, smith, solve_q, rank_q, invariant_factors, SparseRow, Subspace};
use crate::maps::GenMap;
use crate::ring::CoefficientRing;
use crate::Q;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

pub fn basis_index(words: &[Word]) -> BTreeMap<Word, usize> {
    words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i))
        .collect()
}

/// Dense coordinates of a rank-1 element against an indexed basis.
pub fn coords(t: &Ten, idx: &BTreeMap<Word, usize>, dim: usize) -> Vec<Q> {
    debug_assert_eq!(t.rank, 1);
    let mut v = vec![Q::zero(); dim];
    for (slots, c) in &t.terms {
        let i = *idx
            .get(&slots[0])
            .unwrap_or_else(|| panic!("word outside expected basis"));
        v[i] = c.clone();
    }
    v
}

pub fn ten_from_coords(words: &[Word], v: &[Q]) -> Ten {
    let mut t = Ten::zero(1);
    for (i, c) in v.iter().enumerate() {
        if !c.is_zero() {
            t.upsert(vec![words[i].clone()], c.clone());
        }
    }
    t
}

/// Target-indexed sparse rows of the matrix of `m` on the given source basis.
pub fn map_matrix_rows(
    m: &GenMap,
    src: &[Word],
    tgt_idx: &BTreeMap<Word, usize>,
    tgt_dim: usize,
    dom: &Algebra,
    cod: &Algebra,
) -> Vec<SparseRow> {
    let mut rows: Vec<SparseRow> = vec![BTreeMap::new(); tgt_dim];
    for (j, w) in src.iter().enumerate() {
        let v = m.apply_word(w, dom, cod);
        for (slots, c) in &v.terms {
            let i = *tgt_idx
                .get(&slots[0])
                .unwrap_or_else(|| panic!("map value leaves the expected basis"));
            rows[i].insert(j, c.clone());
        }
    }
    rows
}

/// The uniform column drop of a degree-(-1) differential, if there is one.
/// The zero map counts as a pure drop of 1.
pub fn pure_column_drop(alg: &Algebra, d: &GenMap) -> Option<i64> {
    let mut drop: Option<i64> = None;
    for (w, v) in &d.vals {
        let gc = alg.word_col(w);
        for (slots, _) in &v.terms {
            let k = gc - alg.word_col(&slots[0]);
            match drop {
                None => drop = Some(k),
                Some(k0) if k0 != k => return None,
                _ => {}
            }
        }
    }
    Some(drop.unwrap_or(1))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotHomology {
    pub rank: usize,
    pub torsion: Vec<BigInt>,
}

impl SlotHomology {
    pub fn is_zero(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }
}

/// Generators of one homology slot as an R-module: free representatives
/// first, then torsion representatives with their orders.
#[derive(Debug, Clone)]
pub struct SlotClasses {
    pub rank: usize,
    pub torsion: Vec<BigInt>,
    pub reps: Vec<Ten>,
}

struct SlotData {
    homology: SlotHomology,
    reps: Vec<Vec<Q>>,
}

/// ker(out) / span(in_cols) over the ring. `out_rows` is target-indexed,
/// `n` the chain-space dimension, `in_cols` the boundary images.
fn slot_data(
    out_rows: &[SparseRow],
    n: usize,
    in_cols: &[Vec<Q>],
    ring: &CoefficientRing,
    want_reps: bool,
) -> SlotData {
    if n == 0 {
        return SlotData {
            homology: SlotHomology { rank: 0, torsion: Vec::new() },
            reps: Vec::new(),
        };
    }
    if matches!(ring, CoefficientRing::All) {
        let zero = vec![Q::zero(); out_rows.len()];
        let (_, kernel) = solve_q(out_rows, n, &zero).expect("homogeneous");
        let mut im = Subspace::empty(n);
        for c in in_cols {
            im.insert(c);
        }
        let rank = kernel.len() - {
            // image sits inside the kernel; its dimension is its rank
            let rows: Vec<SparseRow> = in_cols
                .iter()
                .map(|c| {
                    c.iter()
                        .enumerate()
                        .filter(|(_, e)| !e.is_zero())
                        .map(|(i, e)| (i, e.clone()))
                        .collect()
                })
                .collect();
            rank_q(&rows, n)
        };
        let mut reps = Vec::new();
        if want_reps {
            let mut seen = im;
            for v in &kernel {
                let r = seen.reduce(v);
                if r.iter().any(|e| !e.is_zero()) {
                    reps.push(normalize_free(&r));
                    seen.insert(&r);
                }
            }
        }
        return SlotData {
            homology: SlotHomology { rank, torsion: Vec::new() },
            reps,
        };
    }

    // localized ring: integer kernel, then Smith form of the image inside it
    let zero = vec![Q::zero(); out_rows.len()];
    let (oi, _) = integerize(out_rows, n, &zero);
    let oi: Vec<Vec<BigInt>> = oi
        .into_iter()
        .filter(|r| r.iter().any(|e| !e.is_zero()))
        .collect();
    let kern = integer_kernel(oi, n);
    let k = kern.len();
    if k == 0 {
        return SlotData {
            homology: SlotHomology { rank: 0, torsion: Vec::new() },
            reps: Vec::new(),
        };
    }
    // coordinates of each boundary image in the kernel basis; image vectors
    // are scaled by their denominator lcm (a unit in R), making them integral
    let kern_rows: Vec<SparseRow> = (0..n)
        .map(|i| {
            (0..k)
                .filter(|j| !kern[*j][i].is_zero())
                .map(|j| (j, Q::from(kern[j][i].clone())))
                .collect()
        })
        .collect();
    let mut m_cols: Vec<Vec<BigInt>> = Vec::new();
    for c in in_cols {
        let mut l = BigInt::one();
        for e in c {
            l = l.lcm(e.denom());
        }
        let ci: Vec<Q> = c.iter().map(|e| e * Q::from(l.clone())).collect();
        let (y, _) = solve_q(&kern_rows, k, &ci)
            .expect("boundaries lie in the kernel");
        m_cols.push(
            y.into_iter()
                .map(|e| {
                    assert!(e.denom().is_one(), "saturated kernel gives integer coordinates");
                    e.numer().clone()
                })
                .collect(),
        );
    }
    let m_rows: Vec<Vec<BigInt>> = (0..k)
        .map(|i| m_cols.iter().map(|c| c[i].clone()).collect())
        .collect();
    let snf = smith(m_rows);
    let rank = k - snf.rank;
    let torsion = invariant_factors(&snf.d[..snf.rank.min(snf.d.len())], ring);
    let mut reps = Vec::new();
    if want_reps {
        let uinv = inv_unimodular(&snf.u);
        let mut push_class = |i: usize| {
            // ambient representative K · (U⁻¹ e_i)
            let mut v = vec![Q::zero(); n];
            for (j, kv) in kern.iter().enumerate() {
                let c = &uinv[j][i];
                if c.is_zero() {
                    continue;
                }
                for (t, e) in kv.iter().enumerate() {
                    if !e.is_zero() {
                        v[t] += Q::from(c * e);
                    }
                }
            }
            reps.push(v);
        };
        for i in snf.rank..k {
            push_class(i);
        }
        for i in 0..snf.rank {
            let unit = ring
                .violating_prime(&Q::new(BigInt::one(), snf.d[i].clone()))
                .is_none();
            if !snf.d[i].is_one() && !unit {
                push_class(i);
            }
        }
    }
    SlotData {
        homology: SlotHomology { rank, torsion },
        reps,
    }
}

/// ker(out)/span(in) for an arbitrary two-step slot, with representative
/// coordinates — the quotient driver behind every homology computation.
/// Also serves augmented slots (comparison map as `out`), as in the
/// resolution builder's column-0 stage.
pub fn subquotient_classes(
    out_rows: &[SparseRow],
    n: usize,
    in_cols: &[Vec<Q>],
    ring: &CoefficientRing,
) -> (SlotHomology, Vec<Vec<Q>>) {
    let d = slot_data(out_rows, n, in_cols, ring, true);
    (d.homology, d.reps)
}

/// Scale a rational vector to a primitive integer vector with positive lead.
fn normalize_free(v: &[Q]) -> Vec<Q> {
    let mut l = BigInt::one();
    for e in v {
        l = l.lcm(e.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|e| e.numer() * (&l / e.denom())).collect();
    let mut g = BigInt::zero();
    for e in &ints {
        g = g.gcd(e);
    }
    if g.is_zero() {
        return v.to_vec();
    }
    let lead_neg = ints.iter().find(|e| !e.is_zero()).map_or(false, |e| e.is_negative());
    let s = if lead_neg { -g } else { g };
    ints.into_iter().map(|e| Q::from(e / &s)).collect()
}

fn bigraded_bases(alg: &Algebra, col: i64, deg: i64) -> (Vec<Word>, Vec<Word>, Vec<Word>) {
    let here = alg.words_by_coldeg(col, deg);
    let out = if col >= 1 {
        alg.words_by_coldeg(col - 1, deg - 1)
    } else {
        Vec::new()
    };
    let inn = alg.words_by_coldeg(col + 1, deg + 1);
    (here, out, inn)
}

fn slot_of(
    alg: &Algebra,
    d: &GenMap,
    here: &[Word],
    out: &[Word],
    inn: &[Word],
    ring: &CoefficientRing,
    want_reps: bool,
) -> (SlotData, Vec<Word>) {
    let n = here.len();
    let here_idx = basis_index(here);
    let out_idx = basis_index(out);
    let out_rows = map_matrix_rows(d, here, &out_idx, out.len(), alg, alg);
    let in_cols: Vec<Vec<Q>> = inn
        .iter()
        .map(|w| coords(&d.apply_word(w, alg, alg), &here_idx, n))
        .filter(|c| c.iter().any(|e| !e.is_zero()))
        .collect();
    (slot_data(&out_rows, n, &in_cols, ring, want_reps), here.to_vec())
}

/// Homology at a (column, degree) slot; valid when the differential is a
/// pure column drop of 1.
pub fn homology_bigraded(
    alg: &Algebra,
    d: &GenMap,
    col: i64,
    deg: i64,
    ring: &CoefficientRing,
) -> SlotHomology {
    let (here, out, inn) = bigraded_bases(alg, col, deg);
    slot_of(alg, d, &here, &out, &inn, ring, false).0.homology
}

/// Homology in one total degree, for differentials of any column shape.
pub fn homology_total(
    alg: &Algebra,
    d: &GenMap,
    deg: i64,
    ring: &CoefficientRing,
) -> SlotHomology {
    let here = alg.words_of_degree(deg);
    let out = alg.words_of_degree(deg + d.deg);
    let inn = alg.words_of_degree(deg - d.deg);
    slot_of(alg, d, &here, &out, &inn, ring, false).0.homology
}

/// Module generators of a bigraded homology slot, with representatives.
pub fn slot_classes(
    alg: &Algebra,
    d: &GenMap,
    col: i64,
    deg: i64,
    ring: &CoefficientRing,
) -> SlotClasses {
    let (here, out, inn) = bigraded_bases(alg, col, deg);
    let (data, words) = slot_of(alg, d, &here, &out, &inn, ring, true);
    SlotClasses {
        rank: data.homology.rank,
        torsion: data.homology.torsion,
        reps: data.reps.iter().map(|v| ten_from_coords(&words, v)).collect(),
    }
}

/// Representatives of one total-degree homology slot (free part over Q).
pub fn total_classes(alg: &Algebra, d: &GenMap, deg: i64) -> Vec<Ten> {
    let here = alg.words_of_degree(deg);
    let out = alg.words_of_degree(deg + d.deg);
    let inn = alg.words_of_degree(deg - d.deg);
    let (data, words) = slot_of(alg, d, &here, &out, &inn, &CoefficientRing::All, true);
    data.reps.iter().map(|v| ten_from_coords(&words, v)).collect()
}

/// Column-0 chains in one degree, modulo boundaries from column 1: canonical
/// normal forms and a monomial basis of the quotient.
pub struct ColZeroSlot {
    pub deg: i64,
    pub words: Vec<Word>,
    pub index: BTreeMap<Word, usize>,
    pub im: Subspace,
    /// indices of the words representing quotient classes (non-pivot columns)
    pub class_idx: Vec<usize>,
}

impl ColZeroSlot {
    /// Coordinates of the class of `t` on the monomial quotient basis.
    pub fn project(&self, t: &Ten) -> Vec<Q> {
        let v = coords(t, &self.index, self.words.len());
        let r = self.im.reduce(&v);
        self.class_idx.iter().map(|&i| r[i].clone()).collect()
    }

    pub fn class_words(&self) -> Vec<Word> {
        self.class_idx.iter().map(|&i| self.words[i].clone()).collect()
    }
}

pub fn col_zero_slot(alg: &Algebra, d: &GenMap, deg: i64) -> ColZeroSlot {
    let words = alg.words_by_coldeg(0, deg);
    let index = basis_index(&words);
    let mut im = Subspace::empty(words.len());
    for w in alg.words_by_coldeg(1, deg + 1).iter() {
        let v = d.apply_word(w, alg, alg);
        if !v.is_zero() {
            im.insert(&coords(&v, &index, words.len()));
        }
    }
    let pivots: std::collections::BTreeSet<usize> = im.pivot_cols().iter().copied().collect();
    let class_idx = (0..words.len()).filter(|i| !pivots.contains(i)).collect();
    ColZeroSlot { deg, words, index, im, class_idx }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::GenInfo;
    use crate::qi;

    /// Multiplicative resolution of an exterior algebra on one odd generator:
    /// one generator per column, d g_i = Σ_{a+b=i-1} g_a g_b.
    fn exterior_resolution(cols: i64, trunc: i64) -> (Algebra, GenMap) {
        let gens: Vec<GenInfo> = (0..=cols)
            .map(|i| GenInfo {
                name: format!("g{i}"),
                col: i,
                deg: 2 * i + 1,
            })
            .collect();
        let a = Algebra::free(gens, trunc);
        let mut d = GenMap::derivation("d", -1);
        for i in 1..=cols {
            let mut v = Ten::zero(1);
            for p in 0..i {
                let q = i - 1 - p;
                v = v.add(&Ten::from_word(Word(vec![p as u32, q as u32])));
            }
            d.set(Word::letter(i as u32), v);
        }
        (a, d)
    }

    #[test]
    fn exterior_resolution_is_exact() {
        let (a, d) = exterior_resolution(4, 9);
        let ring = CoefficientRing::All;
        // check d² = 0 on generators first
        for i in 0..=4u32 {
            let v = d.apply(&d.apply_word(&Word::letter(i), &a, &a), &a, &a);
            assert!(v.is_zero(), "d² g{i} = {}", a.render_ten(&v));
        }
        for deg in 0..=8 {
            for col in 1..=4 {
                let h = homology_bigraded(&a, &d, col, deg, &ring);
                assert!(h.is_zero(), "H({col},{deg}) rank {}", h.rank);
            }
            let h0 = homology_bigraded(&a, &d, 0, deg, &ring);
            let expect = usize::from(deg <= 1); // Λ(x): 1 and x only
            assert_eq!(h0.rank, expect, "H(0,{deg})");
        }
    }

    #[test]
    fn torsion_detected_and_stripped() {
        let a = Algebra::free(
            vec![
                GenInfo { name: "b".into(), col: 0, deg: 1 },
                GenInfo { name: "a".into(), col: 1, deg: 2 },
            ],
            6,
        );
        let mut d = GenMap::derivation("d", -1);
        d.set(Word::letter(1), Ten::from_word(Word::letter(0)).scale(&qi(2)));
        let z = CoefficientRing::localized(&[]).unwrap();
        let z2 = CoefficientRing::localized(&[2]).unwrap();
        let h = homology_bigraded(&a, &d, 0, 1, &z);
        assert_eq!(h.rank, 0);
        assert_eq!(h.torsion, vec![BigInt::from(2)]);
        assert!(homology_bigraded(&a, &d, 0, 1, &z2).is_zero());
        assert!(homology_bigraded(&a, &d, 0, 1, &CoefficientRing::All).is_zero());
        // representatives over Z: the torsion class of b
        let classes = slot_classes(&a, &d, 0, 1, &z);
        assert_eq!(classes.rank, 0);
        assert_eq!(classes.reps.len(), 1);
        assert_eq!(classes.reps[0], Ten::from_word(Word::letter(0)));
    }

    #[test]
    fn total_degree_matches_bigraded_for_pure_drop() {
        let (a, d) = exterior_resolution(3, 7);
        assert_eq!(pure_column_drop(&a, &d), Some(1));
        let ring = CoefficientRing::All;
        for deg in 0..=6 {
            let total = homology_total(&a, &d, deg, &ring);
            let sum: usize = (0..=3)
                .map(|c| homology_bigraded(&a, &d, c, deg, &ring).rank)
                .sum();
            assert_eq!(total.rank, sum, "deg {deg}");
        }
    }

    #[test]
    fn column_zero_projection() {
        let (a, d) = exterior_resolution(2, 7);
        let s = col_zero_slot(&a, &d, 2);
        // (0,2) = {g0g0}, image of (1,3) = {g1} is g0g0: quotient is zero
        assert_eq!(s.words.len(), 1);
        assert!(s.class_idx.is_empty());
        let s1 = col_zero_slot(&a, &d, 1);
        assert_eq!(s1.class_words(), vec![Word::letter(0)]);
        assert_eq!(s1.project(&Ten::from_word(Word::letter(0)).scale(&qi(5))), vec![qi(5)]);
    }
}
