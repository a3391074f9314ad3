//! Presented graded Hopf algebras (finite multiplication/comultiplication
//! tables), the multiplicative resolution builder, and the validators that
//! certify a differential algebra is a resolution of a given table.
//!
//! The builder is minimal and deterministic: column-0 generators form a
//! canonical complement of the decomposables in each degree, and every higher
//! column kills the homology classes remaining one column below, in
//! increasing total degree.  Over a proper subring of the rationals the
//! column-0 step must present a free module; when it does not, the offending
//! prime is reported instead of silently passing to the fraction field.


use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::algebra::{Algebra, AlgebraKind, GenInfo, Ten, Word};
use crate::error::EngineError;
use crate::homology::{
    basis_index, coords, homology_bigraded, map_matrix_rows, subquotient_classes,
    ten_from_coords,
};
use crate::linalg::{integerize, inv_unimodular, invariant_factors, smith, Subspace};
use crate::maps::{apply_slots, GenMap, Slot};
use crate::ring::CoefficientRing;
use crate::solve::square_zero_residues;
use crate::Q;

/// A graded Hopf algebra given by finite tables: basis, products, and
/// coproducts, all with coefficients in the ring.
#[derive(Debug, Clone)]
pub struct HopfPresentation {
    pub h: Algebra,
    /// Coproduct values per basis letter (linear, rank 2, degree 0).
    pub delta: GenMap,
    pub ring: CoefficientRing,
}

/// A free bigraded algebra with a square-zero derivation dropping the
/// column grading by exactly one.
#[derive(Debug, Clone)]
pub struct Resolution {
    pub alg: Algebra,
    pub d: GenMap,
}

/// Builder output: the resolution together with the comparison morphism
/// onto the table (zero on every positive-column generator).
#[derive(Debug, Clone)]
pub struct BuiltResolution {
    pub res: Resolution,
    pub rho: GenMap,
}

fn fmt_basis(h: &Algebra, t: &Ten) -> String {
    h.render_ten(t)
}

/// Structural laws of a presented table: grading, ring-integrality,
/// associativity, the connected-counit shape of the coproduct,
/// comultiplicativity, and coassociativity.
pub fn validate_hopf_table(hp: &HopfPresentation) -> Result<(), EngineError> {
    let h = &hp.h;
    let n = h.truncation;
    let (basis, products) = match &h.kind {
        AlgebraKind::Table { basis, products } => (basis, products),
        AlgebraKind::Free { .. } => {
            return Err(EngineError::validation(
                "expected a finite multiplication table, found a free algebra",
            ))
        }
    };
    for b in basis {
        if b.deg < 1 {
            return Err(EngineError::validation(format!(
                "table element {} has degree {}; every listed element must sit in positive degree",
                b.name, b.deg
            )));
        }
    }
    for (&(i, j), v) in products {
        let want = h.letter_deg(i) + h.letter_deg(j);
        for (k, c) in v {
            if h.letter_deg(*k) != want {
                return Err(EngineError::validation(format!(
                    "product {}*{} lands in degree {} instead of {}",
                    h.letter_name(i),
                    h.letter_name(j),
                    h.letter_deg(*k),
                    want
                )));
            }
            if let Some(p) = hp.ring.violating_prime(c) {
                return Err(EngineError::validation(format!(
                    "product {}*{} has coefficient {} — not R-integral: prime {}",
                    h.letter_name(i),
                    h.letter_name(j),
                    c,
                    p
                )));
            }
        }
    }
    // Associativity on all basis triples; truncation cuts both sides alike.
    for a in 0..basis.len() as u32 {
        for b in 0..basis.len() as u32 {
            for c in 0..basis.len() as u32 {
                let ab = Ten::from_word(Word::letter(a)).mul(&Ten::from_word(Word::letter(b)), h);
                let bc = Ten::from_word(Word::letter(b)).mul(&Ten::from_word(Word::letter(c)), h);
                let left = ab.mul(&Ten::from_word(Word::letter(c)), h);
                let right = Ten::from_word(Word::letter(a)).mul(&bc, h);
                if left != right {
                    return Err(EngineError::validation(format!(
                        "associativity fails on ({}, {}, {}): {} vs {}",
                        h.letter_name(a),
                        h.letter_name(b),
                        h.letter_name(c),
                        fmt_basis(h, &left),
                        fmt_basis(h, &right)
                    )));
                }
            }
        }
    }
    // Coproduct: counit shape, grading, integrality.
    for i in 0..basis.len() as u32 {
        let name = h.letter_name(i);
        let v = hp
            .delta
            .val_of_letter(i)
            .cloned()
            .unwrap_or_else(|| Ten::zero(2));
        let mut left_unit = Ten::zero(2);
        let mut right_unit = Ten::zero(2);
        for (slots, c) in &v.terms {
            let d0 = h.word_deg(&slots[0]);
            let d1 = h.word_deg(&slots[1]);
            if d0 + d1 != h.letter_deg(i) {
                return Err(EngineError::validation(format!(
                    "coproduct of {name} is not homogeneous"
                )));
            }
            if let Some(p) = hp.ring.violating_prime(c) {
                return Err(EngineError::validation(format!(
                    "coproduct of {name} has coefficient {c} — not R-integral: prime {p}"
                )));
            }
            if slots[1].is_one() {
                left_unit.upsert(slots.clone(), c.clone());
            } else if slots[0].is_one() {
                right_unit.upsert(slots.clone(), c.clone());
            }
        }
        let want_l = Ten::from_slots(vec![Word::letter(i), Word::one()], Q::one());
        let want_r = Ten::from_slots(vec![Word::one(), Word::letter(i)], Q::one());
        if left_unit != want_l || right_unit != want_r {
            return Err(EngineError::validation(format!(
                "coproduct of {name} breaks the counit law: the unit-slot terms must be exactly {name}⊗1 + 1⊗{name}"
            )));
        }
    }
    // Comultiplicativity: Δ(ab) = Δ(a)Δ(b) wherever the product is graded
    // within the truncation.
    for a in 0..basis.len() as u32 {
        for b in 0..basis.len() as u32 {
            if h.letter_deg(a) + h.letter_deg(b) > n {
                continue;
            }
            let ab = Ten::from_word(Word::letter(a)).mul(&Ten::from_word(Word::letter(b)), h);
            let lhs = hp.delta.apply(&ab, h, h);
            let rhs = hp
                .delta
                .apply_word(&Word::letter(a), h, h)
                .mul(&hp.delta.apply_word(&Word::letter(b), h, h), h);
            if lhs != rhs {
                return Err(EngineError::validation(format!(
                    "coproduct is not multiplicative on {}*{}: {} vs {}",
                    h.letter_name(a),
                    h.letter_name(b),
                    fmt_basis(h, &lhs),
                    fmt_basis(h, &rhs)
                )));
            }
        }
    }
    // Coassociativity.
    for i in 0..basis.len() as u32 {
        let v = hp.delta.apply_word(&Word::letter(i), h, h);
        let l = apply_slots(&[Slot::M(&hp.delta), Slot::Id], &v, h, h);
        let r = apply_slots(&[Slot::Id, Slot::M(&hp.delta)], &v, h, h);
        if l != r {
            return Err(EngineError::validation(format!(
                "coproduct is not coassociative on {}",
                h.letter_name(i)
            )));
        }
    }
    Ok(())
}

/// Smallest prime factor of `d` that is not invertible in the ring.
fn least_obstructing_prime(d: &BigInt, ring: &CoefficientRing) -> u64 {
    let mut m = d.abs();
    let mut p = BigInt::from(2u32);
    while &p * &p <= m {
        if (&m % &p).is_zero() {
            if !ring.unit_prime(&p) {
                return u64::try_from(&p).unwrap();
            }
            while (&m % &p).is_zero() {
                m /= &p;
            }
        }
        p += 1;
    }
    u64::try_from(&m).expect("invariant factor fits a machine prime")
}

/// Canonical complement of the decomposables in degree `m`: the column-0
/// generators of the resolution in that degree.  Fails with a prime when the
/// quotient by decomposables is not a free module over the ring.
fn indecomposables(h: &Algebra, m: i64, ring: &CoefficientRing) -> Result<Vec<Ten>, u64> {
    let words = h.words_of_degree(m);
    let nn = words.len();
    if nn == 0 {
        return Ok(Vec::new());
    }
    let idx = basis_index(&words);
    let mut prods: Vec<Vec<Q>> = Vec::new();
    for d1 in 1..m {
        for a in h.words_of_degree(d1).iter() {
            for b in h.words_of_degree(m - d1).iter() {
                let ab = Ten::from_word(a.clone()).mul(&Ten::from_word(b.clone()), h);
                if !ab.is_zero() {
                    prods.push(coords(&ab, &idx, nn));
                }
            }
        }
    }
    // Greedy letters-first complement over the fraction field.
    let mut span = Subspace::empty(nn);
    for p in &prods {
        span.insert(p);
    }
    let mut chosen: Vec<usize> = Vec::new();
    for k in 0..nn {
        let mut e = vec![Q::zero(); nn];
        e[k] = Q::one();
        if span.insert(&e) {
            chosen.push(k);
        }
    }
    if matches!(ring, CoefficientRing::All) {
        return Ok(chosen
            .into_iter()
            .map(|k| Ten::from_word(words[k].clone()))
            .collect());
    }

    // Over a subring: the quotient must be free, and the chosen complement
    // must span it integrally.
    let sparse: Vec<crate::linalg::SparseRow> = (0..nn)
        .map(|i| {
            prods
                .iter()
                .enumerate()
                .filter(|(_, c)| !c[i].is_zero())
                .map(|(j, c)| (j, c[i].clone()))
                .collect()
        })
        .collect();
    let zero = vec![Q::zero(); nn];
    let (mi, _) = integerize(&sparse, prods.len(), &zero);
    let snf = smith(mi.clone());
    let tors = invariant_factors(&snf.d, ring);
    if let Some(t) = tors.first() {
        return Err(least_obstructing_prime(t, ring));
    }
    let complement_ok = |cols: &[Vec<BigInt>]| -> bool {
        let mut all = mi.clone();
        for (r, row) in all.iter_mut().enumerate() {
            for c in cols {
                row.push(c[r].clone());
            }
        }
        let s = smith(all);
        s.rank == nn && invariant_factors(&s.d, ring).is_empty()
    };
    let letter_cols: Vec<Vec<BigInt>> = chosen
        .iter()
        .map(|&k| {
            (0..nn)
                .map(|i| if i == k { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect();
    if complement_ok(&letter_cols) {
        return Ok(chosen
            .into_iter()
            .map(|k| Ten::from_word(words[k].clone()))
            .collect());
    }
    // Fall back to the Smith-canonical complement U⁻¹e_i, i past the rank.
    let uinv = inv_unimodular(&snf.u);
    let mut cols: Vec<Vec<BigInt>> = Vec::new();
    let mut reps = Vec::new();
    for i in snf.rank..nn {
        let col: Vec<BigInt> = (0..nn).map(|r| uinv[r][i].clone()).collect();
        let v: Vec<Q> = col.iter().map(|e| Q::from(e.clone())).collect();
        reps.push(ten_from_coords(&words, &v));
        cols.push(col);
    }
    assert!(
        complement_ok(&cols),
        "Smith-canonical complement must present the indecomposables"
    );
    Ok(reps)
}

/// Classes of ker(ρ̄)/im(d) in column 0 at the given degree — what a new
/// column-1 generator must kill.
fn augmentation_classes(
    alg: &Algebra,
    d: &GenMap,
    rho: &GenMap,
    h: &Algebra,
    deg: i64,
    ring: &CoefficientRing,
) -> Vec<Ten> {
    let words0 = alg.words_by_coldeg(0, deg);
    if words0.is_empty() {
        return Vec::new();
    }
    let idx0 = basis_index(&words0);
    let h_words = h.words_of_degree(deg);
    let h_idx = basis_index(&h_words);
    let out_rows = map_matrix_rows(rho, &words0, &h_idx, h_words.len(), alg, h);
    let in_cols: Vec<Vec<Q>> = alg
        .words_by_coldeg(1, deg + 1)
        .iter()
        .map(|w| coords(&d.apply_word(w, alg, alg), &idx0, words0.len()))
        .filter(|c| c.iter().any(|e| !e.is_zero()))
        .collect();
    let (_, reps) = subquotient_classes(&out_rows, words0.len(), &in_cols, ring);
    reps.iter().map(|v| ten_from_coords(&words0, v)).collect()
}

/// Build the minimal multiplicative resolution of a validated table up to
/// total degree `n`.
pub fn build_resolution(hp: &HopfPresentation, n: i64) -> Result<BuiltResolution, EngineError> {
    let h = &hp.h;
    if n > h.truncation {
        return Err(EngineError::truncation(format!(
            "resolution truncation {n} exceeds the table truncation {}",
            h.truncation
        )));
    }
    let mut gens: Vec<GenInfo> = Vec::new();
    let mut d = GenMap::derivation("d", -1);
    let mut rho = GenMap::morphism("rho", 1, false);
    rho.set(Word::one(), Ten::unit(1));
    let mut used: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();

    // Column 0: canonical complement of the decomposables.
    for m in 1..=n {
        let reps = indecomposables(h, m, &hp.ring).map_err(|p| {
            EngineError::obstruction(format!(
                "column-0 generators in degree {m}: the quotient by decomposables is not a free module over the ring (prime {p})"
            ))
        })?;
        for (i, rep) in reps.iter().enumerate() {
            let name = single_letter_name(h, rep)
                .map(|b| format!("{b}0"))
                .filter(|nm| !used.contains(nm))
                .unwrap_or_else(|| format!("g0_{m}_{i}"));
            used.insert(name.clone());
            let li = gens.len() as u32;
            gens.push(GenInfo { name, col: 0, deg: m });
            rho.set(Word::letter(li), rep.clone());
        }
    }

    // Higher columns, degree by degree.
    for m in 2..=n {
        for c in 1..=(m - 1) {
            let alg = Algebra::free(gens.clone(), n);
            let classes = if c == 1 {
                augmentation_classes(&alg, &d, &rho, h, m - 1, &hp.ring)
            } else {
                crate::homology::slot_classes(&alg, &d, c - 1, m - 1, &hp.ring).reps
            };
            for (i, rep) in classes.iter().enumerate() {
                let name = if classes.len() == 1 {
                    format!("e{c}_{m}")
                } else {
                    format!("e{c}_{m}_{i}")
                };
                assert!(used.insert(name.clone()), "generator names must be unique");
                let li = gens.len() as u32;
                gens.push(GenInfo { name, col: c, deg: m });
                d.set(Word::letter(li), rep.clone());
                rho.set(Word::letter(li), Ten::zero(1));
            }
        }
    }

    let alg = Algebra::free(gens, n);
    Ok(BuiltResolution {
        res: Resolution { alg, d },
        rho,
    })
}

fn single_letter_name(h: &Algebra, t: &Ten) -> Option<String> {
    if t.terms.len() != 1 {
        return None;
    }
    let (slots, c) = t.terms.iter().next().unwrap();
    if slots[0].len() == 1 && c.is_one() {
        Some(h.letter_name(slots[0].0[0]).to_string())
    } else {
        None
    }
}

/// Structural validation every differential algebra must pass before any
/// perturbation work: bigraded generators, derivation of degree −1 dropping
/// the column by exactly 1 with ring-integral values, and d² = 0.
pub fn validate_structure(res: &Resolution, ring: &CoefficientRing) -> Result<(), EngineError> {
    let alg = &res.alg;
    for (i, g) in alg.gens().iter().enumerate() {
        if g.col < 0 || g.deg < g.col + 1 {
            return Err(EngineError::validation(format!(
                "generator {} at (column {}, degree {}) violates degree ≥ column + 1",
                g.name, g.col, g.deg
            )));
        }
        let v = res.d.apply_word(&Word::letter(i as u32), alg, alg);
        for (slots, c) in &v.terms {
            let w = &slots[0];
            if alg.word_deg(w) != g.deg - 1 {
                return Err(EngineError::validation(format!(
                    "d({}) is not homogeneous of degree {}",
                    g.name,
                    g.deg - 1
                )));
            }
            if alg.word_col(w) != g.col - 1 {
                return Err(EngineError::validation(format!(
                    "d({}) must drop the column by exactly 1; found a term in column {}",
                    g.name,
                    alg.word_col(w)
                )));
            }
            if let Some(p) = ring.violating_prime(c) {
                return Err(EngineError::validation(format!(
                    "d({}) has coefficient {} — not R-integral: prime {}",
                    g.name, c, p
                )));
            }
        }
    }
    if let Some((g, r)) = square_zero_residues(alg, &res.d).into_iter().next() {
        return Err(EngineError::validation(format!(
            "d² ≠ 0: on generator {} the residue is {}",
            alg.render_word(&g),
            alg.render_ten(&r)
        )));
    }
    Ok(())
}

/// Certify that `(res, rho)` resolves the table, as far as the truncation
/// N can certify: positive columns acyclic and the comparison injective on
/// column-0 homology in degrees < N, surjective over the ring through N.
pub fn validate_resolution(
    res: &Resolution,
    rho: &GenMap,
    hp: &HopfPresentation,
) -> Result<(), EngineError> {
    validate_structure(res, &hp.ring)?;
    let alg = &res.alg;
    let h = &hp.h;
    let n = res.alg.truncation;
    // ρ: column-0 values of matching degree, zero on higher columns, ρ∘d = 0.
    for (i, g) in alg.gens().iter().enumerate() {
        let v = rho.apply_word(&Word::letter(i as u32), alg, h);
        if g.col > 0 {
            if !v.is_zero() {
                return Err(EngineError::validation(format!(
                    "comparison map must vanish on the positive-column generator {}",
                    g.name
                )));
            }
        } else {
            for (slots, c) in &v.terms {
                if h.word_deg(&slots[0]) != g.deg {
                    return Err(EngineError::validation(format!(
                        "comparison image of {} is not homogeneous",
                        g.name
                    )));
                }
                if let Some(p) = hp.ring.violating_prime(c) {
                    return Err(EngineError::validation(format!(
                        "comparison image of {} — not R-integral: prime {}",
                        g.name, p
                    )));
                }
            }
        }
        let rd = rho.apply(&res.d.apply_word(&Word::letter(i as u32), alg, alg), alg, h);
        if !rd.is_zero() {
            return Err(EngineError::validation(format!(
                "comparison map is not a chain map: ρ(d {}) = {} ≠ 0",
                g.name,
                fmt_basis(h, &rd)
            )));
        }
    }
    // Positive-column acyclicity strictly below the truncation.
    for k in 0..n {
        for c in 1..k.max(1) {
            let s = homology_bigraded(alg, &res.d, c, k, &hp.ring);
            if !s.is_zero() {
                return Err(EngineError::validation(format!(
                    "homology at (column {c}, degree {k}) is nonzero: rank {}, torsion {:?}",
                    s.rank, s.torsion
                )));
            }
        }
    }
    // Column 0: ker(ρ̄)/im(d) must vanish strictly below the truncation,
    // and ρ̄ must hit the whole table over the ring through it.
    for k in 1..=n {
        let words0 = alg.words_by_coldeg(0, k);
        let h_words = h.words_of_degree(k);
        if k < n {
            let idx0 = basis_index(&words0);
            let h_idx = basis_index(&h_words);
            let out_rows = map_matrix_rows(rho, &words0, &h_idx, h_words.len(), alg, h);
            let in_cols: Vec<Vec<Q>> = alg
                .words_by_coldeg(1, k + 1)
                .iter()
                .map(|w| coords(&res.d.apply_word(w, alg, alg), &idx0, words0.len()))
                .filter(|v| v.iter().any(|e| !e.is_zero()))
                .collect();
            let (s, _) = subquotient_classes(&out_rows, words0.len(), &in_cols, &hp.ring);
            if !s.is_zero() {
                return Err(EngineError::validation(format!(
                    "comparison map is not injective on column-0 homology in degree {k}: defect rank {}, torsion {:?}",
                    s.rank, s.torsion
                )));
            }
        }
        if !h_words.is_empty() {
            // surjectivity of ρ̄ over the ring: coker of the value matrix
            let h_idx = basis_index(&h_words);
            let rows = map_matrix_rows(rho, &words0, &h_idx, h_words.len(), alg, h);
            let zero = vec![Q::zero(); h_words.len()];
            let (mi, _) = integerize(&rows, words0.len(), &zero);
            let snf = smith(mi);
            let full = snf.rank == h_words.len();
            let tors = invariant_factors(&snf.d, &hp.ring);
            if !full || !tors.is_empty() {
                return Err(EngineError::validation(format!(
                    "comparison map does not cover the table in degree {k} over the ring{}",
                    tors.first()
                        .map(|t| format!(
                            " (prime {})",
                            least_obstructing_prime(t, &hp.ring)
                        ))
                        .unwrap_or_default()
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;
    use crate::algebra::TableElt;
    use crate::qi;

    fn prim(_h: &Algebra, i: u32) -> Ten {
        Ten::from_slots(vec![Word::letter(i), Word::one()], Q::one())
            .add(&Ten::from_slots(vec![Word::one(), Word::letter(i)], Q::one()))
    }

    /// Λ(x), |x| = 1: one basis element, square zero.
    fn exterior_point(trunc: i64) -> HopfPresentation {
        let h = Algebra::table(
            vec![TableElt { name: "x".into(), deg: 1 }],
            BTreeMap::new(),
            trunc,
        );
        let mut delta = GenMap::linear("delta", 0, 2);
        delta.set(Word::one(), Ten::unit(2));
        let v = prim(&h, 0);
        delta.set(Word::letter(0), v);
        HopfPresentation { h, delta, ring: CoefficientRing::All }
    }

    /// Polynomial algebra on one even generator, degree 2, truncated.
    fn poly_even(trunc: i64) -> HopfPresentation {
        let top = trunc / 2;
        let basis: Vec<TableElt> = (1..=top)
            .map(|k| TableElt { name: format!("a{k}"), deg: 2 * k })
            .collect();
        let mut products = BTreeMap::new();
        for i in 1..=top {
            for j in 1..=top {
                if i + j <= top {
                    products.insert(
                        ((i - 1) as u32, (j - 1) as u32),
                        vec![((i + j - 1) as u32, Q::one())],
                    );
                }
            }
        }
        let h = Algebra::table(basis, products, trunc);
        // binomial coproduct: Δ(a^k) = Σ C(k, i) a^i ⊗ a^{k−i}
        let mut delta = GenMap::linear("delta", 0, 2);
        delta.set(Word::one(), Ten::unit(2));
        for k in 1..=top {
            let mut v = Ten::zero(2);
            for i in 0..=k {
                let l = if i == 0 { Word::one() } else { Word::letter((i - 1) as u32) };
                let r = if k - i == 0 {
                    Word::one()
                } else {
                    Word::letter((k - i - 1) as u32)
                };
                v.upsert(vec![l, r], Q::from_integer(binom(k, i).into()));
            }
            delta.set(Word::letter((k - 1) as u32), v);
        }
        HopfPresentation { h, delta, ring: CoefficientRing::All }
    }

    fn binom(n: i64, k: i64) -> i64 {
        let mut r = 1i64;
        for i in 0..k {
            r = r * (n - i) / (i + 1);
        }
        r
    }

    #[test]
    fn table_validation_accepts_the_models() {
        validate_hopf_table(&exterior_point(5)).unwrap();
        validate_hopf_table(&poly_even(8)).unwrap();
    }

    #[test]
    fn table_validation_rejects_broken_coproducts() {
        let mut hp = exterior_point(5);
        // dropping the 1⊗x term breaks the counit shape
        hp.delta.set(
            Word::letter(0),
            Ten::from_slots(vec![Word::letter(0), Word::one()], Q::one()),
        );
        let e = validate_hopf_table(&hp).unwrap_err();
        assert!(e.to_string().contains("counit"));

        let mut hp2 = poly_even(8);
        // Δ(a2) missing its middle term is not multiplicative
        hp2.delta.set(Word::letter(1), prim(&hp2.h, 1));
        let e2 = validate_hopf_table(&hp2).unwrap_err();
        assert!(e2.to_string().contains("multiplicative"));
    }

    #[test]
    fn exterior_generator_resolves_with_one_generator_per_column() {
        let hp = exterior_point(5);
        let built = build_resolution(&hp, 5).unwrap();
        let gens = built.res.alg.gens();
        let shape: Vec<(i64, i64)> = gens.iter().map(|g| (g.col, g.deg)).collect();
        assert_eq!(shape, vec![(0, 1), (1, 3), (2, 5)]);
        assert_eq!(gens[0].name, "x0");
        // d(e2_5) = x0·e1_3 + e1_3·x0
        let v = built.res.d.apply_word(&Word::letter(2), &built.res.alg, &built.res.alg);
        let expect = Ten::from_word(Word(vec![0, 1])).add(&Ten::from_word(Word(vec![1, 0])));
        assert_eq!(v, expect);
        validate_resolution(&built.res, &built.rho, &hp).unwrap();
    }

    #[test]
    fn polynomial_generator_needs_no_relations() {
        let hp = poly_even(8);
        let built = build_resolution(&hp, 8).unwrap();
        let shape: Vec<(i64, i64)> = built
            .res
            .alg
            .gens()
            .iter()
            .map(|g| (g.col, g.deg))
            .collect();
        assert_eq!(shape, vec![(0, 2)]);
        assert!(built.res.d.is_zero_map());
        validate_resolution(&built.res, &built.rho, &hp).unwrap();
    }

    #[test]
    fn torsion_in_the_indecomposables_is_rejected_with_its_prime() {
        // u·u = 2v: over Z the degree-2 indecomposables are Z/2.
        let basis = vec![
            TableElt { name: "u".into(), deg: 1 },
            TableElt { name: "v".into(), deg: 2 },
        ];
        let mut products = BTreeMap::new();
        products.insert((0u32, 0u32), vec![(1u32, qi(2))]);
        let h = Algebra::table(basis, products, 2);
        // u odd: (u⊗1 + 1⊗u)² = 2v⊗1 + 2·1⊗v, so v must be primitive.
        let mut delta = GenMap::linear("delta", 0, 2);
        delta.set(Word::one(), Ten::unit(2));
        delta.set(Word::letter(0), prim(&h, 0));
        delta.set(Word::letter(1), prim(&h, 1));
        let z = CoefficientRing::localized(&[]).unwrap();
        let hp = HopfPresentation { h, delta, ring: z };
        validate_hopf_table(&hp).unwrap();
        let err = build_resolution(&hp, 2).unwrap_err();
        assert!(err.to_string().contains("prime 2"), "{err}");

        // Inverting 2 removes the obstruction and v becomes decomposable.
        let hp2 = HopfPresentation {
            ring: CoefficientRing::localized(&[2]).unwrap(),
            ..hp
        };
        let built = build_resolution(&hp2, 2).unwrap();
        let cols0: Vec<&str> = built
            .res
            .alg
            .gens()
            .iter()
            .filter(|g| g.col == 0)
            .map(|g| g.name.as_str())
            .collect();
        assert_eq!(cols0, vec!["u0"]);
    }

    #[test]
    fn missing_generator_is_flagged_by_the_validator() {
        let hp = exterior_point(5);
        let built = build_resolution(&hp, 5).unwrap();
        // drop the last generator: H(1, 4) no longer vanishes
        let gens = built.res.alg.gens()[..2].to_vec();
        let alg = Algebra::free(gens, 5);
        let mut d = GenMap::derivation("d", -1);
        d.set(
            Word::letter(1),
            built.res.d.apply_word(&Word::letter(1), &built.res.alg, &built.res.alg),
        );
        let res = Resolution { alg, d };
        let err = validate_resolution(&res, &built.rho, &hp).unwrap_err();
        assert!(err.to_string().contains("column 1"), "{err}");
    }
}
