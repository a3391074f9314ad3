//! Degreewise solvers for the chain-level equations the engine needs:
//! homotopy construction, lifting through a weak equivalence, and
//! rigidification of a comultiplication-like morphism so that its
//! column-preserving part becomes exactly the given coproduct.
//!
//! All solvers work one generator at a time in increasing total degree, so
//! every extension (derivation, morphism, homotopy) only ever consults values
//! already fixed.  Solutions are canonical: free variables are set to zero in
//! the echelon order of the candidate basis.

use std::collections::BTreeMap;

use num_traits::One;

use crate::algebra::{Algebra, Ten, Word};
use crate::error::EngineError;
use crate::linalg::{solve_over_ring, SparseRow, Subspace};
use crate::maps::{apply_on_power, GenMap};
use crate::ring::CoefficientRing;
use crate::Q;

/// A tensor power of an algebra with the induced differential
/// `Σ_i 1⊗…⊗d⊗…⊗1` (Koszul signs included).
#[derive(Clone, Copy)]
pub struct Power<'a> {
    pub alg: &'a Algebra,
    pub rank: usize,
    pub d: &'a GenMap,
}

impl<'a> Power<'a> {
    pub fn new(alg: &'a Algebra, rank: usize, d: &'a GenMap) -> Self {
        Power { alg, rank, d }
    }

    pub fn basis(&self, deg: i64) -> Vec<Vec<Word>> {
        self.alg.power_words(self.rank, deg)
    }

    pub fn d_apply(&self, x: &Ten) -> Ten {
        apply_on_power(self.d, self.rank, x, self.alg)
    }
}

/// Index of a power basis, for coordinatizing tensors.
pub fn power_index(tuples: &[Vec<Word>]) -> BTreeMap<Vec<Word>, usize> {
    tuples
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect()
}

/// Coordinates of `t` over an indexed power basis.  Panics if a term of `t`
/// lies outside the basis — that always indicates a degree bookkeeping bug.
pub fn power_coords(t: &Ten, idx: &BTreeMap<Vec<Word>, usize>, dim: usize) -> Vec<Q> {
    let mut v = vec![Q::from_integer(0.into()); dim];
    for (slots, c) in &t.terms {
        let i = *idx
            .get(slots)
            .unwrap_or_else(|| panic!("tensor term outside the expected graded slot"));
        v[i] = c.clone();
    }
    v
}

pub fn ten_from_power(tuples: &[Vec<Word>], rank: usize, x: &[Q]) -> Ten {
    let mut t = Ten::zero(rank);
    for (i, c) in x.iter().enumerate() {
        if !c.is_zero() {
            t.upsert(tuples[i].clone(), c.clone());
        }
    }
    t
}

use num_traits::Zero;

/// Nonzero values of d∘d on generators, as counterexamples.
pub fn square_zero_residues(alg: &Algebra, d: &GenMap) -> Vec<(Word, Ten)> {
    let mut out = Vec::new();
    for i in 0..alg.gens().len() {
        let w = Word::letter(i as u32);
        let dd = d.apply(&d.apply_word(&w, alg, alg), alg, alg);
        if !dd.is_zero() {
            out.push((w, dd));
        }
    }
    out
}

/// Nonzero values of f∘d_dom − d_cod∘f on generators, for a degree-0
/// morphism `f` into the `cod` power.
pub fn chain_map_residues(
    f: &GenMap,
    dom: &Algebra,
    d_dom: &GenMap,
    cod: &Power,
) -> Vec<(Word, Ten)> {
    let mut out = Vec::new();
    for i in 0..dom.gens().len() {
        let w = Word::letter(i as u32);
        let lhs = f.apply(&d_dom.apply_word(&w, dom, dom), dom, cod.alg);
        let rhs = cod.d_apply(&f.apply_word(&w, dom, cod.alg));
        let r = lhs.sub(&rhs);
        if !r.is_zero() {
            out.push((w, r));
        }
    }
    out
}

/// Merge two derivations of the same degree into one (value-wise sum).
pub fn add_derivations(name: impl Into<String>, a: &GenMap, b: &GenMap) -> GenMap {
    assert_eq!(a.deg, b.deg, "cannot merge derivations of unequal degree");
    let mut m = GenMap::derivation(name, a.deg);
    let mut keys: Vec<&Word> = a.vals.keys().collect();
    keys.extend(b.vals.keys());
    keys.sort();
    keys.dedup();
    for k in keys {
        let zero = Ten::zero(1);
        let va = a.vals.get(k).unwrap_or(&zero);
        let vb = b.vals.get(k).unwrap_or(&zero);
        m.set(k.clone(), va.add(vb));
    }
    m
}

/// Witness that a degreewise solve has no solution: either the residue class
/// is nonzero over the field of fractions, or a solution exists only after
/// inverting `prime`.
#[derive(Debug, Clone)]
pub struct Obstruction {
    pub generator: String,
    pub deg: i64,
    /// Residue reduced against the boundary space: a canonical representative
    /// of the obstructing class (zero when the failure is integrality only).
    pub residue: String,
    pub prime: Option<u64>,
    pub context: String,
}

impl Obstruction {
    pub fn message(&self) -> String {
        match self.prime {
            Some(p) => format!(
                "{} at generator {} (total degree {}): not R-integral: prime {}",
                self.context, self.generator, self.deg, p
            ),
            None => format!(
                "{} at generator {} (total degree {}): class {} is not a boundary",
                self.context, self.generator, self.deg, self.residue
            ),
        }
    }
}

impl From<Obstruction> for EngineError {
    fn from(o: Obstruction) -> Self {
        EngineError::Obstruction(o.message())
    }
}

/// Reduce `residue` against the span of `d(candidates)` to get a canonical
/// class representative for obstruction reports.
fn reduced_residue(cod: &Power, cand_deg: i64, residue: &Ten, render: bool) -> String {
    if !render {
        return String::new();
    }
    let tgt = cod.basis(cand_deg - 1);
    let idx = power_index(&tgt);
    let mut img = Subspace::empty(tgt.len());
    for c in cod.basis(cand_deg) {
        let dc = cod.d_apply(&Ten::from_slots(c, Q::one()));
        if !dc.is_zero() {
            img.insert(&power_coords(&dc, &idx, tgt.len()));
        }
    }
    let red = img.reduce(&power_coords(residue, &idx, tgt.len()));
    render_power(cod.alg, &ten_from_power(&tgt, cod.rank, &red))
}

fn render_power(alg: &Algebra, t: &Ten) -> String {
    alg.render_ten(t)
}

/// Generator order for degreewise solves: increasing total degree, then
/// increasing column, then input order.
pub fn ascending_generators(alg: &Algebra) -> Vec<u32> {
    let mut idx: Vec<u32> = (0..alg.gens().len() as u32).collect();
    idx.sort_by_key(|&i| (alg.letter_deg(i), alg.letter_col(i), i));
    idx
}

pub struct HomotopyProblem<'a> {
    pub dom: &'a Algebra,
    pub d_dom: &'a GenMap,
    pub cod: Power<'a>,
    pub s_name: String,
    pub s_deg: i64,
    /// +1 solves the chain-homotopy law  f − g = d∘s + s∘d,
    /// −1 solves the boundary form       diff = d∘s − s∘d.
    pub sd_sign: i64,
    pub ring: &'a CoefficientRing,
}

/// Construct a derivation homotopy `s` with endpoint maps `(f_end, g_end)`
/// such that on every generator `v`
///   d_cod(s(v)) = diff(v) − sd_sign · s(d_dom v).
/// `diff` carries the generator values of the map being trivialized; `shape`
/// restricts the candidate tuples allowed in `s(v)`.
pub fn find_homotopy(
    p: &HomotopyProblem,
    f_end: &GenMap,
    g_end: &GenMap,
    diff: &GenMap,
    shape: &dyn Fn(&Word, &[Word]) -> bool,
) -> Result<GenMap, Obstruction> {
    let mut s = GenMap::homotopy(p.s_name.clone(), p.s_deg, f_end.clone(), g_end.clone());
    let sd = Q::from_integer(p.sd_sign.into());
    for i in ascending_generators(p.dom) {
        let v = Word::letter(i);
        let vdeg = p.dom.letter_deg(i);
        let dv = p.d_dom.apply_word(&v, p.dom, p.dom);
        let mut rhs = diff.apply_word(&v, p.dom, p.cod.alg);
        if !dv.is_zero() {
            rhs = rhs.sub(&s.apply(&dv, p.dom, p.cod.alg).scale(&sd));
        }
        if rhs.is_zero() {
            continue;
        }
        let cands: Vec<Vec<Word>> = p
            .cod
            .basis(vdeg + p.s_deg)
            .into_iter()
            .filter(|c| shape(&v, c))
            .collect();
        let tgt = p.cod.basis(vdeg + p.s_deg - 1);
        let idx = power_index(&tgt);
        let mut rows: Vec<SparseRow> = vec![SparseRow::new(); tgt.len()];
        for (j, c) in cands.iter().enumerate() {
            let dc = p.cod.d_apply(&Ten::from_slots(c.clone(), Q::one()));
            for (slots, coef) in &dc.terms {
                rows[idx[slots]].insert(j, coef.clone());
            }
        }
        let b = power_coords(&rhs, &idx, tgt.len());
        match solve_over_ring(&rows, cands.len(), &b, p.ring) {
            Ok(Some(x)) => {
                let val = ten_from_power(&cands, p.cod.rank, &x);
                if !val.is_zero() {
                    s.set(v, val);
                }
            }
            Ok(None) => {
                return Err(Obstruction {
                    generator: p.dom.letter_name(i).to_string(),
                    deg: vdeg,
                    residue: reduced_residue(&p.cod, vdeg + p.s_deg, &rhs, true),
                    prime: None,
                    context: format!("homotopy fill for {}", p.s_name),
                })
            }
            Err(q) => {
                return Err(Obstruction {
                    generator: p.dom.letter_name(i).to_string(),
                    deg: vdeg,
                    residue: String::new(),
                    prime: Some(q),
                    context: format!("homotopy fill for {}", p.s_name),
                })
            }
        }
    }
    Ok(s)
}

/// Homotopy extension with explicit endpoint maps, for witnesses still under
/// construction:  s(l₁…l_k) = Σ_i ±f(pre)·s(l_i)·g(post)  with the Koszul
/// sign (−1)^{|s|·|pre|}.
fn homotopy_extend(
    vals: &BTreeMap<Word, Ten>,
    s_deg: i64,
    rank: usize,
    fe: &GenMap,
    ge: &GenMap,
    w: &Word,
    dom: &Algebra,
    cod: &Algebra,
) -> Ten {
    let mut acc = Ten::zero(rank);
    let mut predeg = 0i64;
    for (i, &l) in w.0.iter().enumerate() {
        if let Some(v) = vals.get(&Word::letter(l)) {
            let sign = if (s_deg * predeg) % 2 == 0 {
                Q::one()
            } else {
                -Q::one()
            };
            let pre = Word(w.0[..i].to_vec());
            let post = Word(w.0[i + 1..].to_vec());
            let fpre = fe.apply_word(&pre, dom, cod);
            let gpost = ge.apply_word(&post, dom, cod);
            acc = acc.add(&fpre.mul(v, cod).mul(&gpost, cod).scale(&sign));
        }
        predeg += dom.letter_deg(l);
    }
    acc
}

fn homotopy_extend_lin(
    vals: &BTreeMap<Word, Ten>,
    s_deg: i64,
    rank: usize,
    fe: &GenMap,
    ge: &GenMap,
    x: &Ten,
    dom: &Algebra,
    cod: &Algebra,
) -> Ten {
    let mut acc = Ten::zero(rank);
    for (slots, c) in &x.terms {
        acc = acc.add(&homotopy_extend(vals, s_deg, rank, fe, ge, &slots[0], dom, cod).scale(c));
    }
    acc
}

pub struct LiftProblem<'a> {
    pub dom: &'a Algebra,
    pub d_dom: &'a GenMap,
    /// Intermediate codomain of the lift being built.
    pub c: Power<'a>,
    /// Target of the comparison maps.
    pub a: Power<'a>,
    /// Comparison morphism dom → a-power (generator values).
    pub psi: &'a GenMap,
    pub ring: &'a CoefficientRing,
}

/// Lift `psi` through the weak equivalence `phi : C → A`: build a chain
/// morphism `f : dom → C` and a homotopy witness `t` with
///   phi(f(v)) − psi(v) = d_A(t(v)) + t(d_dom v).
/// Tries the strict solution t(v) = 0 first, so when `phi∘f = psi` is
/// solvable on the nose the returned homotopy is zero.
pub fn lift_through_weak_equivalence(
    p: &LiftProblem,
    phi: &dyn Fn(&Ten) -> Ten,
    shape: &dyn Fn(&Word, &[Word]) -> bool,
    f_name: &str,
) -> Result<(GenMap, GenMap), Obstruction> {
    let mut f = GenMap::morphism(f_name, p.c.rank, false);
    f.set(Word::one(), Ten::unit(p.c.rank));
    let mut t_vals: BTreeMap<Word, Ten> = BTreeMap::new();
    // Evaluated composite phi∘f, kept in step with f for the homotopy
    // extension's left endpoint.
    let mut phi_f = GenMap::morphism(format!("{}~cmp", f_name), p.a.rank, false);
    phi_f.set(Word::one(), Ten::unit(p.a.rank));

    for i in ascending_generators(p.dom) {
        let v = Word::letter(i);
        let vdeg = p.dom.letter_deg(i);
        let dv = p.d_dom.apply_word(&v, p.dom, p.dom);

        // f(d v), t(d v), psi(v) are all known.
        let f_dv = f.apply(&dv, p.dom, p.c.alg);
        let t_dv = homotopy_extend_lin(
            &t_vals, 1, p.a.rank, &phi_f, p.psi, &dv, p.dom, p.a.alg,
        );
        let psi_v = p.psi.apply_word(&v, p.dom, p.a.alg);
        let rhs2 = psi_v.add(&t_dv);

        let f_cands: Vec<Vec<Word>> = p
            .c
            .basis(vdeg)
            .into_iter()
            .filter(|c| shape(&v, c))
            .collect();
        let c_tgt = p.c.basis(vdeg - 1);
        let c_idx = power_index(&c_tgt);
        let a_tgt = p.a.basis(vdeg);
        let a_idx = power_index(&a_tgt);

        // Chain block and comparison block, with f-columns shared.
        let nrows = c_tgt.len() + a_tgt.len();
        let mut rows: Vec<SparseRow> = vec![SparseRow::new(); nrows];
        let mut phi_cols: Vec<Ten> = Vec::with_capacity(f_cands.len());
        for (j, c) in f_cands.iter().enumerate() {
            let cand = Ten::from_slots(c.clone(), Q::one());
            let dc = p.c.d_apply(&cand);
            for (slots, coef) in &dc.terms {
                rows[c_idx[slots]].insert(j, coef.clone());
            }
            let pc = phi(&cand);
            for (slots, coef) in &pc.terms {
                rows[c_tgt.len() + a_idx[slots]].insert(j, coef.clone());
            }
            phi_cols.push(pc);
        }
        let mut b = power_coords(&f_dv, &c_idx, c_tgt.len());
        b.extend(power_coords(&rhs2, &a_idx, a_tgt.len()));

        // Strict pass: t(v) = 0.
        let strict = solve_over_ring(&rows, f_cands.len(), &b, p.ring);
        let (fx, tx) = match strict {
            Ok(Some(x)) => (x, Vec::new()),
            _ => {
                let t_cands = p.a.basis(vdeg + 1);
                let ncols = f_cands.len() + t_cands.len();
                let mut jrows = rows.clone();
                for (j, c) in t_cands.iter().enumerate() {
                    let da = p.a.d_apply(&Ten::from_slots(c.clone(), Q::one()));
                    for (slots, coef) in &da.terms {
                        jrows[c_tgt.len() + a_idx[slots]]
                            .insert(f_cands.len() + j, -coef.clone());
                    }
                }
                match solve_over_ring(&jrows, ncols, &b, p.ring) {
                    Ok(Some(x)) => {
                        let (fx, tx) = x.split_at(f_cands.len());
                        (
                            fx.to_vec(),
                            t_cands
                                .iter()
                                .zip(tx.iter())
                                .filter(|(_, c)| !c.is_zero())
                                .map(|(w, c)| (w.clone(), c.clone()))
                                .collect(),
                        )
                    }
                    Ok(None) => {
                        return Err(Obstruction {
                            generator: p.dom.letter_name(i).to_string(),
                            deg: vdeg,
                            residue: reduced_residue(&p.a, vdeg + 1, &rhs2, true),
                            prime: None,
                            context: format!("lift of {} through the comparison map", f_name),
                        })
                    }
                    Err(q) => {
                        return Err(Obstruction {
                            generator: p.dom.letter_name(i).to_string(),
                            deg: vdeg,
                            residue: String::new(),
                            prime: Some(q),
                            context: format!("lift of {} through the comparison map", f_name),
                        })
                    }
                }
            }
        };
        let fv = ten_from_power(&f_cands, p.c.rank, &fx);
        let pfv = phi(&fv);
        f.set(v.clone(), fv);
        phi_f.set(v.clone(), pfv);
        if !tx.is_empty() {
            let mut tv = Ten::zero(p.a.rank);
            for (w, c) in tx {
                tv.upsert(w, c);
            }
            t_vals.insert(v, tv);
        }
    }

    let mut t = GenMap::homotopy(format!("{}~htpy", f_name), 1, phi_f, p.psi.clone());
    for (k, v) in t_vals {
        t.set(k, v);
    }
    Ok((f, t))
}

/// Deform the chain morphism `f` (rank 2) by a homotopy so its
/// column-preserving part becomes exactly `delta`.  Returns `(g, s)` with
///   g = f − d∘s − s∘d,   g₀ = delta,
/// where `s` raises the column filtration by exactly 1.  The existence of
/// such an `s` is a property of the filtration; if some stage has no
/// solution the defect class is reported instead of silently widening the
/// column shape.
pub fn rigidify(
    dom: &Algebra,
    d_full: &GenMap,
    f: &GenMap,
    delta: &GenMap,
    ring: &CoefficientRing,
    s_name: &str,
) -> Result<(GenMap, GenMap), Obstruction> {
    let cod = Power::new(dom, 2, d_full);
    let mut g = GenMap::morphism(format!("{}~rigid", f.name), 2, false);
    g.set(Word::one(), Ten::unit(2));
    let mut s_vals: BTreeMap<Word, Ten> = BTreeMap::new();

    let col_part = |t: &Ten, col: i64| -> Ten {
        let mut out = Ten::zero(2);
        for (slots, c) in &t.terms {
            let cs: i64 = slots.iter().map(|w| dom.word_col(w)).sum();
            if cs == col {
                out.upsert(slots.clone(), c.clone());
            }
        }
        out
    };

    for i in ascending_generators(dom) {
        let v = Word::letter(i);
        let vdeg = dom.letter_deg(i);
        let vcol = dom.letter_col(i);
        let dv = d_full.apply_word(&v, dom, dom);
        let s_dv = homotopy_extend_lin(&s_vals, 1, 2, f, &g, &dv, dom, dom);
        let known = f.apply_word(&v, dom, dom).sub(&s_dv);
        let defect = col_part(&known, vcol).sub(&delta.apply_word(&v, dom, dom));

        let mut sv = Ten::zero(2);
        if !defect.is_zero() {
            let cands: Vec<Vec<Word>> = dom
                .power_words(2, vdeg + 1)
                .into_iter()
                .filter(|c| {
                    c.iter().map(|w| dom.word_col(w)).sum::<i64>() == vcol + 1
                })
                .collect();
            let tgt: Vec<Vec<Word>> = dom
                .power_words(2, vdeg)
                .into_iter()
                .filter(|c| c.iter().map(|w| dom.word_col(w)).sum::<i64>() == vcol)
                .collect();
            let idx = power_index(&tgt);
            let mut rows: Vec<SparseRow> = vec![SparseRow::new(); tgt.len()];
            for (j, c) in cands.iter().enumerate() {
                let dc = col_part(&cod.d_apply(&Ten::from_slots(c.clone(), Q::one())), vcol);
                for (slots, coef) in &dc.terms {
                    rows[idx[slots]].insert(j, coef.clone());
                }
            }
            let b = power_coords(&defect, &idx, tgt.len());
            match solve_over_ring(&rows, cands.len(), &b, ring) {
                Ok(Some(x)) => sv = ten_from_power(&cands, 2, &x),
                Ok(None) => {
                    return Err(Obstruction {
                        generator: dom.letter_name(i).to_string(),
                        deg: vdeg,
                        residue: render_power(dom, &defect),
                        prime: None,
                        context: "rigidification of the lifted comultiplication".into(),
                    })
                }
                Err(q) => {
                    return Err(Obstruction {
                        generator: dom.letter_name(i).to_string(),
                        deg: vdeg,
                        residue: String::new(),
                        prime: Some(q),
                        context: "rigidification of the lifted comultiplication".into(),
                    })
                }
            }
        }
        let gv = known.sub(&cod.d_apply(&sv));
        debug_assert!(
            col_part(&gv, vcol)
                .sub(&delta.apply_word(&v, dom, dom))
                .is_zero(),
            "rigidified value must agree with the coproduct in the top column"
        );
        g.set(v.clone(), gv);
        if !sv.is_zero() {
            s_vals.insert(v, sv);
        }
    }

    let mut s = GenMap::homotopy(s_name, 1, f.clone(), g.clone());
    for (k, v) in s_vals {
        s.set(k, v);
    }
    Ok((g, s))
}
