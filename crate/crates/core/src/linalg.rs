//! Exact linear algebra: sparse Gauss–Jordan over Q and Smith normal form
//! over Z, plus solving with coefficients constrained to a subring of Q.

use crate::ring::CoefficientRing;
use crate::Q;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

/// Sparse row: column index -> nonzero rational entry.
pub type SparseRow = BTreeMap<usize, Q>;

/// Reduced row echelon data for `A x = b`: canonical particular solution
/// (free variables zero) and a kernel basis, or `None` when inconsistent.
pub fn solve_q(rows: &[SparseRow], ncols: usize, b: &[Q]) -> Option<(Vec<Q>, Vec<Vec<Q>>)> {
    assert_eq!(rows.len(), b.len());
    let mut work: Vec<(SparseRow, Q)> = rows
        .iter()
        .zip(b.iter())
        .map(|(r, c)| (r.clone(), c.clone()))
        .filter(|(r, c)| !r.is_empty() || !c.is_zero())
        .collect();
    let mut pivot_of_col: BTreeMap<usize, usize> = BTreeMap::new();
    let mut used: Vec<bool> = vec![false; work.len()];
    for c in 0..ncols {
        // choose the sparsest available row with a nonzero entry in column c
        let mut best: Option<(usize, usize)> = None;
        for (i, (r, _)) in work.iter().enumerate() {
            if used[i] || !r.contains_key(&c) {
                continue;
            }
            let n = r.len();
            if best.map_or(true, |(_, bn)| n < bn) {
                best = Some((i, n));
            }
        }
        let Some((pi, _)) = best else { continue };
        used[pi] = true;
        pivot_of_col.insert(c, pi);
        let inv = {
            let p = work[pi].0.get(&c).unwrap().clone();
            p.recip()
        };
        if !inv.is_one() {
            let (r, rhs) = &mut work[pi];
            for v in r.values_mut() {
                *v = &*v * &inv;
            }
            *rhs = &*rhs * &inv;
        }
        let (pivot_row, pivot_rhs) = work[pi].clone();
        for (i, (r, rhs)) in work.iter_mut().enumerate() {
            if i == pi {
                continue;
            }
            let Some(f) = r.get(&c).cloned() else { continue };
            for (col, v) in &pivot_row {
                let delta = &f * v;
                match r.entry(*col) {
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        let nv = &*e.get() - &delta;
                        if nv.is_zero() {
                            e.remove();
                        } else {
                            *e.get_mut() = nv;
                        }
                    }
                    std::collections::btree_map::Entry::Vacant(e) => {
                        if !delta.is_zero() {
                            e.insert(-delta);
                        }
                    }
                }
            }
            *rhs = &*rhs - &(&f * &pivot_rhs);
        }
    }
    for (i, (r, rhs)) in work.iter().enumerate() {
        if !used[i] && r.is_empty() && !rhs.is_zero() {
            return None;
        }
    }
    let mut x = vec![Q::zero(); ncols];
    for (c, pi) in &pivot_of_col {
        x[*c] = work[*pi].1.clone();
    }
    let mut kernel = Vec::new();
    for f in 0..ncols {
        if pivot_of_col.contains_key(&f) {
            continue;
        }
        let mut v = vec![Q::zero(); ncols];
        v[f] = Q::one();
        for (c, pi) in &pivot_of_col {
            if let Some(e) = work[*pi].0.get(&f) {
                v[*c] = -e.clone();
            }
        }
        kernel.push(v);
    }
    Some((x, kernel))
}

pub fn rank_q(rows: &[SparseRow], ncols: usize) -> usize {
    let b = vec![Q::zero(); rows.len()];
    match solve_q(rows, ncols, &b) {
        Some((_, kernel)) => ncols - kernel.len(),
        None => unreachable!("homogeneous system is always consistent"),
    }
}

/// Smith normal form `U A V = diag(d)` with unimodular `U`, `V` and
/// `d[0] | d[1] | …`, entries nonnegative.
pub struct Snf {
    pub d: Vec<BigInt>,
    pub u: Vec<Vec<BigInt>>,
    pub v: Vec<Vec<BigInt>>,
    pub rank: usize,
}

fn ident(n: usize) -> Vec<Vec<BigInt>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect()
}

pub fn smith(mut a: Vec<Vec<BigInt>>) -> Snf {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let mut u = ident(m);
    let mut v = ident(n);

    fn clear_from(a: &mut Vec<Vec<BigInt>>, u: &mut Vec<Vec<BigInt>>, v: &mut Vec<Vec<BigInt>>, start: usize) {
        let m = a.len();
        let n = if m == 0 { 0 } else { a[0].len() };
        let mut t = start;
        while t < m.min(n) {
            // locate minimal-magnitude nonzero entry in the trailing block
            let mut pos: Option<(usize, usize)> = None;
            for i in t..m {
                for j in t..n {
                    if !a[i][j].is_zero()
                        && pos.map_or(true, |(pi, pj)| a[i][j].abs() < a[pi][pj].abs())
                    {
                        pos = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = pos else { return };
            a.swap(t, pi);
            u.swap(t, pi);
            if pj != t {
                for row in a.iter_mut() {
                    row.swap(t, pj);
                }
                for row in v.iter_mut() {
                    row.swap(t, pj);
                }
            }
            let mut dirty = true;
            while dirty {
                dirty = false;
                for i in t + 1..m {
                    if a[i][t].is_zero() {
                        continue;
                    }
                    let q = a[i][t].div_floor(&a[t][t]);
                    if !q.is_zero() {
                        for j in 0..n {
                            let delta = &q * &a[t][j];
                            a[i][j] -= delta;
                        }
                        for j in 0..u[0].len() {
                            let delta = &q * &u[t][j];
                            u[i][j] -= delta;
                        }
                    }
                    if !a[i][t].is_zero() {
                        // remainder is strictly smaller; promote it to pivot
                        a.swap(t, i);
                        u.swap(t, i);
                        dirty = true;
                    }
                }
                for j in t + 1..n {
                    if a[t][j].is_zero() {
                        continue;
                    }
                    let q = a[t][j].div_floor(&a[t][t]);
                    if !q.is_zero() {
                        for i in 0..m {
                            let delta = &q * &a[i][t];
                            a[i][j] -= delta;
                        }
                        for i in 0..v.len() {
                            let delta = &q * &v[i][t];
                            v[i][j] -= delta;
                        }
                    }
                    if !a[t][j].is_zero() {
                        for row in a.iter_mut() {
                            row.swap(t, j);
                        }
                        for row in v.iter_mut() {
                            row.swap(t, j);
                        }
                        dirty = true;
                    }
                }
            }
            t += 1;
        }
    }

    clear_from(&mut a, &mut u, &mut v, 0);
    let r0 = (0..m.min(n)).take_while(|&i| !a[i][i].is_zero()).count();
    // enforce the divisibility chain
    let mut i = 0;
    while i < r0 {
        let mut ok = true;
        for j in i + 1..r0 {
            if !(a[j][j].clone() % &a[i][i]).is_zero() {
                // fold row j into row i, then re-diagonalize the tail
                for k in 0..n {
                    let add = a[j][k].clone();
                    a[i][k] += add;
                }
                for k in 0..m {
                    let add = u[j][k].clone();
                    u[i][k] += add;
                }
                clear_from(&mut a, &mut u, &mut v, i);
                ok = false;
                break;
            }
        }
        if ok {
            i += 1;
        }
    }
    let rank = (0..m.min(n)).take_while(|&i| !a[i][i].is_zero()).count();
    let mut d = Vec::with_capacity(m.min(n));
    for i in 0..m.min(n) {
        if a[i][i].is_negative() {
            for j in 0..n {
                a[i][j] = -a[i][j].clone();
            }
            for j in 0..m {
                u[i][j] = -u[i][j].clone();
            }
        }
        d.push(a[i][i].clone());
    }
    Snf { d, u, v, rank }
}

fn mat_vec(a: &[Vec<BigInt>], x: &[BigInt]) -> Vec<BigInt> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
        .collect()
}

/// Clear the denominators of a sparse rational system row by row, returning
/// dense integer `A`, `b` with the same solution set.
pub fn integerize(rows: &[SparseRow], ncols: usize, b: &[Q]) -> (Vec<Vec<BigInt>>, Vec<BigInt>) {
    let mut ai = Vec::with_capacity(rows.len());
    let mut bi = Vec::with_capacity(rows.len());
    for (r, rb) in rows.iter().zip(b) {
        let mut l = rb.denom().clone();
        for v in r.values() {
            l = l.lcm(v.denom());
        }
        let mut dense = vec![BigInt::zero(); ncols];
        for (c, v) in r {
            dense[*c] = v.numer() * (&l / v.denom());
        }
        ai.push(dense);
        bi.push(rb.numer() * (&l / rb.denom()));
    }
    (ai, bi)
}

/// Solve `A x = b` with all coordinates of `x` required to lie in the ring.
///
/// * `Ok(Some(x))` — an R-integral solution (canonical: SNF free part zero,
///   or the Gauss–Jordan particular solution when it is already integral);
/// * `Ok(None)` — no solution over Q at all;
/// * `Err(p)` — solvable over Q but not over R; `p` is a witness prime that
///   divides every achievable denominator.
pub fn solve_over_ring(
    rows: &[SparseRow],
    ncols: usize,
    b: &[Q],
    ring: &CoefficientRing,
) -> Result<Option<Vec<Q>>, u64> {
    let Some((x, kernel)) = solve_q(rows, ncols, b) else {
        return Ok(None);
    };
    if x.iter().all(|c| ring.contains(c)) {
        return Ok(Some(x));
    }
    if matches!(ring, CoefficientRing::All) {
        return Ok(Some(x));
    }
    if kernel.is_empty() {
        // unique solution, already seen to be non-integral
        let p = x
            .iter()
            .filter_map(|c| ring.violating_prime(c))
            .min()
            .expect("non-integral unique solution must have a violating prime");
        return Err(p);
    }
    let (ai, bi) = integerize(rows, ncols, b);
    let snf = smith(ai);
    let ub = mat_vec(&snf.u, &bi);
    let mut z = vec![Q::zero(); ncols];
    let mut obstruction: Option<u64> = None;
    for i in 0..snf.rank.min(ncols) {
        let zi = Q::new(ub[i].clone(), snf.d[i].clone());
        if let Some(p) = ring.violating_prime(&zi) {
            obstruction = Some(match obstruction {
                Some(q) => q.min(p),
                None => p,
            });
        }
        z[i] = zi;
    }
    if let Some(p) = obstruction {
        return Err(p);
    }
    // x = V z with the free coordinates of z set to zero
    let mut out = vec![Q::zero(); ncols];
    for (i, row) in snf.v.iter().enumerate() {
        let mut acc = Q::zero();
        for (j, e) in row.iter().enumerate() {
            if !z[j].is_zero() && !e.is_zero() {
                acc += Q::from(e.clone()) * &z[j];
            }
        }
        out[i] = acc;
    }
    debug_assert!(out.iter().all(|c| ring.contains(c)));
    Ok(Some(out))
}

/// Basis of the right kernel of an integer matrix with `n` columns: the
/// columns of `V` past the rank in `U A V = D`. The lattice is saturated.
pub fn integer_kernel(a: Vec<Vec<BigInt>>, n: usize) -> Vec<Vec<BigInt>> {
    if a.is_empty() {
        return (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| if i == j { BigInt::one() } else { BigInt::zero() })
                    .collect()
            })
            .collect();
    }
    assert_eq!(a[0].len(), n);
    let snf = smith(a);
    (snf.rank..n)
        .map(|j| snf.v.iter().map(|row| row[j].clone()).collect())
        .collect()
}

/// Inverse of a unimodular integer matrix (computed over Q; entries are
/// integers exactly because the determinant is ±1).
pub fn inv_unimodular(u: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = u.len();
    let mut cols: Vec<Vec<BigInt>> = vec![vec![BigInt::zero(); n]; n];
    for j in 0..n {
        let rows: Vec<SparseRow> = u
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, e)| !e.is_zero())
                    .map(|(c, e)| (c, Q::from(e.clone())))
                    .collect()
            })
            .collect();
        let mut b = vec![Q::zero(); n];
        b[j] = Q::one();
        let (x, _) = solve_q(&rows, n, &b).expect("unimodular matrix is invertible");
        for (i, e) in x.into_iter().enumerate() {
            assert!(e.denom().is_one(), "unimodular inverse must be integral");
            cols[i][j] = e.numer().clone();
        }
    }
    cols
}

/// A subspace of Q^n kept in reduced row echelon form, supporting normal
/// forms modulo the subspace. Pivot coordinates of a reduced vector are zero,
/// so the normal form is the canonical representative of the coset.
#[derive(Debug, Clone)]
pub struct Subspace {
    rows: Vec<SparseRow>,
    pivots: Vec<usize>,
    pub ncols: usize,
}

impl Subspace {
    pub fn empty(ncols: usize) -> Self {
        Subspace { rows: Vec::new(), pivots: Vec::new(), ncols }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn pivot_cols(&self) -> &[usize] {
        &self.pivots
    }

    /// Insert a vector; returns true if it enlarged the subspace.
    pub fn insert(&mut self, v: &[Q]) -> bool {
        assert_eq!(v.len(), self.ncols);
        let mut w: SparseRow = v
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero())
            .map(|(c, e)| (c, e.clone()))
            .collect();
        self.reduce_row(&mut w);
        let Some((&lead, _)) = w.iter().next() else {
            return false;
        };
        let inv = w[&lead].clone().recip();
        if !inv.is_one() {
            for e in w.values_mut() {
                *e = &*e * &inv;
            }
        }
        // keep existing rows fully reduced against the new one
        for row in &mut self.rows {
            if let Some(f) = row.get(&lead).cloned() {
                for (c, e) in &w {
                    let delta = &f * e;
                    match row.entry(*c) {
                        std::collections::btree_map::Entry::Occupied(mut o) => {
                            let nv = &*o.get() - &delta;
                            if nv.is_zero() {
                                o.remove();
                            } else {
                                *o.get_mut() = nv;
                            }
                        }
                        std::collections::btree_map::Entry::Vacant(sl) => {
                            if !delta.is_zero() {
                                sl.insert(-delta);
                            }
                        }
                    }
                }
            }
        }
        let at = self.pivots.partition_point(|&p| p < lead);
        self.pivots.insert(at, lead);
        self.rows.insert(at, w);
        true
    }

    fn reduce_row(&self, w: &mut SparseRow) {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let Some(f) = w.get(&p).cloned() else { continue };
            for (c, e) in row {
                let delta = &f * e;
                match w.entry(*c) {
                    std::collections::btree_map::Entry::Occupied(mut o) => {
                        let nv = &*o.get() - &delta;
                        if nv.is_zero() {
                            o.remove();
                        } else {
                            *o.get_mut() = nv;
                        }
                    }
                    std::collections::btree_map::Entry::Vacant(sl) => {
                        if !delta.is_zero() {
                            sl.insert(-delta);
                        }
                    }
                }
            }
        }
    }

    /// Canonical normal form of `v` modulo the subspace.
    pub fn reduce(&self, v: &[Q]) -> Vec<Q> {
        let mut w: SparseRow = v
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero())
            .map(|(c, e)| (c, e.clone()))
            .collect();
        self.reduce_row(&mut w);
        let mut out = vec![Q::zero(); self.ncols];
        for (c, e) in w {
            out[c] = e;
        }
        out
    }

    pub fn contains_vec(&self, v: &[Q]) -> bool {
        self.reduce(v).iter().all(|e| e.is_zero())
    }
}

/// Invariant factors of the cokernel of `A` over the ring: SNF diagonal with
/// invertible prime factors stripped, entries ≤ 1 dropped.
pub fn invariant_factors(d: &[BigInt], ring: &CoefficientRing) -> Vec<BigInt> {
    if matches!(ring, CoefficientRing::All) {
        return Vec::new();
    }
    let mut out = Vec::new();
    for f in d {
        if f.is_zero() {
            continue;
        }
        let mut f = f.abs();
        if let CoefficientRing::Localized(ps) = ring {
            for p in ps {
                let pb = BigInt::from(*p);
                while (&f % &pb).is_zero() {
                    f /= &pb;
                }
            }
        }
        if f > BigInt::one() {
            out.push(f);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qi;

    fn row(entries: &[(usize, i64)]) -> SparseRow {
        entries.iter().map(|(c, v)| (*c, qi(*v))).collect()
    }

    #[test]
    fn gauss_jordan_particular_and_kernel() {
        // 2x + 3y = 1
        let rows = vec![row(&[(0, 2), (1, 3)])];
        let (x, k) = solve_q(&rows, 2, &[qi(1)]).unwrap();
        assert_eq!(x, vec![Q::new(1.into(), 2.into()), qi(0)]);
        assert_eq!(k, vec![vec![Q::new((-3).into(), 2.into()), qi(1)]]);
        // inconsistent
        let rows = vec![row(&[(0, 1)]), row(&[(0, 1)])];
        assert!(solve_q(&rows, 1, &[qi(0), qi(1)]).is_none());
    }

    #[test]
    fn integral_solution_found_despite_fractional_echelon_form() {
        // canonical Q-solution of 2x + 3y = 1 is (1/2, 0); over Z the solver
        // must still find one, e.g. (-1, 1) up to transforms
        let rows = vec![row(&[(0, 2), (1, 3)])];
        let ring = CoefficientRing::localized(&[]).unwrap();
        let x = solve_over_ring(&rows, 2, &[qi(1)], &ring).unwrap().unwrap();
        assert!(x.iter().all(|c| ring.contains(c)));
        assert_eq!(&x[0] * qi(2) + &x[1] * qi(3), qi(1));
    }

    #[test]
    fn obstruction_prime_reported() {
        let rows = vec![row(&[(0, 2)])];
        let ring = CoefficientRing::localized(&[]).unwrap();
        assert_eq!(solve_over_ring(&rows, 1, &[qi(1)], &ring), Err(2));
        let ring2 = CoefficientRing::localized(&[2]).unwrap();
        let x = solve_over_ring(&rows, 1, &[qi(1)], &ring2).unwrap().unwrap();
        assert_eq!(x, vec![Q::new(1.into(), 2.into())]);
        // 6x = 3 over Z[1/3]: x = 1/2, witness 2
        let rows = vec![row(&[(0, 6)])];
        let ring3 = CoefficientRing::localized(&[3]).unwrap();
        assert_eq!(solve_over_ring(&rows, 1, &[qi(3)], &ring3), Err(2));
    }

    #[test]
    fn smith_normal_form_diagonal() {
        let a: Vec<Vec<BigInt>> = vec![
            vec![2.into(), 4.into()],
            vec![6.into(), 8.into()],
        ];
        let snf = smith(a.clone());
        assert_eq!(snf.d, vec![BigInt::from(2), BigInt::from(4)]);
        assert_eq!(snf.rank, 2);
        // verify U A V = diag(d)
        let m = 2;
        for i in 0..m {
            for j in 0..m {
                let mut acc = BigInt::from(0);
                for k in 0..m {
                    for l in 0..m {
                        acc += &snf.u[i][k] * &a[k][l] * &snf.v[l][j];
                    }
                }
                let expect = if i == j { snf.d[i].clone() } else { BigInt::from(0) };
                assert_eq!(acc, expect);
            }
        }
    }

    #[test]
    fn subspace_normal_forms() {
        let mut s = Subspace::empty(3);
        assert!(s.insert(&[qi(1), qi(2), qi(0)]));
        assert!(s.insert(&[qi(0), qi(1), qi(1)]));
        assert!(!s.insert(&[qi(1), qi(3), qi(1)])); // dependent
        assert_eq!(s.dim(), 2);
        assert_eq!(s.pivot_cols(), &[0, 1]);
        // reduce (1,0,0): minus row1 gives (0,-2,0); plus 2*row2 gives (0,0,2)
        assert_eq!(s.reduce(&[qi(1), qi(0), qi(0)]), vec![qi(0), qi(0), qi(2)]);
        assert!(s.contains_vec(&[qi(2), qi(5), qi(1)]));
        // normal form is coset-invariant
        let a = s.reduce(&[qi(3), qi(1), qi(4)]);
        let b = s.reduce(&[qi(4), qi(3), qi(4)]); // differs by row1
        assert_eq!(a, b);
    }

    #[test]
    fn integer_kernel_saturated() {
        // kernel of [2 3] over Z is generated by (3, -2) or (-3, 2)
        let k = integer_kernel(vec![vec![2.into(), 3.into()]], 2);
        assert_eq!(k.len(), 1);
        let v = &k[0];
        assert_eq!(&v[0] * 2 + &v[1] * 3, BigInt::zero());
        assert_eq!(v[0].abs(), BigInt::from(3));
    }

    #[test]
    fn unimodular_inverse() {
        let u: Vec<Vec<BigInt>> = vec![
            vec![1.into(), 2.into()],
            vec![1.into(), 3.into()],
        ];
        let w = inv_unimodular(&u);
        assert_eq!(w[0], vec![BigInt::from(3), BigInt::from(-2)]);
        assert_eq!(w[1], vec![BigInt::from(-1), BigInt::from(1)]);
    }

    #[test]
    fn invariant_factor_stripping() {
        let d: Vec<BigInt> = vec![1.into(), 2.into(), 6.into(), 0.into()];
        let z = CoefficientRing::localized(&[]).unwrap();
        let z2 = CoefficientRing::localized(&[2]).unwrap();
        assert_eq!(
            invariant_factors(&d, &z),
            vec![BigInt::from(2), BigInt::from(6)]
        );
        assert_eq!(invariant_factors(&d, &z2), vec![BigInt::from(3)]);
        assert!(invariant_factors(&d, &CoefficientRing::All).is_empty());
    }
}
