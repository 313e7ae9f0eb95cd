//! Truncated three-dimensional oscillator Fock space and the operators of the
//! relative-coordinate Hamiltonian.
//!
//! Ladder convention: a = sqrt(mu w / 2 hbar) (x + i p / (mu w)), hence
//! x = sqrt(hbar / 2 mu w) (a + a^dag) and p = i sqrt(hbar mu w / 2) (a^dag - a).
//! Operators are stored in compressed sparse row form.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::ModelParams;

pub const MAX_N_MAX: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState {
    pub n: [usize; 3],
}

impl FockState {
    pub const fn new(nx: usize, ny: usize, nz: usize) -> Self {
        FockState { n: [nx, ny, nz] }
    }

    pub fn total(&self) -> usize {
        self.n.iter().sum()
    }
}

impl std::fmt::Display for FockState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "|{} {} {}>", self.n[0], self.n[1], self.n[2])
    }
}

/// All states with 0 <= n_i <= n_max, ordered with n_z fastest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockBasis {
    n_max: usize,
    side: usize,
}

pub fn build_basis(n_max: usize) -> Result<FockBasis> {
    if n_max > MAX_N_MAX {
        return Err(Error::TruncationTooLarge(n_max));
    }
    Ok(FockBasis { n_max, side: n_max + 1 })
}

impl FockBasis {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.side * self.side * self.side
    }

    pub fn index(&self, s: FockState) -> Option<usize> {
        if s.n.iter().any(|&n| n > self.n_max) {
            return None;
        }
        Some((s.n[0] * self.side + s.n[1]) * self.side + s.n[2])
    }

    pub fn state(&self, i: usize) -> FockState {
        let nz = i % self.side;
        let ny = (i / self.side) % self.side;
        let nx = i / (self.side * self.side);
        FockState::new(nx, ny, nz)
    }

    pub fn states(&self) -> impl Iterator<Item = FockState> + '_ {
        (0..self.dim()).map(|i| self.state(i))
    }

    /// True if no occupation sits on the truncation edge.
    pub fn is_interior(&self, s: FockState) -> bool {
        s.n.iter().all(|&n| n < self.n_max)
    }
}

/// Sparse operator over a Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    n_max: usize,
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    pub hermitian: bool,
    pub real: bool,
}

impl OperatorMatrix {
    /// Sums duplicate entries and drops exact zeros.
    pub fn from_triplets(
        basis: &FockBasis,
        mut triplets: Vec<(usize, usize, Complex64)>,
        hermitian: bool,
        real: bool,
    ) -> Self {
        let dim = basis.dim();
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        let keep: Vec<bool> = vals.iter().map(|v| *v != Complex64::new(0.0, 0.0)).collect();
        let mut out_cols = Vec::with_capacity(cols.len());
        let mut out_vals = Vec::with_capacity(vals.len());
        for k in 0..rows.len() {
            if keep[k] {
                row_ptr[rows[k] + 1] += 1;
                out_cols.push(cols[k]);
                out_vals.push(vals[k]);
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        OperatorMatrix { n_max: basis.n_max(), dim, row_ptr, cols: out_cols, vals: out_vals, hermitian, real }
    }

    pub fn zero(basis: &FockBasis) -> Self {
        Self::from_triplets(basis, Vec::new(), true, true)
    }

    pub fn identity(basis: &FockBasis) -> Self {
        let t = (0..basis.dim()).map(|i| (i, i, Complex64::new(1.0, 0.0))).collect();
        Self::from_triplets(basis, t, true, true)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim)
            .flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k])))
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn element(&self, basis: &FockBasis, bra: FockState, ket: FockState) -> Complex64 {
        match (basis.index(bra), basis.index(ket)) {
            (Some(r), Some(c)) => self.get(r, c),
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// y = A x.
    pub fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.dim);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yr = acc;
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        self.apply_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// max |A - A^dag|.
    pub fn hermiticity_defect(&self) -> f64 {
        self.triplets().fold(0.0, |m, (r, c, v)| m.max((v - self.get(c, r).conj()).norm()))
    }

    pub fn check_hermitian(&self) -> bool {
        self.hermiticity_defect() <= 1e-12 * self.max_abs()
    }

    pub fn trace(&self) -> Complex64 {
        self.diagonal().iter().sum()
    }

    /// sum_k c_k A_k over operators on the same basis.
    pub fn linear_combination(basis: &FockBasis, terms: &[(Complex64, &OperatorMatrix)]) -> Self {
        let mut t = Vec::new();
        let mut hermitian = true;
        let mut real = true;
        for (c, op) in terms {
            hermitian &= op.hermitian && c.im == 0.0;
            real &= op.real && c.im == 0.0;
            t.extend(op.triplets().map(|(r, col, v)| (r, col, c * v)));
        }
        Self::from_triplets(basis, t, hermitian, real)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= c);
        out
    }
}

/// One-dimensional operator on occupations 0..=n_max, dense.
#[derive(Clone, Debug)]
struct Op1 {
    m: Vec<Complex64>,
    side: usize,
}

impl Op1 {
    fn identity(side: usize) -> Self {
        let mut m = vec![Complex64::new(0.0, 0.0); side * side];
        for i in 0..side {
            m[i * side + i] = Complex64::new(1.0, 0.0);
        }
        Op1 { m, side }
    }

    fn position(side: usize, scale: f64) -> Self {
        let mut m = vec![Complex64::new(0.0, 0.0); side * side];
        for n in 1..side {
            let v = Complex64::new(scale * (n as f64).sqrt(), 0.0);
            m[(n - 1) * side + n] = v;
            m[n * side + n - 1] = v;
        }
        Op1 { m, side }
    }

    fn momentum(side: usize, scale: f64) -> Self {
        let mut m = vec![Complex64::new(0.0, 0.0); side * side];
        for n in 1..side {
            let s = scale * (n as f64).sqrt();
            m[(n - 1) * side + n] = Complex64::new(0.0, -s);
            m[n * side + n - 1] = Complex64::new(0.0, s);
        }
        Op1 { m, side }
    }

    fn mul(&self, other: &Op1) -> Op1 {
        let s = self.side;
        let mut m = vec![Complex64::new(0.0, 0.0); s * s];
        for i in 0..s {
            for k in 0..s {
                let a = self.m[i * s + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..s {
                    m[i * s + j] += a * other.m[k * s + j];
                }
            }
        }
        Op1 { m, side: s }
    }

    fn nonzeros(&self) -> Vec<(usize, usize, Complex64)> {
        let s = self.side;
        (0..s * s).filter(|&k| self.m[k] != Complex64::new(0.0, 0.0)).map(|k| (k / s, k % s, self.m[k])).collect()
    }
}

/// sum_t c_t A_t^x (x) A_t^y (x) A_t^z.
fn kron3(basis: &FockBasis, terms: &[(Complex64, [&Op1; 3])], hermitian: bool, real: bool) -> OperatorMatrix {
    let mut t = Vec::new();
    for (c, ops) in terms {
        let [ax, ay, az] = [ops[0].nonzeros(), ops[1].nonzeros(), ops[2].nonzeros()];
        for &(rx, cx, vx) in &ax {
            for &(ry, cy, vy) in &ay {
                for &(rz, cz, vz) in &az {
                    let r = basis.index(FockState::new(rx, ry, rz)).unwrap();
                    let col = basis.index(FockState::new(cx, cy, cz)).unwrap();
                    t.push((r, col, c * vx * vy * vz));
                }
            }
        }
    }
    OperatorMatrix::from_triplets(basis, t, hermitian, real)
}

fn position_scale(p: &ModelParams, axis: usize) -> f64 {
    (p.hbar / (2.0 * p.mu * p.omega[axis])).sqrt()
}

fn momentum_scale(p: &ModelParams, axis: usize) -> f64 {
    (p.hbar * p.mu * p.omega[axis] / 2.0).sqrt()
}

struct AxisOps {
    id: Op1,
    x: [Op1; 3],
    p: [Op1; 3],
}

impl AxisOps {
    fn new(basis: &FockBasis, p: &ModelParams) -> Self {
        let s = basis.n_max() + 1;
        AxisOps {
            id: Op1::identity(s),
            x: [0, 1, 2].map(|a| Op1::position(s, position_scale(p, a))),
            p: [0, 1, 2].map(|a| Op1::momentum(s, momentum_scale(p, a))),
        }
    }

    /// Factors for a product of single-axis operators placed on the given axes.
    fn place<'a>(&'a self, factors: &[(usize, &'a Op1)]) -> [&'a Op1; 3] {
        let mut out = [&self.id, &self.id, &self.id];
        for &(axis, op) in factors {
            out[axis] = op;
        }
        out
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn position_op(basis: &FockBasis, axis: usize, p: &ModelParams) -> OperatorMatrix {
    let ops = AxisOps::new(basis, p);
    kron3(basis, &[(real(1.0), ops.place(&[(axis, &ops.x[axis])]))], true, true)
}

pub fn momentum_op(basis: &FockBasis, axis: usize, p: &ModelParams) -> OperatorMatrix {
    let ops = AxisOps::new(basis, p);
    kron3(basis, &[(real(1.0), ops.place(&[(axis, &ops.p[axis])]))], true, false)
}

/// V_C = C x y z.
pub fn chiral_op(basis: &FockBasis, p: &ModelParams) -> OperatorMatrix {
    let ops = AxisOps::new(basis, p);
    let f = [&ops.x[0], &ops.x[1], &ops.x[2]];
    kron3(basis, &[(real(p.chiral_c), f)], true, true)
}

/// Angular momentum component (r x p)_k.
pub fn angular_momentum_op(basis: &FockBasis, k: usize, p: &ModelParams) -> OperatorMatrix {
    let ops = AxisOps::new(basis, p);
    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
    kron3(
        basis,
        &[
            (real(1.0), ops.place(&[(i, &ops.x[i]), (j, &ops.p[j])])),
            (real(-1.0), ops.place(&[(j, &ops.x[j]), (i, &ops.p[i])])),
        ],
        true,
        false,
    )
}

/// V_Z = (e / 2 mu*) (r x p) . B0.
pub fn zeeman_op(basis: &FockBasis, p: &ModelParams) -> OperatorMatrix {
    let ops = AxisOps::new(basis, p);
    let pref = p.e / (2.0 * p.mu_star);
    let mut terms = Vec::new();
    for k in 0..3 {
        if p.b0[k] == 0.0 {
            continue;
        }
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        terms.push((real(pref * p.b0[k]), ops.place(&[(i, &ops.x[i]), (j, &ops.p[j])])));
        terms.push((real(-pref * p.b0[k]), ops.place(&[(j, &ops.x[j]), (i, &ops.p[i])])));
    }
    kron3(basis, &terms, true, false)
}

/// Diagonal oscillator part p^2/2mu + V_HO, exact in the truncated basis.
pub fn oscillator_op(basis: &FockBasis, p: &ModelParams) -> OperatorMatrix {
    let t = (0..basis.dim())
        .map(|i| {
            let s = basis.state(i);
            let e: f64 = (0..3).map(|a| p.hbar * p.omega[a] * (s.n[a] as f64 + 0.5)).sum();
            (i, i, real(e))
        })
        .collect();
    OperatorMatrix::from_triplets(basis, t, true, true)
}

/// Delta V = (e^2/2)(1/M + mu/mu*^2)(r x B0)^2 + e Q0 . (r x B0) / M.
pub fn delta_v_op(basis: &FockBasis, p: &ModelParams) -> OperatorMatrix {
    let ops = AxisOps::new(basis, p);
    let b = p.b0;
    let dia = 0.5 * p.e * p.e * (1.0 / p.m_total + p.mu / (p.mu_star * p.mu_star));
    let xx: [Op1; 3] = [0, 1, 2].map(|a| ops.x[a].mul(&ops.x[a]));
    let mut terms: Vec<(Complex64, [&Op1; 3])> = Vec::new();
    // (r x B)^2 = |B|^2 r^2 - (r.B)^2
    let b2 = b.norm_squared();
    for a in 0..3 {
        let c = dia * (b2 - b[a] * b[a]);
        terms.push((real(c), ops.place(&[(a, &xx[a])])));
        for a2 in 0..3 {
            if a2 != a {
                terms.push((real(-dia * b[a] * b[a2]), ops.place(&[(a, &ops.x[a]), (a2, &ops.x[a2])])));
            }
        }
    }
    // Q . (r x B) = sum_a r_a (B x Q)_a
    let bq = b.cross(&p.q0);
    for a in 0..3 {
        terms.push((real(p.e * bq[a] / p.m_total), ops.place(&[(a, &ops.x[a])])));
    }
    kron3(basis, &terms, true, true)
}

/// Terms to include in the relative-coordinate Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HamiltonianTerms {
    pub oscillator: bool,
    pub chiral: bool,
    pub zeeman: bool,
    pub delta_v: bool,
}

impl HamiltonianTerms {
    pub const OSCILLATOR: Self = HamiltonianTerms { oscillator: true, chiral: false, zeeman: false, delta_v: false };
    /// Oscillator, chiral and Zeeman terms; Delta V is higher order and omitted.
    pub const DRESSED: Self = HamiltonianTerms { oscillator: true, chiral: true, zeeman: true, delta_v: false };
    pub const ALL: Self = HamiltonianTerms { oscillator: true, chiral: true, zeeman: true, delta_v: true };
}

/// H~0 without the constant Q^2/2M.
pub fn hamiltonian(basis: &FockBasis, p: &ModelParams, include: HamiltonianTerms) -> OperatorMatrix {
    let mut parts = Vec::new();
    if include.oscillator {
        parts.push(oscillator_op(basis, p));
    }
    if include.chiral {
        parts.push(chiral_op(basis, p));
    }
    if include.zeeman {
        parts.push(zeeman_op(basis, p));
    }
    if include.delta_v {
        parts.push(delta_v_op(basis, p));
    }
    let terms: Vec<(Complex64, &OperatorMatrix)> = parts.iter().map(|o| (real(1.0), o)).collect();
    let mut h = OperatorMatrix::linear_combination(basis, &terms);
    h.hermitian = true;
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn params() -> ModelParams {
        ModelParams::hydrogenic([1.0, 1.3, 0.8]).unwrap().with_chiral_c(0.37).with_b0(Vector3::new(0.2, -0.5, 0.9))
    }

    #[test]
    fn basis_sizes_and_bijection() {
        assert_eq!(build_basis(2).unwrap().dim(), 27);
        assert_eq!(build_basis(0).unwrap().dim(), 1);
        assert_eq!(build_basis(31), Err(Error::TruncationTooLarge(31)));
        let b = build_basis(4).unwrap();
        for i in 0..b.dim() {
            assert_eq!(b.index(b.state(i)), Some(i));
        }
        assert_eq!(b.index(FockState::new(5, 0, 0)), None);
    }

    #[test]
    fn position_and_momentum_elements() {
        let p = params();
        let b = build_basis(3).unwrap();
        let x = position_op(&b, 0, &p);
        let px = momentum_op(&b, 0, &p);
        let (s0, s1) = (FockState::new(0, 0, 0), FockState::new(1, 0, 0));
        let ex = (p.hbar / (2.0 * p.mu * p.omega[0])).sqrt();
        assert!((x.element(&b, s0, s1).re - ex).abs() < 1e-15);
        let ep = (p.hbar * p.mu * p.omega[0] / 2.0).sqrt();
        assert!((px.element(&b, s0, s1) - Complex64::new(0.0, -ep)).norm() < 1e-15);
        assert!(x.diagonal().iter().all(|d| d.norm() == 0.0));
        assert!(px.diagonal().iter().all(|d| d.norm() == 0.0));
        assert!(x.check_hermitian() && px.check_hermitian());
    }

    #[test]
    fn canonical_commutator_on_interior() {
        let p = params();
        let b = build_basis(4).unwrap();
        for a in 0..3 {
            let x = position_op(&b, a, &p).to_dense();
            let px = momentum_op(&b, a, &p).to_dense();
            let comm = &x * &px - &px * &x;
            for s in b.states() {
                if s.n[a] < b.n_max() {
                    let i = b.index(s).unwrap();
                    for j in 0..b.dim() {
                        let expect = if i == j { Complex64::new(0.0, p.hbar) } else { Complex64::new(0.0, 0.0) };
                        assert!((comm[(i, j)] - expect).norm() < 1e-13);
                    }
                }
            }
            // different axes commute exactly
            let y = position_op(&b, (a + 1) % 3, &p).to_dense();
            assert!((&x * &y - &y * &x).camax() == 0.0);
        }
    }

    #[test]
    fn chiral_selection_rule_and_element() {
        let p = params();
        let b = build_basis(3).unwrap();
        let vc = chiral_op(&b, &p);
        assert!(vc.check_hermitian() && vc.real);
        let expected = p.chiral_c * (p.hbar / (2.0 * p.mu)).powf(1.5) / (p.omega[0] * p.omega[1] * p.omega[2]).sqrt();
        let got = vc.element(&b, FockState::new(1, 1, 1), FockState::new(0, 0, 0));
        assert!((got.re / expected - 1.0).abs() < 1e-14 && got.im == 0.0);
        for (r, c, _) in vc.triplets() {
            let (sr, sc) = (b.state(r), b.state(c));
            for a in 0..3 {
                assert_eq!((sr.n[a] + sc.n[a]) % 2, 1);
            }
        }
        assert_eq!(chiral_op(&b, &p.with_chiral_c(0.0)).nnz(), 0);
    }

    #[test]
    fn zeeman_structure() {
        let p = params();
        let b = build_basis(3).unwrap();
        let vz = zeeman_op(&b, &p);
        assert!(vz.check_hermitian());
        assert!(vz.triplets().all(|(_, _, v)| v.re == 0.0));
        assert!(vz.trace().norm() < 1e-15);
        assert_eq!(zeeman_op(&b, &p.with_b0(Vector3::zeros())).nnz(), 0);

        // <110|V_Z|000> for B along z: i e B (w_y - w_x) hbar / (4 mu* sqrt(w_x w_y))
        let bz = 0.7;
        let pz = p.with_b0(Vector3::new(0.0, 0.0, bz));
        let vz = zeeman_op(&b, &pz);
        let got = vz.element(&b, FockState::new(1, 1, 0), FockState::new(0, 0, 0));
        let (wx, wy) = (p.omega[0], p.omega[1]);
        let expected = pz.e * bz * pz.hbar * (wy - wx) / (4.0 * pz.mu_star * (wx * wy).sqrt());
        assert!((got - Complex64::new(0.0, expected)).norm() < 1e-15);
        let iso = ModelParams::hydrogenic([1.0, 1.0, 0.8]).unwrap().with_b0(Vector3::new(0.0, 0.0, bz));
        let g = zeeman_op(&b, &iso).element(&b, FockState::new(1, 1, 0), FockState::new(0, 0, 0));
        assert!(g.norm() < 1e-16);
    }

    #[test]
    fn oscillator_spectrum_and_sum_rule() {
        let p = params();
        let b = build_basis(2).unwrap();
        let h = hamiltonian(&b, &p, HamiltonianTerms::OSCILLATOR);
        assert!((h.get(0, 0).re - p.e0()).abs() < 1e-15);
        for a in 0..3 {
            let x = position_op(&b, a, &p);
            let ground = FockState::new(0, 0, 0);
            let sum: f64 = b.states().map(|s| x.element(&b, ground, s).norm_sqr() * (s.n[a] as f64) * p.omega[a]).sum();
            assert!((sum - p.hbar / (2.0 * p.mu)).abs() < 1e-10);
        }
    }

    #[test]
    fn delta_v_reduces_to_diamagnetic_part() {
        let p = params();
        let b = build_basis(3).unwrap();
        let dv = delta_v_op(&b, &p);
        assert!(dv.check_hermitian());
        let xs: Vec<_> = (0..3).map(|a| position_op(&b, a, &p).to_dense()).collect();
        let bv = p.b0;
        // r x B components as dense operators
        let cross = |k: usize| {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            &xs[i] * Complex64::new(bv[j], 0.0) - &xs[j] * Complex64::new(bv[i], 0.0)
        };
        let mut sq = DMatrix::<Complex64>::zeros(b.dim(), b.dim());
        for k in 0..3 {
            let c = cross(k);
            sq += &c * &c;
        }
        let dia = 0.5 * p.e * p.e * (1.0 / p.m_total + p.mu / (p.mu_star * p.mu_star));
        assert!((dv.to_dense() - sq * Complex64::new(dia, 0.0)).camax() < 1e-14);
    }

    #[test]
    fn dressed_hamiltonian_is_hermitian() {
        let p = params();
        let b = build_basis(4).unwrap();
        let h = hamiltonian(&b, &p, HamiltonianTerms::ALL);
        assert!(h.hermiticity_defect() <= 1e-12 * h.max_abs());
    }
}
