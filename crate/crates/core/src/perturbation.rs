//! Dressed ground state of the chiral oscillator in a magnetic field, both from
//! second-order perturbation theory in closed form and from numerical
//! diagonalization.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{build_basis, hamiltonian, FockBasis, FockState, HamiltonianTerms, OperatorMatrix};
use crate::params::{anisotropy, AnisotropySet, ModelParams};
use crate::solver;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Amplitudes of a state over a full Fock basis, normalized, with the |000>
/// amplitude real and positive.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbedState {
    n_max: usize,
    amplitudes: Vec<Complex64>,
}

impl PerturbedState {
    /// Normalizes and fixes the global phase. Fails if |000> has no weight.
    pub fn new(basis: &FockBasis, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let c0 = amplitudes[0];
        if c0.norm() == 0.0 {
            return Err(Error::Invariant("state has no |000> component".into()));
        }
        let phase = c0.conj() / c0.norm();
        let n = solver::norm(&amplitudes);
        amplitudes.iter_mut().for_each(|a| *a *= phase / n);
        amplitudes[0] = Complex64::new(amplitudes[0].re, 0.0);
        Ok(PerturbedState { n_max: basis.n_max(), amplitudes })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn coefficient(&self, s: FockState) -> Complex64 {
        let basis = build_basis(self.n_max).expect("valid n_max");
        basis.index(s).map(|i| self.amplitudes[i]).unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Re-expresses the state in a basis with a larger (or equal) truncation.
    pub fn embed(&self, n_max: usize) -> Result<Self> {
        let from = build_basis(self.n_max)?;
        let to = build_basis(n_max)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); to.dim()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm() == 0.0 {
                continue;
            }
            match to.index(from.state(i)) {
                Some(j) => amps[j] = *a,
                None => return Err(Error::BasisMismatch { state: self.n_max, op: n_max }),
            }
        }
        Ok(PerturbedState { n_max, amplitudes: amps })
    }
}

/// <state|op|state>. For a Hermitian operator the imaginary part must vanish.
pub fn expectation(state: &PerturbedState, op: &OperatorMatrix) -> Result<Complex64> {
    if state.n_max != op.n_max() {
        return Err(Error::BasisMismatch { state: state.n_max, op: op.n_max() });
    }
    let v = op.apply(&state.amplitudes);
    let e = solver::dot(&state.amplitudes, &v);
    if op.hermitian && e.im.abs() > 1e-12 * (op.max_abs() + e.re.abs()) {
        return Err(Error::Invariant(format!("Hermitian expectation has imaginary part {:e}", e.im)));
    }
    Ok(e)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Validity {
    Ok,
    /// Some expansion parameter exceeds 0.1.
    Marginal,
}

/// Checks the dimensionless couplings against the perturbative regime.
pub fn perturbative_validity(a: &AnisotropySet) -> Result<Validity> {
    let mut worst = ("curly_c", a.curly_c.abs());
    for (name, v) in [("curly_b_x", a.curly_b[0]), ("curly_b_y", a.curly_b[1]), ("curly_b_z", a.curly_b[2])] {
        if v.abs() > worst.1 {
            worst = (name, v.abs());
        }
    }
    if worst.1 > 0.3 {
        return Err(Error::PerturbationTooLarge { name: worst.0, value: worst.1 });
    }
    Ok(if worst.1 > 0.1 { Validity::Marginal } else { Validity::Ok })
}

/// Which power of the couplings a dressing term carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    /// Linear in curlyC.
    Chiral,
    /// Linear in curlyB along the given axis.
    Zeeman(usize),
    /// Proportional to curlyC * curlyB along the given axis.
    Mixed(usize),
}

/// One term of the dressed ground state: amplitude = coefficient * couplings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DressingTerm {
    pub state: FockState,
    pub order: Order,
    pub coefficient: Complex64,
}

fn placed(c: usize, na: usize, nb: usize, nc: usize) -> FockState {
    let (a, b) = ((c + 1) % 3, (c + 2) % 3);
    let mut n = [0; 3];
    n[a] = na;
    n[b] = nb;
    n[c] = nc;
    FockState { n }
}

/// Coefficients of the dressed ground state per unit coupling.
///
/// With the field along axis c and (a, b, c) cyclic, the block reads
///
/// ```text
/// -i B eta^{ba}|110> + i B C eta^{ba}(|001> + 2|221>)
///   - sqrt2 i B C [(2w_a - w_c eta^{ba})/(w_c + 2w_a)|201> - (2w_b + w_c eta^{ba})/(w_c + 2w_b)|021>]
/// ```
///
/// in occupations (n_a, n_b, n_c), on top of -C|111>.
pub fn dressing_terms(omega: &[f64; 3], eta: &[[f64; 3]; 3]) -> Vec<DressingTerm> {
    let mut out = vec![DressingTerm {
        state: FockState::new(1, 1, 1),
        order: Order::Chiral,
        coefficient: Complex64::new(-1.0, 0.0),
    }];
    let s2 = std::f64::consts::SQRT_2;
    for c in 0..3 {
        let (a, b) = ((c + 1) % 3, (c + 2) % 3);
        let e = eta[b][a];
        let (wa, wb, wc) = (omega[a], omega[b], omega[c]);
        out.push(DressingTerm { state: placed(c, 1, 1, 0), order: Order::Zeeman(c), coefficient: -I * e });
        let mixed = [
            (placed(c, 0, 0, 1), I * e),
            (placed(c, 2, 2, 1), 2.0 * I * e),
            (placed(c, 2, 0, 1), -s2 * I * (2.0 * wa - wc * e) / (wc + 2.0 * wa)),
            (placed(c, 0, 2, 1), s2 * I * (2.0 * wb + wc * e) / (wc + 2.0 * wb)),
        ];
        for (state, coefficient) in mixed {
            out.push(DressingTerm { state, order: Order::Mixed(c), coefficient });
        }
    }
    out
}

/// The closed-form dressed ground state in a basis of truncation `n_max` (>= 2).
pub fn ground_state_analytic_in(p: &ModelParams, n_max: usize) -> Result<PerturbedState> {
    let a = anisotropy(p);
    perturbative_validity(&a)?;
    let basis = build_basis(n_max.max(2))?;
    let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
    amps[0] = Complex64::new(1.0, 0.0);
    for t in dressing_terms(&p.omega, &a.eta) {
        let weight = match t.order {
            Order::Chiral => a.curly_c,
            Order::Zeeman(c) => a.curly_b[c],
            Order::Mixed(c) => a.curly_c * a.curly_b[c],
        };
        let i = basis.index(t.state).expect("n_max >= 2");
        amps[i] += t.coefficient * weight;
    }
    PerturbedState::new(&basis, amps)
}

pub fn ground_state_analytic(p: &ModelParams) -> Result<PerturbedState> {
    ground_state_analytic_in(p, 2)
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub state: PerturbedState,
    pub energy: f64,
    /// Distance to the next level in the same symmetry block, when known.
    pub gap: Option<f64>,
}

/// Indices reachable from |000> through nonzero matrix elements of H.
fn connected_block(h: &OperatorMatrix) -> Vec<usize> {
    let mut seen = vec![false; h.dim()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut out = Vec::new();
    while let Some(i) = queue.pop_front() {
        out.push(i);
        for (j, _) in h.row(i) {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Lowest eigenvector by dense Hermitian diagonalization of the block
/// connected to |000>.
pub fn ground_state_numeric(h: &OperatorMatrix, basis: &FockBasis) -> Result<GroundState> {
    if h.n_max() != basis.n_max() {
        return Err(Error::BasisMismatch { state: basis.n_max(), op: h.n_max() });
    }
    let block = connected_block(h);
    let n = block.len();
    let mut pos = vec![usize::MAX; h.dim()];
    for (k, &i) in block.iter().enumerate() {
        pos[i] = k;
    }
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for (k, &i) in block.iter().enumerate() {
        for (j, v) in h.row(i) {
            m[(k, pos[j])] = v;
        }
    }
    // symmetrize away rounding so the solver sees an exactly Hermitian matrix
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let e0 = eig.eigenvalues[order[0]];
    let gap = if n > 1 { Some(eig.eigenvalues[order[1]] - e0) } else { None };
    if let Some(g) = gap {
        // <000|H|000> = hbar (w_x + w_y + w_z)/2 = 3 hbar w0 / 2
        let hw0 = (h.get(0, 0).re * 2.0 / 3.0).abs();
        if g <= 1e-8 * hw0 {
            return Err(Error::DegenerateGroundState { gap: g });
        }
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
    for (k, &i) in block.iter().enumerate() {
        amps[i] = eig.eigenvectors[(k, order[0])];
    }
    Ok(GroundState { state: PerturbedState::new(basis, amps)?, energy: e0, gap })
}

/// Lowest eigenvector by preconditioned inverse iteration; suited to large
/// truncations where dense diagonalization is too expensive.
pub fn ground_state_iterative(h: &OperatorMatrix, basis: &FockBasis, p: &ModelParams) -> Result<GroundState> {
    let wmin = p.omega.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut start = vec![Complex64::new(0.0, 0.0); basis.dim()];
    start[0] = Complex64::new(1.0, 0.0);
    let e_ref = h.get(0, 0).re;
    let pair = solver::lowest_eigenpair(h, &start, e_ref - 0.5 * p.hbar * wmin, p.hbar * wmin, 1e-14, 400)?;
    Ok(GroundState { state: PerturbedState::new(basis, pair.vector)?, energy: pair.value, gap: None })
}

/// Derivative of the numeric ground-state amplitudes with respect to the
/// couplings, by central differences of step `h` in curlyC and curlyB.
///
/// `order` selects d/dC (Chiral), d/dB_axis (Zeeman) or d^2/dC dB_axis (Mixed).
pub fn coefficient_derivatives(
    base: &ModelParams,
    n_max: usize,
    order: Order,
    h: f64,
) -> Result<PerturbedStateDerivative> {
    let basis = build_basis(n_max)?;
    let solve = |cc: f64, axis: usize, cb: f64| -> Result<Vec<Complex64>> {
        let mut b = [0.0; 3];
        b[axis] = cb;
        let p = base.with_dimensionless(cc, b);
        let hm = hamiltonian(&basis, &p, HamiltonianTerms::DRESSED);
        Ok(ground_state_numeric(&hm, &basis)?.state.amplitudes)
    };
    let combos: Vec<(f64, f64, f64, usize)> = match order {
        Order::Chiral => vec![(1.0 / (2.0 * h), h, 0.0, 0), (-1.0 / (2.0 * h), -h, 0.0, 0)],
        Order::Zeeman(c) => vec![(1.0 / (2.0 * h), 0.0, h, c), (-1.0 / (2.0 * h), 0.0, -h, c)],
        Order::Mixed(c) => {
            let w = 1.0 / (4.0 * h * h);
            vec![(w, h, h, c), (-w, h, -h, c), (-w, -h, h, c), (w, -h, -h, c)]
        }
    };
    let mut d = vec![Complex64::new(0.0, 0.0); basis.dim()];
    for (w, cc, cb, axis) in combos {
        let amps = solve(cc, axis, cb)?;
        d.iter_mut().zip(&amps).for_each(|(d, a)| *d += w * a);
    }
    Ok(PerturbedStateDerivative { basis, values: d })
}

/// Derivative amplitudes over a Fock basis.
#[derive(Clone, Debug)]
pub struct PerturbedStateDerivative {
    pub basis: FockBasis,
    pub values: Vec<Complex64>,
}

impl PerturbedStateDerivative {
    pub fn get(&self, s: FockState) -> Complex64 {
        self.basis.index(s).map(|i| self.values[i]).unwrap_or_default()
    }

    /// Largest amplitude among states outside `listed`.
    pub fn max_outside(&self, listed: &[FockState]) -> f64 {
        self.basis
            .states()
            .zip(&self.values)
            .filter(|(s, _)| !listed.contains(s))
            .fold(0.0, |m, (_, v)| m.max(v.norm()))
    }
}

/// Comparison of one analytic dressing coefficient with its numeric
/// finite-difference counterpart.
#[derive(Clone, Debug)]
pub struct CoefficientCheck {
    pub term: DressingTerm,
    pub numeric: Complex64,
    pub rel_error: f64,
}

/// Compares every dressing coefficient with finite differences of numerically
/// diagonalized ground states. Also returns, per order, the largest numeric
/// amplitude on states the closed form says are absent.
pub fn verify_dressing(base: &ModelParams, n_max: usize, h: f64) -> Result<(Vec<CoefficientCheck>, f64)> {
    let a = anisotropy(base);
    let terms = dressing_terms(&base.omega, &a.eta);
    let mut orders = vec![Order::Chiral];
    for c in 0..3 {
        orders.push(Order::Zeeman(c));
        orders.push(Order::Mixed(c));
    }
    let mut checks = Vec::new();
    let mut stray = 0.0f64;
    for order in orders {
        let d = coefficient_derivatives(base, n_max, order, h)?;
        let mine: Vec<&DressingTerm> = terms.iter().filter(|t| t.order == order).collect();
        let listed: Vec<FockState> = mine.iter().map(|t| t.state).chain([FockState::new(0, 0, 0)]).collect();
        let scale = mine.iter().fold(0.0f64, |m, t| m.max(t.coefficient.norm()));
        stray = stray.max(d.max_outside(&listed) / scale.max(1e-300));
        for t in mine {
            let numeric = d.get(t.state);
            let denom = t.coefficient.norm().max(1e-300);
            checks.push(CoefficientCheck { term: *t, numeric, rel_error: (numeric - t.coefficient).norm() / denom });
        }
    }
    Ok((checks, stray))
}
