//! Exact linear algebra over the eight-mode two-photon space.
//!
//! The down-converter populates four signal modes (Alice's arm) and four idler
//! modes (Bob's arm). A pair state is a 4×4 grid of complex amplitudes indexed
//! by (signal, idler); the vacuum term is never stored, so every quantity here
//! is conditioned on a pair having been produced.
//!
//! Pair-basis order is fixed: signal index major, idler index minor, with both
//! parties listed as `p0, p±, q0, q±`. The four populated pairs of the
//! down-conversion state therefore sit on the diagonal indices 0, 5, 10, 15 in
//! their listing order.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance used for Hermiticity, positivity and normalization checks.
pub const STATE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Signal,
    Idler,
}

/// Emission point in the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SourcePoint {
    P,
    Q,
}

/// Ray family: horizontal (`Side`) or oblique (`down` for signal, `up` for idler).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Side,
    Updown,
}

/// One of the eight photon modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    SignalP0,
    SignalPDown,
    SignalQ0,
    SignalQDown,
    IdlerP0,
    IdlerPUp,
    IdlerQ0,
    IdlerQUp,
}

impl Mode {
    pub const ALL: [Mode; 8] = [
        Mode::SignalP0,
        Mode::SignalPDown,
        Mode::SignalQ0,
        Mode::SignalQDown,
        Mode::IdlerP0,
        Mode::IdlerPUp,
        Mode::IdlerQ0,
        Mode::IdlerQUp,
    ];
    pub const SIGNAL: [Mode; 4] = [
        Mode::SignalP0,
        Mode::SignalPDown,
        Mode::SignalQ0,
        Mode::SignalQDown,
    ];
    pub const IDLER: [Mode; 4] = [
        Mode::IdlerP0,
        Mode::IdlerPUp,
        Mode::IdlerQ0,
        Mode::IdlerQUp,
    ];

    pub fn of_party(party: Party) -> [Mode; 4] {
        match party {
            Party::Signal => Self::SIGNAL,
            Party::Idler => Self::IDLER,
        }
    }

    pub fn new(party: Party, source_point: SourcePoint, direction: Direction) -> Mode {
        let offset = match (source_point, direction) {
            (SourcePoint::P, Direction::Side) => 0,
            (SourcePoint::P, Direction::Updown) => 1,
            (SourcePoint::Q, Direction::Side) => 2,
            (SourcePoint::Q, Direction::Updown) => 3,
        };
        Mode::of_party(party)[offset]
    }

    pub fn party(self) -> Party {
        if (self as usize) < 4 {
            Party::Signal
        } else {
            Party::Idler
        }
    }

    pub fn source_point(self) -> SourcePoint {
        if self.index() < 2 {
            SourcePoint::P
        } else {
            SourcePoint::Q
        }
    }

    pub fn direction(self) -> Direction {
        if self.index().is_multiple_of(2) {
            Direction::Side
        } else {
            Direction::Updown
        }
    }

    /// Position within the party's four-mode list.
    pub fn index(self) -> usize {
        (self as usize) % 4
    }

    /// The mode this one is emitted together with.
    pub fn partner(self) -> Mode {
        let other = match self.party() {
            Party::Signal => Party::Idler,
            Party::Idler => Party::Signal,
        };
        Mode::of_party(other)[self.index()]
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::SignalP0 => "s_p0",
            Mode::SignalPDown => "s_p-",
            Mode::SignalQ0 => "s_q0",
            Mode::SignalQDown => "s_q-",
            Mode::IdlerP0 => "i_p0",
            Mode::IdlerPUp => "i_p+",
            Mode::IdlerQ0 => "i_q0",
            Mode::IdlerQUp => "i_q+",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for Mode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

/// Amplitudes over signal⊗idler pairs plus the down-conversion amplitude ε.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonState {
    amplitudes: [[Complex64; 4]; 4],
    epsilon: f64,
}

impl TwoPhotonState {
    /// The post-selected down-conversion state: amplitude `epsilon` on each of
    /// `(s_p0,i_p0)`, `(s_p-,i_p+)`, `(s_q0,i_q0)`, `(s_q-,i_q+)`.
    pub fn canonical(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::domain(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        let mut amplitudes = [[Complex64::new(0.0, 0.0); 4]; 4];
        for (k, row) in amplitudes.iter_mut().enumerate() {
            row[k] = Complex64::new(epsilon, 0.0);
        }
        Ok(Self {
            amplitudes,
            epsilon,
        })
    }

    /// Builds a state from a raw `[signal][idler]` amplitude grid.
    pub fn from_amplitudes(amplitudes: [[Complex64; 4]; 4], epsilon: f64) -> Result<Self> {
        if amplitudes.iter().flatten().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::domain("state amplitudes must be finite"));
        }
        Ok(Self {
            amplitudes,
            epsilon,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Amplitude of the pair `(signal, idler)`.
    ///
    /// Panics if the modes are not one signal and one idler mode.
    pub fn amplitude(&self, signal: Mode, idler: Mode) -> Complex64 {
        assert!(
            signal.party() == Party::Signal && idler.party() == Party::Idler,
            "amplitude({signal}, {idler}) needs a signal and an idler mode"
        );
        self.amplitudes[signal.index()][idler.index()]
    }

    pub fn amplitudes(&self) -> &[[Complex64; 4]; 4] {
        &self.amplitudes
    }

    /// Non-zero entries as `(signal, idler, amplitude)`.
    pub fn nonzero(&self) -> Vec<(Mode, Mode, Complex64)> {
        let mut out = Vec::new();
        for (si, row) in self.amplitudes.iter().enumerate() {
            for (ii, a) in row.iter().enumerate() {
                if *a != Complex64::new(0.0, 0.0) {
                    out.push((Mode::SIGNAL[si], Mode::IDLER[ii], *a));
                }
            }
        }
        out
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().flatten().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.amplitudes
            .iter()
            .flatten()
            .all(|a| *a == Complex64::new(0.0, 0.0))
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= STATE_TOLERANCE
    }

    /// Rescales to unit norm; ε is carried along unchanged.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n == 0.0 {
            return Err(Error::domain("cannot normalize the zero state"));
        }
        let scale = 1.0 / n.sqrt();
        let mut amplitudes = self.amplitudes;
        amplitudes
            .iter_mut()
            .flatten()
            .for_each(|a| *a *= scale);
        Ok(Self {
            amplitudes,
            epsilon: self.epsilon,
        })
    }

    /// Zeroes every pair whose mode on `proj.party()` is not retained.
    pub fn project(&self, proj: &Projector) -> Self {
        let mut amplitudes = self.amplitudes;
        for (si, row) in amplitudes.iter_mut().enumerate() {
            for (ii, a) in row.iter_mut().enumerate() {
                let k = match proj.party {
                    Party::Signal => si,
                    Party::Idler => ii,
                };
                if !proj.retained[k] {
                    *a = Complex64::new(0.0, 0.0);
                }
            }
        }
        Self {
            amplitudes,
            epsilon: self.epsilon,
        }
    }

    /// The state as a length-16 column in pair-basis order.
    pub fn to_vector(&self) -> nalgebra::DVector<Complex64> {
        nalgebra::DVector::from_iterator(16, self.amplitudes.iter().flatten().copied())
    }
}

/// Incomplete-measurement projector: the identity on a subset of one party's modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Projector {
    party: Party,
    retained: [bool; 4],
}

impl Projector {
    /// Projector retaining exactly `modes`, all of which must belong to `party`.
    pub fn new(party: Party, modes: impl IntoIterator<Item = Mode>) -> Result<Self> {
        let mut retained = [false; 4];
        for m in modes {
            if m.party() != party {
                return Err(Error::domain(format!(
                    "mode {m} does not belong to the {party:?} party"
                )));
            }
            retained[m.index()] = true;
        }
        Ok(Self { party, retained })
    }

    pub fn identity(party: Party) -> Self {
        Self {
            party,
            retained: [true; 4],
        }
    }

    fn from_indices(party: Party, indices: &[usize]) -> Self {
        let mut retained = [false; 4];
        for &i in indices {
            retained[i] = true;
        }
        Self { party, retained }
    }

    /// Alice detects at the image of p: `{s_p0, s_p-}`.
    pub fn image_p() -> Self {
        Self::from_indices(Party::Signal, &[0, 1])
    }

    /// Alice detects at the image of q: `{s_q0, s_q-}`.
    pub fn image_q() -> Self {
        Self::from_indices(Party::Signal, &[2, 3])
    }

    /// Alice detects at the focal point of the horizontal rays: `{s_p0, s_q0}`.
    pub fn focal_side() -> Self {
        Self::from_indices(Party::Signal, &[0, 2])
    }

    /// Alice detects at the focal point of the oblique rays: `{s_p-, s_q-}`.
    pub fn focal_down() -> Self {
        Self::from_indices(Party::Signal, &[1, 3])
    }

    /// Bob's direction filter: `{i_p0, i_q0}`.
    pub fn horizontal_idler() -> Self {
        Self::from_indices(Party::Idler, &[0, 2])
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn retains(&self, mode: Mode) -> bool {
        mode.party() == self.party && self.retained[mode.index()]
    }

    pub fn retained_modes(&self) -> Vec<Mode> {
        Mode::of_party(self.party)
            .into_iter()
            .filter(|m| self.retained[m.index()])
            .collect()
    }

    /// True when the two projectors act on the same party with disjoint supports.
    pub fn is_orthogonal_to(&self, other: &Projector) -> bool {
        self.party == other.party
            && self
                .retained
                .iter()
                .zip(other.retained.iter())
                .all(|(a, b)| !(a & b))
    }
}

/// Applies `proj` to `state` without renormalizing.
pub fn apply_projector(state: &TwoPhotonState, proj: &Projector) -> TwoPhotonState {
    state.project(proj)
}

/// Basis a density operator is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// The 16 signal⊗idler pairs.
    SignalIdler,
    /// The 4 idler modes.
    Idler,
}

impl Basis {
    pub fn dim(self) -> usize {
        match self {
            Basis::SignalIdler => 16,
            Basis::Idler => 4,
        }
    }
}

/// Hermitian, positive semidefinite operator over a fixed basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    basis: Basis,
    matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    /// Validates Hermiticity and positivity (within [`STATE_TOLERANCE`]).
    pub fn from_matrix(basis: Basis, matrix: DMatrix<Complex64>) -> Result<Self> {
        let n = basis.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::domain(format!(
                "{basis:?} basis needs a {n}x{n} matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                if (matrix[(i, j)] - matrix[(j, i)].conj()).norm() > STATE_TOLERANCE {
                    return Err(Error::domain("density operator is not Hermitian"));
                }
            }
        }
        let rho = Self { basis, matrix };
        if rho.eigenvalues().iter().any(|&l| l < -STATE_TOLERANCE) {
            return Err(Error::domain("density operator has a negative eigenvalue"));
        }
        Ok(rho)
    }

    /// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`.
    pub fn pure(state: &TwoPhotonState) -> Result<Self> {
        let n = state.norm_sqr();
        if n == 0.0 {
            return Err(Error::domain("the zero state has no density operator"));
        }
        let v = state.to_vector();
        let matrix = (&v * v.adjoint()).unscale(n);
        Ok(Self {
            basis: Basis::SignalIdler,
            matrix,
        })
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect()
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &DensityOperator) -> Result<f64> {
        if self.basis != other.basis {
            return Err(Error::domain("density operators live in different bases"));
        }
        Ok((&self.matrix - &other.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    }

    /// Reduced idler operator obtained by tracing out Alice's photon.
    pub fn partial_trace_signal(&self) -> Result<Self> {
        if self.basis != Basis::SignalIdler {
            return Err(Error::domain(
                "partial trace needs an operator on the signal-idler basis",
            ));
        }
        let mut reduced = DMatrix::<Complex64>::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                reduced[(i, j)] = (0..4).map(|s| self.matrix[(4 * s + i, 4 * s + j)]).sum();
            }
        }
        Ok(Self {
            basis: Basis::Idler,
            matrix: reduced,
        })
    }

    /// `⟨mode|ρ|mode⟩` for an idler-reduced operator.
    pub fn single_mode_probability(&self, mode: Mode) -> Result<f64> {
        if self.basis != Basis::Idler || mode.party() != Party::Idler {
            return Err(Error::domain(
                "single-mode probabilities need an idler-reduced operator and an idler mode",
            ));
        }
        let k = mode.index();
        Ok(self.matrix[(k, k)].re)
    }
}

/// Free-function form of [`DensityOperator::partial_trace_signal`].
pub fn partial_trace_signal(rho: &DensityOperator) -> Result<DensityOperator> {
    rho.partial_trace_signal()
}

/// Free-function form of [`DensityOperator::single_mode_probability`].
pub fn single_mode_probability(rho: &DensityOperator, mode: Mode) -> Result<f64> {
    rho.single_mode_probability(mode)
}

/// `½ Σ |λ(ρ_a − ρ_b)|`, from a dense Hermitian eigensolve.
pub fn trace_distance(rho_a: &DensityOperator, rho_b: &DensityOperator) -> Result<f64> {
    if rho_a.basis != rho_b.basis {
        return Err(Error::domain(format!(
            "trace distance between {:?} and {:?} operators",
            rho_a.basis, rho_b.basis
        )));
    }
    for rho in [rho_a, rho_b] {
        if (rho.trace() - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "trace distance needs unit-trace operators, got trace {}",
                rho.trace()
            )));
        }
    }
    let diff = &rho_a.matrix - &rho_b.matrix;
    let eig = diff.symmetric_eigenvalues();
    Ok((0.5 * eig.iter().map(|l| l.abs()).sum::<f64>()).clamp(0.0, 1.0))
}

/// Born-weighted mixture of `post_filter ∘ proj_i |state⟩` over the branches
/// `projs`, renormalized over the branches that survive.
pub fn conditional_mixture(
    state: &TwoPhotonState,
    projs: &[Projector],
    post_filter: &Projector,
) -> Result<DensityOperator> {
    if projs.is_empty() {
        return Err(Error::domain("conditional mixture needs at least one branch"));
    }
    if !state.is_normalized() {
        return Err(Error::domain(format!(
            "conditional mixture needs a normalized state, norm^2 = {}",
            state.norm_sqr()
        )));
    }
    for (i, a) in projs.iter().enumerate() {
        for b in &projs[i + 1..] {
            if !a.is_orthogonal_to(b) {
                return Err(Error::domain(
                    "conditioning projectors must be mutually orthogonal",
                ));
            }
        }
    }

    let mut acc = DMatrix::<Complex64>::zeros(16, 16);
    let mut total = 0.0;
    for proj in projs {
        let branch = state.project(proj).project(post_filter);
        let weight = branch.norm_sqr();
        if weight == 0.0 {
            continue;
        }
        // q_i ρ_i = |ψ_i⟩⟨ψ_i| / Σ p, so accumulate unnormalized outer products.
        let v = branch.to_vector();
        acc += &v * v.adjoint();
        total += weight;
    }
    if total == 0.0 {
        return Err(Error::EmptyEnsemble);
    }
    Ok(DensityOperator {
        basis: Basis::SignalIdler,
        matrix: acc.unscale(total),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn psi() -> TwoPhotonState {
        TwoPhotonState::canonical(0.1).unwrap().normalized().unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn eight_distinct_modes_and_partner_involution() {
        let mut seen = std::collections::HashSet::new();
        for m in Mode::ALL {
            assert!(seen.insert((m.party(), m.source_point(), m.direction())));
            assert_eq!(m.partner().partner(), m);
            assert_ne!(m.partner().party(), m.party());
            assert_eq!(Mode::new(m.party(), m.source_point(), m.direction()), m);
        }
        assert_eq!(Mode::SignalPDown.partner(), Mode::IdlerPUp);
        assert_eq!(Mode::SignalQ0.partner(), Mode::IdlerQ0);
    }

    #[test]
    fn canonical_state_entries() {
        let s = TwoPhotonState::canonical(0.1).unwrap();
        let nz = s.nonzero();
        assert_eq!(nz.len(), 4);
        for (sig, idl, a) in nz {
            assert_eq!(sig.partner(), idl);
            assert_eq!(a, c(0.1));
        }
        assert!((s.norm_sqr() - 0.04).abs() < 1e-15);
        for (_, _, a) in psi().nonzero() {
            assert!((a - c(0.5)).norm() < 1e-15);
        }
    }

    #[test]
    fn canonical_state_rejects_bad_epsilon() {
        for e in [0.0, 1.0, -0.2, f64::NAN] {
            assert!(matches!(
                TwoPhotonState::canonical(e),
                Err(Error::Domain(_))
            ));
        }
    }

    #[test]
    fn filtered_side_branch_is_the_symmetric_pair() {
        let out = psi()
            .project(&Projector::focal_side())
            .project(&Projector::horizontal_idler());
        assert!((out.norm_sqr() - 0.5).abs() < 1e-15);
        let n = out.normalized().unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((n.amplitude(Mode::SignalP0, Mode::IdlerP0) - c(h)).norm() < 1e-12);
        assert!((n.amplitude(Mode::SignalQ0, Mode::IdlerQ0) - c(h)).norm() < 1e-12);
        assert_eq!(n.nonzero().len(), 2);
    }

    #[test]
    fn filtered_down_branch_vanishes() {
        let out = psi()
            .project(&Projector::focal_down())
            .project(&Projector::horizontal_idler());
        assert!(out.is_zero());
    }

    #[test]
    fn projector_rejects_foreign_modes() {
        assert!(Projector::new(Party::Signal, [Mode::IdlerP0]).is_err());
        let p = Projector::new(Party::Idler, [Mode::IdlerP0, Mode::IdlerQ0]).unwrap();
        assert_eq!(p, Projector::horizontal_idler());
    }

    #[test]
    fn position_mixture_has_no_cross_terms() {
        let rho = conditional_mixture(
            &psi(),
            &[Projector::image_p(), Projector::image_q()],
            &Projector::horizontal_idler(),
        )
        .unwrap();
        let m = rho.matrix();
        for i in 0..16 {
            for j in 0..16 {
                let expected = if i == j && (i == 0 || i == 10) { 0.5 } else { 0.0 };
                assert!((m[(i, j)] - c(expected)).norm() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn momentum_mixture_is_pure() {
        let rho = conditional_mixture(
            &psi(),
            &[Projector::focal_side(), Projector::focal_down()],
            &Projector::horizontal_idler(),
        )
        .unwrap();
        let m = rho.matrix();
        for &i in &[0, 10] {
            for &j in &[0, 10] {
                assert!((m[(i, j)] - c(0.5)).norm() < 1e-12);
            }
        }
        assert!((rho.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_conditioning_is_a_no_op() {
        let rho = conditional_mixture(
            &psi(),
            &[Projector::identity(Party::Signal)],
            &Projector::identity(Party::Idler),
        )
        .unwrap();
        let pure = DensityOperator::pure(&psi()).unwrap();
        assert!(rho.max_abs_diff(&pure).unwrap() < 1e-15);
    }

    #[test]
    fn conditional_mixture_errors() {
        let overlap = [Projector::image_p(), Projector::focal_side()];
        assert!(matches!(
            conditional_mixture(&psi(), &overlap, &Projector::horizontal_idler()),
            Err(Error::Domain(_))
        ));
        let unnormalized = TwoPhotonState::canonical(0.1).unwrap();
        assert!(conditional_mixture(
            &unnormalized,
            &[Projector::image_p()],
            &Projector::horizontal_idler()
        )
        .is_err());
        assert!(matches!(
            conditional_mixture(
                &psi(),
                &[Projector::focal_down()],
                &Projector::horizontal_idler()
            ),
            Err(Error::EmptyEnsemble)
        ));
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut amps = [[c(0.0); 4]; 4];
        amps[0][0] = c(1.0);
        let s = TwoPhotonState::from_amplitudes(amps, 0.1).unwrap();
        let red = DensityOperator::pure(&s).unwrap().partial_trace_signal().unwrap();
        assert_eq!(red.basis(), Basis::Idler);
        assert!((red.matrix()[(0, 0)] - c(1.0)).norm() < 1e-15);
        assert!((red.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reduced_states_agree_between_settings() {
        let filter = Projector::horizontal_idler();
        let rho_p =
            conditional_mixture(&psi(), &[Projector::image_p(), Projector::image_q()], &filter)
                .unwrap();
        let rho_m = conditional_mixture(
            &psi(),
            &[Projector::focal_side(), Projector::focal_down()],
            &filter,
        )
        .unwrap();
        let red_p = rho_p.partial_trace_signal().unwrap();
        let red_m = rho_m.partial_trace_signal().unwrap();
        assert!(red_p.max_abs_diff(&red_m).unwrap() < 1e-12);
        for mode in [Mode::IdlerP0, Mode::IdlerQ0] {
            assert!((red_p.single_mode_probability(mode).unwrap() - 0.5).abs() < 1e-12);
            assert!((red_m.single_mode_probability(mode).unwrap() - 0.5).abs() < 1e-12);
        }
        assert!(red_p.single_mode_probability(Mode::SignalP0).is_err());
        assert!(rho_p.single_mode_probability(Mode::IdlerP0).is_err());
    }

    #[test]
    fn trace_distance_examples() {
        let filter = Projector::horizontal_idler();
        let rho_p =
            conditional_mixture(&psi(), &[Projector::image_p(), Projector::image_q()], &filter)
                .unwrap();
        let rho_m = conditional_mixture(
            &psi(),
            &[Projector::focal_side(), Projector::focal_down()],
            &filter,
        )
        .unwrap();
        assert!(trace_distance(&rho_p, &rho_p).unwrap().abs() < 1e-12);
        assert!((trace_distance(&rho_p, &rho_m).unwrap() - 0.5).abs() < 1e-10);

        let mut a = DMatrix::<Complex64>::zeros(4, 4);
        a[(0, 0)] = c(1.0);
        let mut b = DMatrix::<Complex64>::zeros(4, 4);
        b[(2, 2)] = c(1.0);
        let a = DensityOperator::from_matrix(Basis::Idler, a).unwrap();
        let b = DensityOperator::from_matrix(Basis::Idler, b).unwrap();
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        assert!(trace_distance(&a, &rho_p).is_err());
    }

    #[test]
    fn from_matrix_rejects_non_hermitian_and_negative() {
        let mut m = DMatrix::<Complex64>::zeros(4, 4);
        m[(0, 1)] = c(0.3);
        assert!(DensityOperator::from_matrix(Basis::Idler, m).is_err());
        let mut m = DMatrix::<Complex64>::zeros(4, 4);
        m[(0, 0)] = c(-0.5);
        m[(1, 1)] = c(1.5);
        assert!(DensityOperator::from_matrix(Basis::Idler, m).is_err());
        assert!(DensityOperator::from_matrix(Basis::Idler, DMatrix::zeros(3, 3)).is_err());
    }
}
