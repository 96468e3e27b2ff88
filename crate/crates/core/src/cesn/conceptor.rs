use crate::numerics::{spectral_map, sym_eig, Mat};

use super::CesnError;

/// Soft projection M = R(R + χ⁻²I)⁻¹ onto the state subspace a pattern
/// occupies.
#[derive(Debug, Clone, PartialEq)]
pub struct Conceptor {
    pub m: Mat,
    /// Source correlation. Absent for conceptors built by negation or read
    /// back from a file; [`Conceptor::correlation`] recovers it.
    pub r: Option<Mat>,
    pub aperture: f64,
}

impl Conceptor {
    pub fn from_correlation(r: Mat, aperture: f64) -> Conceptor {
        let m = conceptor_matrix(&r, aperture);
        Conceptor { m, r: Some(r), aperture }
    }

    pub fn zero(n: usize, aperture: f64) -> Conceptor {
        Conceptor { m: Mat::zeros(n, n), r: Some(Mat::zeros(n, n)), aperture }
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        sym_eig(&self.m.symmetrized()).expect("conceptor is symmetric").0
    }

    /// R itself, or χ⁻²M(I - M)⁻¹ when only M is known. Eigenvalues of M at
    /// or above one are clamped just below it.
    pub fn correlation(&self) -> Mat {
        if let Some(r) = &self.r {
            return r.clone();
        }
        let a = self.aperture.powi(-2);
        let (vals, vecs) = sym_eig(&self.m.symmetrized()).expect("conceptor is symmetric");
        spectral_map(&vals, &vecs, |m| {
            let m = m.clamp(0.0, 1.0 - 1e-15);
            a * m / (1.0 - m)
        })
    }

    /// Fraction of the reservoir this conceptor leaves free, trace(M)/N.
    pub fn mean_eigenvalue(&self) -> f64 {
        self.m.trace() / self.dim() as f64
    }
}

/// Eigenvalue map s ↦ s/(s + χ⁻²) applied to a correlation matrix.
pub fn conceptor_matrix(r: &Mat, aperture: f64) -> Mat {
    let a = aperture.powi(-2);
    let (vals, vecs) = sym_eig(&r.symmetrized()).expect("correlation is symmetric");
    spectral_map(&vals, &vecs, |s| {
        let s = s.max(0.0);
        s / (s + a)
    })
    .symmetrized()
}

/// Conceptor of a state sequence stored as columns: R = (1/n)·XXᵀ.
pub fn compute_conceptor(states: &Mat, aperture: f64) -> Conceptor {
    let n = states.cols().max(1) as f64;
    let r = (states * &states.transpose()).scale(1.0 / n).symmetrized();
    Conceptor::from_correlation(r, aperture)
}

/// I - M.
pub fn conceptor_not(c: &Conceptor) -> Conceptor {
    let n = c.dim();
    Conceptor { m: &Mat::identity(n) - &c.m, r: None, aperture: c.aperture }
}

/// Disjunction by adding source correlations.
pub fn conceptor_or(a: &Conceptor, b: &Conceptor) -> Result<Conceptor, CesnError> {
    if a.aperture != b.aperture {
        return Err(CesnError::ApertureMismatch(a.aperture, b.aperture));
    }
    if a.dim() != b.dim() {
        return Err(CesnError::Dimension(format!("conceptor sizes {} and {}", a.dim(), b.dim())));
    }
    Ok(Conceptor::from_correlation(&a.correlation() + &b.correlation(), a.aperture))
}

/// Unused reservoir space NOT(OR of all conceptors) and its quota
/// trace/N.
pub fn free_memory(conceptors: &[Conceptor], n: usize, aperture: f64) -> Result<(Conceptor, f64), CesnError> {
    let mut acc = Conceptor::zero(n, aperture);
    for c in conceptors {
        acc = conceptor_or(&acc, c)?;
    }
    let f = conceptor_not(&acc);
    let quota = f.m.trace() / n as f64;
    Ok((f, quota))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::tol;
    use crate::scenario::RandomSource;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_states(n: usize, len: usize, seed: u64) -> Mat {
        let mut rng = RandomSource::new(seed).rng();
        let data: Vec<f64> = (0..n * len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Mat::from_rows(n, len, &data)
    }

    #[test]
    fn identity_correlation() {
        let c = Conceptor::from_correlation(Mat::identity(3), 15.0);
        let expect = Mat::identity(3).scale(225.0 / 226.0);
        assert!((&c.m - &expect).max_abs() < 1e-14);
        assert!((225.0_f64 / 226.0 - 0.99558).abs() < 1e-5);
    }

    #[test]
    fn diagonal_correlation() {
        let c = Conceptor::from_correlation(Mat::from_diag(&[4.0, 1.0]), 1.0);
        assert!((&c.m - &Mat::from_diag(&[0.8, 0.5])).max_abs() < 1e-14);
    }

    #[test]
    fn aperture_limits() {
        let r = Mat::from_diag(&[2.0, 0.5, 0.0]);
        let wide = Conceptor::from_correlation(r.clone(), 1e6);
        assert!((&wide.m - &Mat::from_diag(&[1.0, 1.0, 0.0])).max_abs() < 1e-9);
        let narrow = Conceptor::from_correlation(r, 1e-6);
        assert!(narrow.m.max_abs() < 1e-9);
    }

    #[test]
    fn not_examples() {
        let z = Conceptor::zero(4, 15.0);
        assert_eq!(conceptor_not(&z).m, Mat::identity(4));
        let c = compute_conceptor(&random_states(5, 40, 1), 15.0);
        let nn = conceptor_not(&conceptor_not(&c));
        assert!((&nn.m - &c.m).max_abs() <= tol::CONCEPTOR_ALGEBRA);
        let mut e = c.eigenvalues();
        let mut en: Vec<f64> = conceptor_not(&c).eigenvalues().iter().map(|v| 1.0 - v).collect();
        e.sort_by(f64::total_cmp);
        en.sort_by(f64::total_cmp);
        for (a, b) in e.iter().zip(&en) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn or_examples() {
        let a = compute_conceptor(&random_states(6, 30, 2), 15.0);
        let b = compute_conceptor(&random_states(6, 30, 3), 15.0);
        let z = Conceptor::zero(6, 15.0);
        assert!((&conceptor_or(&a, &z).unwrap().m - &a.m).max_abs() <= tol::CONCEPTOR_ALGEBRA);
        let ab = conceptor_or(&a, &b).unwrap();
        let ba = conceptor_or(&b, &a).unwrap();
        assert!((&ab.m - &ba.m).max_abs() <= tol::CONCEPTOR_ALGEBRA);

        let aa = conceptor_or(&a, &a).unwrap();
        let (ev_a, _) = sym_eig(a.r.as_ref().unwrap()).unwrap();
        let (ev_aa, _) = sym_eig(&aa.m).unwrap();
        let chi2 = 15f64.powi(-2);
        for (s, got) in ev_a.iter().zip(&ev_aa) {
            let s = s.max(0.0);
            assert!((got - 2.0 * s / (2.0 * s + chi2)).abs() < 1e-9);
            assert!(*got >= s / (s + chi2) - 1e-12);
        }
        let other = Conceptor::zero(6, 10.0);
        assert!(matches!(conceptor_or(&a, &other), Err(CesnError::ApertureMismatch(..))));
    }

    #[test]
    fn correlation_recovered_from_matrix() {
        let a = compute_conceptor(&random_states(5, 50, 4), 15.0);
        let stripped = Conceptor { r: None, ..a.clone() };
        let back = stripped.correlation();
        assert!((&back - a.r.as_ref().unwrap()).max_abs() < 1e-8);
    }

    #[test]
    fn free_memory_examples() {
        let (f, q) = free_memory(&[], 5, 15.0).unwrap();
        assert_eq!(q, 1.0);
        assert_eq!(f.m, Mat::identity(5));

        let full = Conceptor::from_correlation(Mat::identity(5).scale(10.0), 1e4);
        let (_, q) = free_memory(&[full], 5, 1e4).unwrap();
        assert!(q < 1e-6);

        let mut list = Vec::new();
        let mut prev = 1.0;
        for s in 0..4 {
            list.push(compute_conceptor(&random_states(8, 3, 10 + s), 15.0));
            let (_, q) = free_memory(&list, 8, 15.0).unwrap();
            assert!(q <= prev + 1e-12);
            prev = q;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn eigenvalues_in_unit_interval(seed in 0u64..10_000, len in 1usize..30, chi in 0.5f64..200.0) {
            let c = compute_conceptor(&random_states(6, len, seed), chi);
            for e in c.eigenvalues() {
                prop_assert!((-tol::CONCEPTOR_ALGEBRA..1.0).contains(&e));
            }
        }
    }
}
