//! Dense symmetric eigendecomposition (cyclic Jacobi) with residual
//! certificates, Gershgorin localization of the top pair and extraction of
//! the `(u, v)` entries of the two leading eigenvectors.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::VertexPair;
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 100;

/// Default residual/orthogonality tolerance for double precision.
pub const DEFAULT_TOL_F64: f64 = 1e-10;

/// Entries of the top eigenvectors below this are reported as degenerate.
pub const DEGENERATE_ENTRY: f64 = 1e-13;

/// Full orthonormal eigendecomposition, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct SpectralData<T> {
    pub eigenvalues: Vec<T>,
    /// Column `j` is the eigenvector of `eigenvalues[j]`.
    pub eigenvectors: DenseMatrix<T>,
    /// `||A phi_j - lambda_j phi_j||_2` per eigenpair.
    pub residuals: Vec<T>,
    pub residual_norm: T,
    pub ortho_defect: T,
    /// Max absolute row sum of the decomposed matrix.
    pub matrix_norm: T,
    pub sweeps: usize,
}

impl<T: Scalar> SpectralData<T> {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    #[inline]
    pub fn entry(&self, x: usize, j: usize) -> T {
        self.eigenvectors[(x, j)]
    }

    /// Distance from `lambda_j` to the rest of the spectrum.
    pub fn separation(&self, j: usize) -> T {
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, &l)| (l - self.eigenvalues[j]).abs())
            .fold(T::infinity(), T::min)
    }

    /// Bound on `||phi_hat_j - phi_j||_2` from the residual and the spectral
    /// separation (sin-theta theorem), capped at `sqrt(2)`.
    pub fn vector_error(&self, j: usize) -> f64 {
        let r = self.residuals[j].as_f64();
        let sep = self.separation(j).as_f64() - r;
        let cap = std::f64::consts::SQRT_2;
        if !(sep > 0.0) {
            return cap;
        }
        (cap * r / sep).min(cap)
    }
}

/// Decomposes a symmetric matrix. `tol` bounds the residuals relative to
/// `max(||A||_inf, 1)` and the orthogonality defect absolutely.
pub fn eigendecompose_symmetric<T: Scalar>(matrix: &DenseMatrix<T>, tol: f64) -> Result<SpectralData<T>> {
    let n = matrix.rows();
    if n == 0 || !matrix.is_square() {
        return Err(Error::InvalidArgument(format!("expected a non-empty square matrix, got {}x{}", matrix.rows(), matrix.cols())));
    }
    let max_abs = matrix.as_slice().iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    if matrix.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let sym_tol = T::cast(1e-14) * max_abs;
    for i in 0..n {
        for j in i + 1..n {
            if (matrix[(i, j)] - matrix[(j, i)]).abs() > sym_tol {
                return Err(Error::InvalidArgument(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    let matrix_norm = (0..n)
        .map(|i| matrix.row(i).iter().fold(T::zero(), |acc, &x| acc + x.abs()))
        .fold(T::zero(), T::max);

    let (values, vectors, sweeps) = jacobi(matrix);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal));
    let eigenvalues: Vec<T> = order.iter().map(|&k| values[k]).collect();
    let mut eigenvectors = DenseMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    for j in 0..n {
        normalize_sign(&mut eigenvectors, j);
    }

    let mut residuals = Vec::with_capacity(n);
    for j in 0..n {
        let mut sq = T::zero();
        for i in 0..n {
            let mut acc = -eigenvalues[j] * eigenvectors[(i, j)];
            for k in 0..n {
                acc += matrix[(i, k)] * eigenvectors[(k, j)];
            }
            sq += acc * acc;
        }
        residuals.push(sq.sqrt());
    }
    let residual_norm = residuals.iter().copied().fold(T::zero(), T::max);
    let mut ortho_defect = T::zero();
    for a in 0..n {
        for b in a..n {
            let mut dot = T::zero();
            for i in 0..n {
                dot += eigenvectors[(i, a)] * eigenvectors[(i, b)];
            }
            let target = if a == b { T::one() } else { T::zero() };
            ortho_defect = ortho_defect.max((dot - target).abs());
        }
    }

    let scale = matrix_norm.max(T::one());
    if residual_norm > T::cast(tol) * scale || ortho_defect > T::cast(tol) {
        return Err(Error::NoConvergence { sweeps, residual: residual_norm.as_f64().max(ortho_defect.as_f64()) });
    }
    Ok(SpectralData { eigenvalues, eigenvectors, residuals, residual_norm, ortho_defect, matrix_norm, sweeps })
}

/// Makes the first entry of (near-)largest magnitude positive.
fn normalize_sign<T: Scalar>(v: &mut DenseMatrix<T>, j: usize) {
    let n = v.rows();
    let max = (0..n).map(|i| v[(i, j)].abs()).fold(T::zero(), T::max);
    let threshold = max * (T::one() - T::cast(1e-9));
    if let Some(i) = (0..n).find(|&i| v[(i, j)].abs() >= threshold) {
        if v[(i, j)] < T::zero() {
            for k in 0..n {
                v[(k, j)] = -v[(k, j)];
            }
        }
    }
}

/// Cyclic Jacobi on a copy of `matrix`; returns unsorted eigenvalues, eigenvector columns, sweeps.
fn jacobi<T: Scalar>(matrix: &DenseMatrix<T>) -> (Vec<T>, DenseMatrix<T>, usize) {
    let n = matrix.rows();
    let mut a = matrix.clone();
    let mut v = DenseMatrix::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() });
    let eps = T::cast(T::UNIT_ROUNDOFF);
    let hundred = T::cast(100.0);
    let half = T::cast(0.5);
    let frob = a.as_slice().iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= eps * frob {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.is_zero() {
                    continue;
                }
                let (app, aqq) = (a[(p, p)], a[(q, q)]);
                let g = hundred * apq.abs();
                if sweeps > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[(p, q)] = T::zero();
                    a[(q, p)] = T::zero();
                    continue;
                }
                let h = aqq - app;
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = half * h / apq;
                    let t = (theta.abs() + (theta * theta + T::one()).sqrt()).recip();
                    if theta < T::zero() { -t } else { t }
                };
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;
                let tau = s / (T::one() + c);
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let (grp, grq) = (a[(r, p)], a[(r, q)]);
                    let new_p = grp - s * (grq + grp * tau);
                    let new_q = grq + s * (grp - grq * tau);
                    a[(r, p)] = new_p;
                    a[(p, r)] = new_p;
                    a[(r, q)] = new_q;
                    a[(q, r)] = new_q;
                }
                for r in 0..n {
                    let (vp, vq) = (v[(r, p)], v[(r, q)]);
                    v[(r, p)] = vp - s * (vq + vp * tau);
                    v[(r, q)] = vq + s * (vp - vq * tau);
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v, sweeps)
}

/// Counts of eigenvalues near `Q` and in the bulk interval `[-m, m]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GershgorinSplit {
    pub q: f64,
    pub m: usize,
    pub top_count: usize,
    pub bulk_count: usize,
    /// Smallest distance of a top eigenvalue inside `[Q-m, Q+m]` to the interval ends.
    pub top_margin: f64,
    /// Smallest distance of a bulk eigenvalue inside `[-m, m]` to the interval ends.
    pub bulk_margin: f64,
    pub slack: f64,
}

/// For `Q > 2m`, checks that exactly two eigenvalues lie in `[Q-m, Q+m]` and the rest in `[-m, m]`.
pub fn gershgorin_split<T: Scalar>(spec: &SpectralData<T>, q: f64, m: usize) -> Result<GershgorinSplit> {
    let mf = m as f64;
    if !(q > 2.0 * mf) {
        return Err(Error::NotApplicable(format!("Gershgorin split needs Q > 2m (Q = {q}, m = {m})")));
    }
    let slack = 1e-9 * (q.abs() + mf) + spec.residual_norm.as_f64();
    let (mut top_count, mut bulk_count) = (0, 0);
    let (mut top_margin, mut bulk_margin) = (f64::INFINITY, f64::INFINITY);
    for &l in &spec.eigenvalues {
        let l = l.as_f64();
        if (l - q).abs() <= mf + slack {
            top_count += 1;
            top_margin = top_margin.min(mf - (l - q).abs());
        } else if l.abs() <= mf + slack {
            bulk_count += 1;
            bulk_margin = bulk_margin.min(mf - l.abs());
        }
    }
    let n = spec.n();
    if top_count != 2 || bulk_count != n - 2 {
        return Err(Error::Numerical(format!(
            "Gershgorin split violated: {top_count} eigenvalues near Q and {bulk_count} in [-m, m] for n = {n}"
        )));
    }
    if n == 2 {
        bulk_margin = mf;
    }
    Ok(GershgorinSplit { q, m, top_count, bulk_count, top_margin, bulk_margin, slack })
}

/// `(u, v)` entries of the two leading eigenvectors, signed so `mu1 > 0` and `mu2 > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TopPair<T> {
    pub lambda1: T,
    pub lambda2: T,
    pub mu1: T,
    pub nu1: T,
    pub mu2: T,
    pub nu2: T,
    pub gap: T,
    /// Error bar on `gap` from the eigenpair residuals.
    pub gap_error: f64,
    /// Error bars on the extracted entries of `phi_1` and `phi_2`.
    pub entry_error: [f64; 2],
    pub warnings: Vec<String>,
}

impl<T: Scalar> TopPair<T> {
    /// Gap exceeds ten times its error bar.
    pub fn gap_reliable(&self) -> bool {
        self.gap.as_f64() > 10.0 * self.gap_error
    }

    /// Whether the pair is resolved well enough that rerunning in higher precision is pointless.
    pub fn well_conditioned(&self) -> bool {
        self.entry_error[0].max(self.entry_error[1]) <= 1e-9 && self.gap_error <= 1e-7 * self.gap.as_f64()
    }
}

pub fn top_pair<T: Scalar>(spec: &SpectralData<T>, pair: &VertexPair) -> Result<TopPair<T>> {
    if spec.n() < 2 {
        return Err(Error::InvalidArgument("need at least two eigenpairs".into()));
    }
    if pair.u >= spec.n() || pair.v >= spec.n() {
        return Err(Error::VertexOutOfRange { vertex: pair.u.max(pair.v), n: spec.n() });
    }
    let signed = |j: usize| {
        let (mu, nu) = (spec.entry(pair.u, j), spec.entry(pair.v, j));
        if mu < T::zero() { (-mu, -nu) } else { (mu, nu) }
    };
    let (mu1, nu1) = signed(0);
    let (mu2, nu2) = signed(1);
    let mut warnings = Vec::new();
    for (name, x) in [("mu1", mu1), ("mu2", mu2)] {
        if x.abs().as_f64() < DEGENERATE_ENTRY {
            warnings.push(format!("{name} = {:e} is below {DEGENERATE_ENTRY:e}; sign normalization is degenerate", x.as_f64()));
        }
    }
    let (lambda1, lambda2) = (spec.eigenvalues[0], spec.eigenvalues[1]);
    let gap = lambda1 - lambda2;
    let gap_error = spec.residuals[0].as_f64()
        + spec.residuals[1].as_f64()
        + 4.0 * T::UNIT_ROUNDOFF * lambda1.abs().as_f64().max(lambda2.abs().as_f64());
    let entry_error = [spec.vector_error(0), spec.vector_error(1)];
    if gap.as_f64() <= 10.0 * gap_error {
        warnings.push(format!("gap {:e} is within ten error bars ({gap_error:e}); readout times are UNRELIABLE", gap.as_f64()));
    }
    Ok(TopPair { lambda1, lambda2, mu1, nu1, mu2, nu2, gap, gap_error, entry_error, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::build_hamiltonian;
    use crate::families;
    use crate::graph::Graph;
    use proptest::prelude::*;
    use crate::dd::DoubleDouble;

    fn ham(g: &Graph, u: usize, v: usize, q: f64) -> (DenseMatrix<f64>, VertexPair) {
        let pair = VertexPair::new(g, u, v).unwrap();
        (build_hamiltonian::<f64>(g, &pair, q).unwrap().matrix, pair)
    }

    #[test]
    fn k2_closed_form() {
        let q = 5.0;
        let h: DenseMatrix<f64> = DenseMatrix::from_rows(&[vec![q, 1.0], vec![1.0, q]]);
        let s = eigendecompose_symmetric(&h, 1e-12).unwrap();
        assert!((s.eigenvalues[0] - 6.0f64).abs() < 1e-14 && (s.eigenvalues[1] - 4.0f64).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.entry(0, 0) - r).abs() < 1e-15 && (s.entry(1, 0) - r).abs() < 1e-15);
        assert!((s.entry(0, 1).abs() - r).abs() < 1e-15 && (s.entry(0, 1) + s.entry(1, 1)).abs() < 1e-15);
    }

    #[test]
    fn one_by_one() {
        let s = eigendecompose_symmetric(&DenseMatrix::from_rows(&[vec![-3.5f64]]), 1e-12).unwrap();
        assert_eq!(s.eigenvalues, vec![-3.5]);
        assert_eq!(s.entry(0, 0), 1.0);
    }

    #[test]
    fn p3_constructed_eigenpair() {
        // (1, 2/l, 1) is an eigenvector for l = 5 when Q = l - 2/l = 4.6
        let (h, _) = ham(&Graph::path(3), 0, 2, 4.6);
        let s = eigendecompose_symmetric(&h, 1e-12).unwrap();
        let j = s.eigenvalues.iter().position(|&l| (l - 5.0).abs() < 1e-12).expect("eigenvalue 5");
        let scale = s.entry(0, j);
        for (x, want) in [1.0, 0.4, 1.0].into_iter().enumerate() {
            assert!((s.entry(x, j) / scale - want).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let h = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]);
        assert!(matches!(eigendecompose_symmetric(&h, 1e-12), Err(Error::InvalidArgument(_))));
        assert!(eigendecompose_symmetric(&DenseMatrix::<f64>::zeros(0, 0), 1e-12).is_err());
    }

    #[test]
    fn gershgorin_examples() {
        let (h, _) = ham(&Graph::path(5), 0, 4, 10.0);
        let s = eigendecompose_symmetric(&h, 1e-12).unwrap();
        let split = gershgorin_split(&s, 10.0, 2).unwrap();
        assert_eq!((split.top_count, split.bulk_count), (2, 3));
        assert!(split.top_margin > 0.0 && split.bulk_margin > 0.0);
        assert!(matches!(gershgorin_split(&s, 4.0, 2), Err(Error::NotApplicable(_))));

        let (h, _) = ham(&Graph::path(2), 0, 1, 5.0);
        let s = eigendecompose_symmetric(&h, 1e-12).unwrap();
        let split = gershgorin_split(&s, 5.0, 1).unwrap();
        assert_eq!((split.top_count, split.bulk_count), (2, 0));
    }

    #[test]
    fn top_pair_signs() {
        let (h, pair) = ham(&Graph::path(2), 0, 1, 5.0);
        let tp = top_pair(&eigendecompose_symmetric(&h, 1e-12).unwrap(), &pair).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((tp.mu1 - r).abs() < 1e-15 && (tp.nu1 - r).abs() < 1e-15);
        assert!((tp.mu2 - r).abs() < 1e-15 && (tp.nu2 + r).abs() < 1e-15);
        assert!((tp.gap - 2.0).abs() < 1e-14);

        let (h, pair) = ham(&Graph::path(5), 0, 4, 227.0);
        let tp = top_pair(&eigendecompose_symmetric(&h, 1e-12).unwrap(), &pair).unwrap();
        assert!(tp.mu1 * tp.nu1 > 0.0 && tp.mu2 * tp.nu2 < 0.0);
    }

    #[test]
    fn p3_entries_are_pinched_near_half() {
        let q = 40.0;
        let (h, pair) = ham(&Graph::path(3), 0, 2, q);
        let tp = top_pair(&eigendecompose_symmetric(&h, 1e-12).unwrap(), &pair).unwrap();
        let eps = (22.0 * 8.0 / ((q - 2.0) * (q - 2.0))).max(0.0);
        for x in [tp.mu1, tp.nu1, tp.mu2, tp.nu2] {
            assert!((x * x - 0.5).abs() <= eps);
        }
    }

    #[test]
    fn double_double_resolves_tiny_gaps() {
        let g = Graph::path(7);
        let pair = VertexPair::new(&g, 0, 6).unwrap();
        let h = build_hamiltonian::<DoubleDouble>(&g, &pair, 452.0).unwrap();
        let s = eigendecompose_symmetric(&h.matrix, 1e-26).unwrap();
        let tp = top_pair(&s, &pair).unwrap();
        assert!(tp.gap_reliable(), "{tp:?}");
        assert!(tp.well_conditioned());
        let h64 = build_hamiltonian::<f64>(&g, &pair, 452.0).unwrap();
        let tp64 = top_pair(&eigendecompose_symmetric(&h64.matrix, 1e-10).unwrap(), &pair).unwrap();
        assert!(!tp64.well_conditioned());
    }

    #[test]
    fn f32_instantiation() {
        let g = Graph::cycle(5);
        let pair = VertexPair::new(&g, 0, 2).unwrap();
        let h = build_hamiltonian::<f32>(&g, &pair, 9.0).unwrap();
        let s = eigendecompose_symmetric(&h.matrix, 1e-5).unwrap();
        let trace: f32 = s.eigenvalues.iter().sum();
        assert!((trace - 18.0).abs() < 1e-4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn decomposition_contract(n in 2usize..14, seed in any::<u64>(), qf in 0.0f64..12.0, a in any::<u64>()) {
            let g = families::random_connected(n, 0.3, seed);
            let u = (a % n as u64) as usize;
            let v = (u + 1) % n;
            let m = g.max_degree() as f64;
            let q = qf * m;
            let (h, pair) = ham(&g, u, v, q);
            let s = eigendecompose_symmetric(&h, 1e-10).unwrap();
            prop_assert!(s.residual_norm <= 1e-10 * (q.abs() + m));
            prop_assert!(s.ortho_defect <= 1e-10);
            let trace: f64 = s.eigenvalues.iter().sum();
            prop_assert!((trace - 2.0 * q).abs() <= 1e-9 * (q.abs() + m) * n as f64);
            prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            // reconstruction
            let mut err = 0.0;
            let mut norm = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let r: f64 = (0..n).map(|k| s.entry(i, k) * s.eigenvalues[k] * s.entry(j, k)).sum();
                    err += (r - h[(i, j)]).powi(2);
                    norm += h[(i, j)].powi(2);
                }
            }
            prop_assert!(err.sqrt() <= 1e-9 * norm.sqrt());
            if q > 2.0 * m {
                prop_assert!(gershgorin_split(&s, q, g.max_degree()).is_ok());
                let tp = top_pair(&s, &pair).unwrap();
                prop_assert!(tp.mu1 > 0.0 && tp.nu1 > 0.0);
            }
        }

        #[test]
        fn top_eigenvalues_move_by_at_most_the_perturbation(n in 3usize..12, seed in any::<u64>(), h in -1.0f64..1.0) {
            let g = families::random_connected(n, 0.3, seed);
            let m = g.max_degree() as f64;
            let q = 3.0 * m + 1.0;
            let (a, _) = ham(&g, 0, n - 1, q);
            let (b, _) = ham(&g, 0, n - 1, q + h);
            let sa = eigendecompose_symmetric(&a, 1e-10).unwrap();
            let sb = eigendecompose_symmetric(&b, 1e-10).unwrap();
            for j in 0..2 {
                prop_assert!((sa.eigenvalues[j] - sb.eigenvalues[j]).abs() <= h.abs() + 1e-9 * (q + m));
            }
        }
    }
}
