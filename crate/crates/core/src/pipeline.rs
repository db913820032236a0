//! End-to-end evaluation of one `(graph, pair, Q)` instance, with automatic
//! escalation from `f64` to double-double when the top eigenpair is not
//! resolved in double precision.

use serde::Serialize;

use crate::dd::DoubleDouble;
use crate::dynamics::{self, Hamiltonian, SearchOptions, TMaxPolicy, TransferReport};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexPair};
use crate::scalar::{Precision, Scalar};
use crate::spectral::{self, GershgorinSplit, SpectralData, TopPair};
use crate::walks::{self, Cospectrality, TunnelingClass};

/// Eigensolver tolerance appropriate for `T`.
pub fn eigen_tolerance<T: Scalar>() -> f64 {
    (T::UNIT_ROUNDOFF * 1e6).min(1e-4)
}

/// Hamiltonian, spectrum and top pair in one precision.
#[derive(Clone, Debug)]
pub struct Solved<T> {
    pub hamiltonian: Hamiltonian<T>,
    pub spectrum: SpectralData<T>,
    pub top: TopPair<T>,
}

/// Minimum of `p` over `t = (pi + s) / gap`, `s` uniform in `[-delta, delta]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowScan {
    pub delta: f64,
    pub samples: usize,
    pub t_lo: f64,
    pub t_hi: f64,
    pub min_p: f64,
    pub argmin_t: f64,
}

impl<T: Scalar> Solved<T> {
    pub fn new(g: &Graph, pair: &VertexPair, q: f64) -> Result<Self> {
        let hamiltonian = dynamics::build_hamiltonian::<T>(g, pair, q)?;
        let spectrum = spectral::eigendecompose_symmetric(&hamiltonian.matrix, eigen_tolerance::<T>())?;
        let top = spectral::top_pair(&spectrum, pair)?;
        Ok(Solved { hamiltonian, spectrum, top })
    }

    pub fn pair(&self) -> &VertexPair {
        &self.hamiltonian.pair
    }

    /// `pi / gap` without the reliability check.
    pub fn t0_raw(&self) -> T {
        T::PI() / self.top.gap
    }

    pub fn transfer_strength(&self, t: T) -> f64 {
        dynamics::transfer_strength(&self.spectrum, self.pair(), t)
    }

    pub fn p_t0(&self) -> f64 {
        self.transfer_strength(self.t0_raw())
    }

    /// Error bar on `p(t0)`: the uncertainty of `t0` (from the gap error) times
    /// the slope bound of `p`, plus the eigenvector entry errors.
    pub fn p_t0_error(&self) -> f64 {
        let top = &self.top;
        let gap = top.gap.as_f64();
        let dt = T::PI().as_f64() * top.gap_error / (gap * (gap - top.gap_error).max(f64::MIN_POSITIVE));
        let slope = 2.0 * dynamics::amplitude_lipschitz(&self.spectrum, self.pair());
        slope * dt + 4.0 * (top.entry_error[0] + top.entry_error[1])
    }

    pub fn well_conditioned(&self) -> bool {
        self.top.well_conditioned() && self.p_t0_error() <= 1e-10
    }

    pub fn window(&self, delta: f64, samples: usize) -> WindowScan {
        let samples = samples.max(1);
        let pi = T::PI();
        let mut min_p = f64::INFINITY;
        let mut argmin_t = f64::NAN;
        let time = |i: usize| {
            let s = if samples == 1 { 0.0 } else { delta * (2.0 * i as f64 / (samples - 1) as f64 - 1.0) };
            (pi + T::cast(s)) / self.top.gap
        };
        for i in 0..samples {
            let t = time(i);
            let p = self.transfer_strength(t);
            if p < min_p {
                min_p = p;
                argmin_t = t.as_f64();
            }
        }
        WindowScan { delta, samples, t_lo: time(0).as_f64(), t_hi: time(samples - 1).as_f64(), min_p, argmin_t }
    }

    pub fn search(&self, t_max: f64, opts: SearchOptions) -> Result<TransferReport> {
        dynamics::fidelity_search_with(&self.spectrum, &self.top, self.pair(), t_max, opts)
    }

    pub fn gershgorin(&self, m: usize) -> Result<GershgorinSplit> {
        spectral::gershgorin_split(&self.spectrum, self.hamiltonian.q.as_f64(), m)
    }

    pub fn top_f64(&self) -> TopPair<f64> {
        let t = &self.top;
        TopPair {
            lambda1: t.lambda1.as_f64(),
            lambda2: t.lambda2.as_f64(),
            mu1: t.mu1.as_f64(),
            nu1: t.nu1.as_f64(),
            mu2: t.mu2.as_f64(),
            nu2: t.nu2.as_f64(),
            gap: t.gap.as_f64(),
            gap_error: t.gap_error,
            entry_error: t.entry_error,
            warnings: t.warnings.clone(),
        }
    }
}

/// A solved instance in whichever precision was needed.
#[derive(Clone, Debug)]
pub enum Solution {
    Double(Solved<f64>),
    DoubleDouble(Solved<DoubleDouble>),
}

macro_rules! dispatch {
    ($self:expr, $s:ident => $body:expr) => {
        match $self {
            Solution::Double($s) => $body,
            Solution::DoubleDouble($s) => $body,
        }
    };
}

impl Solution {
    pub fn precision(&self) -> Precision {
        match self {
            Solution::Double(_) => Precision::Double,
            Solution::DoubleDouble(_) => Precision::DoubleDouble,
        }
    }

    pub fn top(&self) -> TopPair<f64> {
        dispatch!(self, s => s.top_f64())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        dispatch!(self, s => s.spectrum.eigenvalues.iter().map(|x| x.as_f64()).collect())
    }

    /// Eigenvector `j` rounded to `f64`.
    pub fn eigenvector(&self, j: usize) -> Vec<f64> {
        dispatch!(self, s => s.spectrum.eigenvectors.column(j).iter().map(|x| x.as_f64()).collect())
    }

    pub fn residual_norm(&self) -> f64 {
        dispatch!(self, s => s.spectrum.residual_norm.as_f64())
    }

    pub fn t0(&self) -> f64 {
        dispatch!(self, s => s.t0_raw().as_f64())
    }

    pub fn p_t0(&self) -> f64 {
        dispatch!(self, s => s.p_t0())
    }

    pub fn p_t0_error(&self) -> f64 {
        dispatch!(self, s => s.p_t0_error())
    }

    pub fn transfer_strength(&self, t: f64) -> f64 {
        dispatch!(self, s => s.transfer_strength(Scalar::cast(t)))
    }

    pub fn window(&self, delta: f64, samples: usize) -> WindowScan {
        dispatch!(self, s => s.window(delta, samples))
    }

    pub fn search(&self, t_max: f64, opts: SearchOptions) -> Result<TransferReport> {
        dispatch!(self, s => s.search(t_max, opts))
    }

    pub fn gershgorin(&self, m: usize) -> Result<GershgorinSplit> {
        dispatch!(self, s => s.gershgorin(m))
    }
}

/// Solves `H = A + Q D_uv`. `Auto` starts in `f64` and reruns in
/// double-double when the top pair is not well conditioned or the `f64`
/// eigensolver fails.
pub fn solve(g: &Graph, pair: &VertexPair, q: f64, precision: Precision) -> Result<Solution> {
    match precision {
        Precision::Double => Solved::new(g, pair, q).map(Solution::Double),
        Precision::DoubleDouble => Solved::new(g, pair, q).map(Solution::DoubleDouble),
        Precision::Auto => match Solved::<f64>::new(g, pair, q) {
            Ok(s) if s.well_conditioned() => Ok(Solution::Double(s)),
            Ok(_) | Err(Error::NoConvergence { .. }) => Solved::new(g, pair, q).map(Solution::DoubleDouble),
            Err(e) => Err(e),
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyzeOptions {
    pub precision: Precision,
    pub t_max: TMaxPolicy,
    pub search: SearchOptions,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions { precision: Precision::Auto, t_max: TMaxPolicy::default(), search: SearchOptions::default() }
    }
}

/// Everything `analyze` reports about one instance.
#[derive(Clone, Debug, Serialize)]
pub struct Analysis {
    pub graph: String,
    pub n: usize,
    pub u: usize,
    pub v: usize,
    #[serde(rename = "Q")]
    pub q: f64,
    pub m: usize,
    pub d: usize,
    pub cospectrality: Cospectrality,
    pub tunneling_class: TunnelingClass,
    pub precision: Precision,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gap: f64,
    pub gap_error: f64,
    pub readout: &'static str,
    pub t0: f64,
    pub p_t0: f64,
    pub t_star: f64,
    pub p_star: f64,
    pub p_upper: f64,
    pub search: TransferReport,
    pub gershgorin: Option<GershgorinSplit>,
    pub warnings: Vec<String>,
}

pub fn analyze(g: &Graph, pair: &VertexPair, q: f64, opts: &AnalyzeOptions) -> Result<Analysis> {
    let m = g.max_degree();
    let co = walks::cospectrality(g, pair)?;
    let class = walks::classify_tunneling(co.c, pair.d);
    let solution = solve(g, pair, q, opts.precision)?;
    let top = solution.top();
    let mut warnings = top.warnings.clone();
    if !co.closed_walks.consistent {
        warnings.push("avoiding-walk and closed-walk cospectrality disagree below n".into());
    }
    let gershgorin = match solution.gershgorin(m) {
        Ok(split) => Some(split),
        Err(Error::NotApplicable(msg)) => {
            warnings.push(format!("{msg}; top pair is not certified"));
            None
        }
        Err(e) => return Err(e),
    };
    let t_max = opts.t_max.resolve(q, m, pair.d, solution.t0());
    let search = solution.search(t_max, opts.search)?;
    if !search.complete {
        warnings.push(format!("fidelity search stopped at its budget; p_star is a lower bound and p_upper = {}", search.p_upper));
    }
    Ok(Analysis {
        graph: g.fingerprint(),
        n: g.n(),
        u: pair.u,
        v: pair.v,
        q,
        m,
        d: pair.d,
        cospectrality: co.c,
        tunneling_class: class,
        precision: solution.precision(),
        lambda1: top.lambda1,
        lambda2: top.lambda2,
        gap: top.gap,
        gap_error: top.gap_error,
        readout: if search.reliable { "RELIABLE" } else { "UNRELIABLE" },
        t0: search.t0,
        p_t0: search.p_t0,
        t_star: search.t_star,
        p_star: search.p_star,
        p_upper: search.p_upper,
        search,
        gershgorin,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn k2_analysis() {
        let g = Graph::path(2);
        let pair = VertexPair::new(&g, 0, 1).unwrap();
        let a = analyze(&g, &pair, 5.0, &AnalyzeOptions::default()).unwrap();
        assert!((a.t0 - FRAC_PI_2).abs() < 1e-14);
        assert!((a.p_t0 - 1.0).abs() < 1e-12);
        assert_eq!(a.precision, Precision::Double);
        assert_eq!(a.tunneling_class, TunnelingClass::Asymptotic);
        assert!(a.gershgorin.is_some());
    }

    #[test]
    fn auto_escalates_for_distant_pairs() {
        let g = Graph::path(7);
        let pair = VertexPair::new(&g, 0, 6).unwrap();
        let s = solve(&g, &pair, 452.6, Precision::Auto).unwrap();
        assert_eq!(s.precision(), Precision::DoubleDouble);
        assert!(s.p_t0() > 0.99);
        let near = solve(&g, &pair, 3.0, Precision::Auto).unwrap();
        assert_eq!(near.precision(), Precision::Double);
    }

    #[test]
    fn precisions_agree_where_both_are_accurate() {
        let g = Graph::path(5);
        let pair = VertexPair::new(&g, 0, 4).unwrap();
        let a = solve(&g, &pair, 20.0, Precision::Double).unwrap();
        let b = solve(&g, &pair, 20.0, Precision::DoubleDouble).unwrap();
        assert!((a.t0() - b.t0()).abs() / b.t0() < 1e-9);
        // p(t0) itself moves with the f64 error in t0, so compare at a common time
        assert!((a.transfer_strength(b.t0()) - b.p_t0()).abs() < 1e-9);
        assert!((a.p_t0() - b.p_t0()).abs() <= a.p_t0_error());
        assert!(b.p_t0_error() < 1e-20);
        for (x, y) in a.eigenvalues().iter().zip(b.eigenvalues()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn window_degenerates_to_t0() {
        let g = Graph::path(3);
        let pair = VertexPair::new(&g, 0, 2).unwrap();
        let s = solve(&g, &pair, 10.0, Precision::Auto).unwrap();
        let w = s.window(0.0, 101);
        assert_eq!(w.min_p, s.p_t0());
        assert_eq!(w.t_lo, w.t_hi);
    }
}
