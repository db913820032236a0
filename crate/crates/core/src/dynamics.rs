//! Hamiltonian construction, transfer amplitudes, readout time and the
//! fidelity search over `[0, t_max]`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;

use num_complex::{Complex, Complex64};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexPair};
use crate::matrix::DenseMatrix;
use crate::pipeline;
use crate::report::sig17;
use crate::scalar::{Precision, Scalar};
use crate::spectral::{SpectralData, TopPair};

/// `H = A + Q (e_u e_u^T + e_v e_v^T)`.
#[derive(Clone, Debug)]
pub struct Hamiltonian<T> {
    pub matrix: DenseMatrix<T>,
    pub q: T,
    pub pair: VertexPair,
}

pub fn build_hamiltonian<T: Scalar>(g: &Graph, pair: &VertexPair, q: f64) -> Result<Hamiltonian<T>> {
    if !q.is_finite() {
        return Err(Error::InvalidArgument(format!("loop weight Q must be finite, got {q}")));
    }
    g.check_vertex(pair.u)?;
    g.check_vertex(pair.v)?;
    let n = g.n();
    let q = T::cast(q);
    let mut matrix = DenseMatrix::zeros(n, n);
    for &(a, b) in g.edges() {
        matrix[(a, b)] = T::one();
        matrix[(b, a)] = T::one();
    }
    matrix[(pair.u, pair.u)] = q;
    matrix[(pair.v, pair.v)] = q;
    Ok(Hamiltonian { matrix, q, pair: *pair })
}

/// `sum_j phi_j(u) phi_j(v) e^{i t lambda_j}`, phases reduced in working precision.
pub fn amplitude<T: Scalar>(spec: &SpectralData<T>, pair: &VertexPair, t: T) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..spec.n() {
        let a = (spec.entry(pair.u, j) * spec.entry(pair.v, j)).as_f64();
        let theta = T::reduce_angle(t * spec.eigenvalues[j]).as_f64();
        acc += Complex64::from_polar(a, theta);
    }
    acc
}

/// `|U(t)_{uv}|^2`, clamped to `[0, 1]`.
pub fn transfer_strength<T: Scalar>(spec: &SpectralData<T>, pair: &VertexPair, t: T) -> f64 {
    let lambda1 = spec.eigenvalues[0];
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..spec.n() {
        let a = (spec.entry(pair.u, j) * spec.entry(pair.v, j)).as_f64();
        let theta = T::reduce_angle(t * (spec.eigenvalues[j] - lambda1)).as_f64();
        acc += Complex64::from_polar(a, theta);
    }
    clamp_probability(acc.norm_sqr())
}

fn clamp_probability(p: f64) -> f64 {
    if p > 1.0 + 1e-8 {
        log::warn!("transfer strength {p} exceeds 1 by more than 1e-8; clamped");
    }
    p.clamp(0.0, 1.0)
}

/// `sum_j |phi_j(u) phi_j(v)| |lambda_j - lambda_1|`, a Lipschitz constant of `|U(t)_uv|`.
pub fn amplitude_lipschitz<T: Scalar>(spec: &SpectralData<T>, pair: &VertexPair) -> f64 {
    let lambda1 = spec.eigenvalues[0];
    (0..spec.n())
        .map(|j| (spec.entry(pair.u, j) * spec.entry(pair.v, j)).abs().as_f64() * (spec.eigenvalues[j] - lambda1).abs().as_f64())
        .sum()
}

/// `t0 = pi / (lambda_1 - lambda_2)`.
pub fn readout_time<T: Scalar>(tp: &TopPair<T>) -> Result<T> {
    if !tp.gap_reliable() {
        return Err(Error::UnreliableGap { gap: tp.gap.as_f64(), error: tp.gap_error });
    }
    Ok(T::PI() / tp.gap)
}

/// Outcome of [`fidelity_search`]. `p_star` is attained at `t_star`, so it
/// is a lower bound on the fidelity; `p_upper` bounds `p` on all of
/// `[0, t_max]` when `complete` is set, and on the unexplored part otherwise.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransferReport {
    pub t0: f64,
    pub p_t0: f64,
    pub gap: f64,
    pub gap_error: f64,
    pub reliable: bool,
    pub t_max: f64,
    pub t_star: f64,
    pub p_star: f64,
    pub p_upper: f64,
    pub grid_resolution: f64,
    pub bracket: [f64; 2],
    pub evaluations: u64,
    pub complete: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    /// Maximum number of amplitude evaluations in the grid phase.
    pub budget: u64,
    /// Grid points per leaf of the branch-and-bound tree.
    pub leaf_size: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { budget: 1 << 22, leaf_size: 64 }
    }
}

pub fn fidelity_search<T: Scalar>(spec: &SpectralData<T>, top: &TopPair<T>, pair: &VertexPair, t_max: f64) -> Result<TransferReport> {
    fidelity_search_with(spec, top, pair, t_max, SearchOptions::default())
}

/// Grid search on `[0, t_max]` with step a quarter period of the fastest
/// oscillation, pruned with Lipschitz and two-level envelope bounds, then a
/// golden-section refinement around the best point.
pub fn fidelity_search_with<T: Scalar>(
    spec: &SpectralData<T>,
    top: &TopPair<T>,
    pair: &VertexPair,
    t_max: f64,
    opts: SearchOptions,
) -> Result<TransferReport> {
    if !t_max.is_finite() || t_max <= 0.0 {
        return Err(Error::InvalidArgument(format!("t_max must be finite and positive, got {t_max}")));
    }
    if spec.n() < 2 {
        return Err(Error::InvalidArgument("need at least two eigenpairs".into()));
    }
    let ev = Evaluator::new(spec, pair);
    let spread = (spec.eigenvalues[0] - spec.eigenvalues[spec.n() - 1]).as_f64();
    let hf = std::f64::consts::PI / (4.0 * spread.max(f64::MIN_POSITIVE));
    let h = T::PI() / (T::cast(4.0) * (spec.eigenvalues[0] - spec.eigenvalues[spec.n() - 1]));
    let points = (t_max / hf).floor() + 1.0;
    if points > 1.8e19 {
        return Err(Error::WorkCap { what: "fidelity grid".into(), estimate: points, cap: 1.8e19 });
    }
    let last = points as u64 - 1;

    let gap = top.gap;
    let reliable = top.gap_reliable();
    let (t0, p_t0) = if gap > T::zero() {
        let t0 = T::PI() / gap;
        (t0, ev.p_at(t0))
    } else {
        (T::infinity(), 0.0)
    };
    let mut best_t = t0;
    let mut best_p = p_t0;
    let slack = 1e-12;

    let grid_time = |k: u64| -> T {
        let hi = T::cast((k >> 32) as f64) * T::cast(4294967296.0);
        (hi + T::cast((k & 0xffff_ffff) as f64)) * h
    };

    let mut evaluations = 0u64;
    let mut closed_upper = 0.0f64;
    let mut heap = BinaryHeap::new();
    let bound = |k0: u64, k1: u64, evaluations: &mut u64| -> Node {
        let mid = k0 + (k1 - k0) / 2;
        let half_width = (k1 - k0) as f64 * 0.5 * hf;
        *evaluations += 1;
        let by_slope = ev.amp_abs(grid_time(mid)) + ev.lipschitz * half_width;
        let by_envelope = ev.envelope(grid_time(k0), grid_time(k1), (k1 - k0) as f64 * hf) + ev.tail;
        Node { upper: by_slope.min(by_envelope) + slack, k0, k1 }
    };
    heap.push(bound(0, last, &mut evaluations));
    let mut complete = true;
    while let Some(node) = heap.pop() {
        let upper_p = node.upper * node.upper;
        if upper_p <= best_p {
            closed_upper = closed_upper.max(upper_p);
            break;
        }
        if evaluations >= opts.budget {
            heap.push(node);
            complete = false;
            break;
        }
        if node.k1 - node.k0 < opts.leaf_size {
            let (k, p, max_amp) = ev.leaf(grid_time(node.k0), h, node.k1 - node.k0 + 1);
            evaluations += node.k1 - node.k0 + 1;
            if p > best_p {
                best_p = p;
                best_t = grid_time(node.k0 + k);
            }
            let leaf_upper = (max_amp + ev.lipschitz * 0.5 * hf + slack).min(node.upper);
            closed_upper = closed_upper.max(leaf_upper * leaf_upper);
            continue;
        }
        let mid = node.k0 + (node.k1 - node.k0) / 2;
        heap.push(bound(node.k0, mid, &mut evaluations));
        heap.push(bound(mid + 1, node.k1, &mut evaluations));
    }
    let open_upper = heap.peek().map_or(0.0, |n| n.upper * n.upper);
    let p_upper = if complete { closed_upper.max(best_p) } else { closed_upper.max(open_upper).max(best_p) };

    // golden-section refinement on [t_b - h, t_b + h]
    let (mut a, mut b) = (-hf, hf);
    if best_t.as_f64() - hf < 0.0 {
        a = -best_t.as_f64();
    }
    let base = best_t;
    let p_off = |x: f64| ev.p_at(base + T::cast(x));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut pc, mut pd) = (p_off(c), p_off(d));
    let target = 1e-10 * 2.0 * hf;
    while b - a > target {
        if pc >= pd {
            b = d;
            d = c;
            pd = pc;
            c = b - inv_phi * (b - a);
            pc = p_off(c);
        } else {
            a = c;
            c = d;
            pc = pd;
            d = a + inv_phi * (b - a);
            pd = p_off(d);
        }
        evaluations += 1;
    }
    let (x, p) = if pc >= pd { (c, pc) } else { (d, pd) };
    if p > best_p {
        best_p = p;
        best_t = base + T::cast(x);
    }
    let base_f = base.as_f64();
    let t_star = best_t.as_f64();
    // a flat peak can leave the refinement short of the kept candidate
    let bracket = [(base_f + a).min(t_star), (base_f + b).max(t_star)];

    Ok(TransferReport {
        t0: t0.as_f64(),
        p_t0,
        gap: gap.as_f64(),
        gap_error: top.gap_error,
        reliable,
        t_max,
        t_star,
        p_star: best_p,
        p_upper: p_upper.min(1.0).max(best_p),
        grid_resolution: hf,
        bracket,
        evaluations,
        complete,
    })
}

#[derive(Clone, Copy, Debug)]
struct Node {
    upper: f64,
    k0: u64,
    k1: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper.total_cmp(&other.upper).then_with(|| other.k0.cmp(&self.k0))
    }
}

/// Amplitude in the frame rotating with `lambda_1`.
struct Evaluator<T> {
    coeff: Vec<f64>,
    omega: Vec<T>,
    lipschitz: f64,
    tail: f64,
}

impl<T: Scalar> Evaluator<T> {
    fn new(spec: &SpectralData<T>, pair: &VertexPair) -> Self {
        let lambda1 = spec.eigenvalues[0];
        let coeff: Vec<f64> = (0..spec.n()).map(|j| (spec.entry(pair.u, j) * spec.entry(pair.v, j)).as_f64()).collect();
        let omega: Vec<T> = spec.eigenvalues.iter().map(|&l| l - lambda1).collect();
        let lipschitz = coeff.iter().zip(&omega).map(|(a, w)| a.abs() * w.abs().as_f64()).sum();
        let tail = coeff.iter().skip(2).map(|a| a.abs()).sum();
        Evaluator { coeff, omega, lipschitz, tail }
    }

    fn amp(&self, t: T) -> Complex64 {
        self.coeff
            .iter()
            .zip(&self.omega)
            .map(|(&a, &w)| Complex64::from_polar(a, T::reduce_angle(t * w).as_f64()))
            .sum()
    }

    fn amp_abs(&self, t: T) -> f64 {
        self.amp(t).norm()
    }

    fn p_at(&self, t: T) -> f64 {
        clamp_probability(self.amp(t).norm_sqr())
    }

    /// Evaluates `count` grid points from `t`; returns (offset of best, best p, max |amp|).
    fn leaf(&self, t: T, h: T, count: u64) -> (u64, f64, f64) {
        let mut z: Vec<Complex64> = self
            .coeff
            .iter()
            .zip(&self.omega)
            .map(|(&a, &w)| Complex64::from_polar(a, T::reduce_angle(t * w).as_f64()))
            .collect();
        let rot: Vec<Complex64> =
            self.omega.iter().map(|&w| Complex64::from_polar(1.0, T::reduce_angle(h * w).as_f64())).collect();
        let (mut best_k, mut best_p, mut max_amp) = (0, -1.0, 0.0f64);
        for k in 0..count {
            let s: Complex64 = z.iter().sum();
            let p = s.norm_sqr();
            if p > best_p {
                best_p = p;
                best_k = k;
            }
            max_amp = max_amp.max(p.sqrt());
            for (zj, rj) in z.iter_mut().zip(&rot) {
                *zj *= rj;
            }
        }
        (best_k, clamp_probability(best_p), max_amp)
    }

    /// Max over `[t_lo, t_hi]` of `|a_1 + a_2 e^{i omega_2 t}|`.
    fn envelope(&self, t_lo: T, t_hi: T, width_t: f64) -> f64 {
        let (a1, a2) = (self.coeff[0], self.coeff[1]);
        let w2 = self.omega[1];
        let target = if a1 * a2 < 0.0 { T::PI() } else { T::zero() };
        let lo = if w2 < T::zero() { t_hi } else { t_lo };
        let s = T::reduce_angle(w2 * lo - target).as_f64();
        let w = w2.abs().as_f64() * width_t;
        let tau = std::f64::consts::TAU;
        let dist = if w >= tau || (s <= 0.0 && s + w >= 0.0) || s + w >= tau {
            0.0
        } else if s > 0.0 {
            s.min(tau - s - w)
        } else {
            (-(s + w)).min(s + tau)
        };
        (a1 * a1 + a2 * a2 + 2.0 * (a1 * a2).abs() * dist.cos()).max(0.0).sqrt()
    }
}

/// `e^{itH}` from the Taylor series with scaling and squaring.
#[derive(Clone, Debug)]
pub struct Propagator<T> {
    pub matrix: DenseMatrix<Complex<T>>,
    pub squarings: u32,
    pub terms: usize,
    /// Bound on the truncation error of the scaled series, per entry.
    pub remainder_bound: f64,
    /// `max |(U U^dagger - I)_{ij}|`.
    pub unitarity_defect: f64,
}

pub const ORACLE_MAX_N: usize = 64;
pub const ORACLE_MAX_NORM_TIME: f64 = 1e4;

pub fn propagator_oracle<T: Scalar>(h: &Hamiltonian<T>, t: f64) -> Result<Propagator<T>> {
    let n = h.matrix.rows();
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be finite, got {t}")));
    }
    if n > ORACLE_MAX_N {
        return Err(Error::WorkCap { what: "propagator oracle dimension".into(), estimate: n as f64, cap: ORACLE_MAX_N as f64 });
    }
    let norm = (0..n).map(|i| h.matrix.row(i).iter().map(|x| x.abs().as_f64()).sum::<f64>()).fold(0.0, f64::max);
    let work = norm * t.abs();
    if work > ORACLE_MAX_NORM_TIME {
        return Err(Error::WorkCap { what: "propagator oracle ||H|| t".into(), estimate: work, cap: ORACLE_MAX_NORM_TIME });
    }
    let mut squarings = 0u32;
    while work / 2f64.powi(squarings as i32) > 0.5 {
        squarings += 1;
    }
    let scale = T::cast(t) / T::cast(2f64.powi(squarings as i32));
    let x = DenseMatrix::from_fn(n, n, |i, j| Complex::new(T::zero(), h.matrix[(i, j)] * scale));
    let x_norm = work / 2f64.powi(squarings as i32);

    let target = 1e-12 / 2f64.powi(squarings as i32 + 1);
    let identity = DenseMatrix::from_fn(n, n, |i, j| if i == j { Complex::new(T::one(), T::zero()) } else { Complex::new(T::zero(), T::zero()) });
    let mut sum = identity.clone();
    let mut term = identity;
    let mut terms = 0;
    let mut term_norm = 1.0f64;
    let mut remainder = f64::INFINITY;
    for k in 1..200usize {
        term = complex_mul(&term, &x).map(|z| z / T::from_usize(k));
        for (s, &tv) in sum.as_mut_slice().iter_mut().zip(term.as_slice()) {
            *s = *s + tv;
        }
        terms = k;
        term_norm *= x_norm / k as f64;
        // tail after term k: sum_{j>k} x^j/j! <= term_norm * (x/(k+2)) / (1 - x/(k+2))
        let ratio = x_norm / (k + 2) as f64;
        remainder = term_norm * ratio / (1.0 - ratio);
        if remainder <= target {
            break;
        }
    }
    let mut u = sum;
    for _ in 0..squarings {
        u = complex_mul(&u, &u);
    }
    let mut defect = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in 0..n {
                acc = acc + u[(i, k)] * u[(j, k)].conj();
            }
            let target = if i == j { T::one() } else { T::zero() };
            defect = defect.max((acc.re - target).abs().as_f64().max(acc.im.abs().as_f64()));
        }
    }
    Ok(Propagator { matrix: u, squarings, terms, remainder_bound: remainder, unitarity_defect: defect })
}

fn complex_mul<T: Scalar>(a: &DenseMatrix<Complex<T>>, b: &DenseMatrix<Complex<T>>) -> DenseMatrix<Complex<T>> {
    let n = a.rows();
    let mut out = DenseMatrix::from_fn(n, b.cols(), |_, _| Complex::new(T::zero(), T::zero()));
    for i in 0..n {
        for k in 0..a.cols() {
            let aik = a[(i, k)];
            if aik.re.is_zero() && aik.im.is_zero() {
                continue;
            }
            for j in 0..b.cols() {
                out[(i, j)] = out[(i, j)] + aik * b[(k, j)];
            }
        }
    }
    out
}

/// Horizon used by [`fidelity_curve`] rows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum TMaxPolicy {
    /// `factor * 2 pi (Q + m)^{d-1}`.
    ReadoutCap(f64),
    Fixed(f64),
    /// `factor * t0`.
    ReadoutMultiple(f64),
}

impl Default for TMaxPolicy {
    fn default() -> Self {
        TMaxPolicy::ReadoutCap(1.1)
    }
}

impl TMaxPolicy {
    pub fn resolve(self, q: f64, m: usize, d: usize, t0: f64) -> f64 {
        match self {
            TMaxPolicy::ReadoutCap(f) => f * readout_cap(q, m, d),
            TMaxPolicy::Fixed(t) => t,
            TMaxPolicy::ReadoutMultiple(f) => {
                if t0.is_finite() {
                    f * t0
                } else {
                    readout_cap(q, m, d)
                }
            }
        }
    }
}

/// `2 pi (Q + m)^{d-1}`.
pub fn readout_cap(q: f64, m: usize, d: usize) -> f64 {
    std::f64::consts::TAU * (q + m as f64).powi(d as i32 - 1)
}

/// One row of [`fidelity_curve`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    #[serde(rename = "Q")]
    pub q: f64,
    pub gap: f64,
    pub t0: f64,
    pub p_t0: f64,
    pub t_star: f64,
    pub p_star: f64,
    pub p_upper: f64,
    pub complete: bool,
    /// `Q > 2m` and the gap is resolved.
    pub certified: bool,
    pub precision: Precision,
}

/// Whether `p_star` moves monotonically with the row order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trend {
    pub p_star_nondecreasing: bool,
    /// Largest drop of `p_star` between consecutive rows (0 when nondecreasing).
    pub max_decrease: f64,
    pub p_star_first: f64,
    pub p_star_last: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityCurve {
    pub rows: Vec<CurveRow>,
    pub trend: Trend,
}

impl FidelityCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("Q,gap,t0,p_t0,t_star,p_star,certified\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                sig17(r.q),
                sig17(r.gap),
                sig17(r.t0),
                sig17(r.p_t0),
                sig17(r.t_star),
                sig17(r.p_star),
                r.certified
            ));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveOptions {
    pub precision: Precision,
    pub search: SearchOptions,
    /// Worker threads; rows are always emitted in input order.
    pub jobs: usize,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions { precision: Precision::Auto, search: SearchOptions::default(), jobs: 1 }
    }
}

/// One [`TransferReport`] per loop weight, with a monotonicity summary.
pub fn fidelity_curve(g: &Graph, pair: &VertexPair, q_values: &[f64], policy: TMaxPolicy, opts: &CurveOptions) -> Result<FidelityCurve> {
    if q_values.is_empty() {
        return Err(Error::InvalidArgument("q_values must not be empty".into()));
    }
    if let Some(q) = q_values.iter().find(|q| !q.is_finite()) {
        return Err(Error::InvalidArgument(format!("loop weights must be finite, got {q}")));
    }
    let m = g.max_degree();
    let row = |q: f64| -> Result<CurveRow> {
        let solution = pipeline::solve(g, pair, q, opts.precision)?;
        let t_max = policy.resolve(q, m, pair.d, solution.t0());
        let r = solution.search(t_max, opts.search)?;
        Ok(CurveRow {
            q,
            gap: r.gap,
            t0: r.t0,
            p_t0: r.p_t0,
            t_star: r.t_star,
            p_star: r.p_star,
            p_upper: r.p_upper,
            complete: r.complete,
            certified: q > 2.0 * m as f64 && r.reliable,
            precision: solution.precision(),
        })
    };
    let jobs = opts.jobs.clamp(1, q_values.len());
    let rows: Vec<Result<CurveRow>> = if jobs == 1 {
        q_values.iter().map(|&q| row(q)).collect()
    } else {
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Result<CurveRow>>>> = q_values.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, AtomicOrdering::Relaxed);
                    if i >= q_values.len() {
                        break;
                    }
                    let r = row(q_values[i]);
                    *slots[i].lock().expect("row slot") = Some(r);
                });
            }
        });
        slots.into_iter().map(|s| s.into_inner().expect("row slot").expect("row computed")).collect()
    };
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let max_decrease = rows.windows(2).map(|w| (w[0].p_star - w[1].p_star).max(0.0)).fold(0.0, f64::max);
    let trend = Trend {
        p_star_nondecreasing: max_decrease == 0.0,
        max_decrease,
        p_star_first: rows[0].p_star,
        p_star_last: rows[rows.len() - 1].p_star,
    };
    Ok(FidelityCurve { rows, trend })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use crate::spectral::{eigendecompose_symmetric, top_pair};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    fn solve(g: &Graph, u: usize, v: usize, q: f64) -> (Hamiltonian<f64>, SpectralData<f64>, TopPair<f64>, VertexPair) {
        let pair = VertexPair::new(g, u, v).unwrap();
        let h = build_hamiltonian::<f64>(g, &pair, q).unwrap();
        let s = eigendecompose_symmetric(&h.matrix, 1e-11).unwrap();
        let tp = top_pair(&s, &pair).unwrap();
        (h, s, tp, pair)
    }

    #[test]
    fn hamiltonian_examples() {
        let g = Graph::path(3);
        let pair = VertexPair::new(&g, 0, 2).unwrap();
        let h = build_hamiltonian::<f64>(&g, &pair, 4.6).unwrap();
        assert_eq!(h.matrix, DenseMatrix::from_rows(&[vec![4.6, 1.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 4.6]]));
        let h0 = build_hamiltonian::<f64>(&g, &pair, 0.0).unwrap();
        assert_eq!(h0.matrix, g.adjacency_matrix().map(f64::from));
        assert!(build_hamiltonian::<f64>(&g, &pair, f64::NAN).is_err());
        assert!(build_hamiltonian::<f64>(&g, &pair, f64::INFINITY).is_err());
    }

    #[test]
    fn k2_is_sin_squared() {
        for q in [0.0, 1.0, 5.0] {
            let (_, s, tp, pair) = solve(&Graph::path(2), 0, 1, q);
            assert!(transfer_strength(&s, &pair, 0.0) < 1e-30);
            for i in 0..50 {
                let t = 0.37 * i as f64;
                assert!((transfer_strength(&s, &pair, t) - t.sin().powi(2)).abs() < 1e-10);
                assert!((amplitude(&s, &pair, t).norm() - t.sin().abs()).abs() < 1e-10);
            }
            assert!((readout_time(&tp).unwrap() - FRAC_PI_2).abs() < 1e-14);
        }
    }

    #[test]
    fn p3_perfect_transfer() {
        let (_, s, _, pair) = solve(&Graph::path(3), 0, 2, 0.0);
        let t = PI / SQRT_2;
        assert!((transfer_strength(&s, &pair, t) - 1.0).abs() < 1e-8);
        assert!((amplitude(&s, &pair, t).norm() - 1.0).abs() < 1e-8);
        let closed = |t: f64| ((SQRT_2 * t).cos() - 1.0) / 2.0;
        for i in 0..20 {
            let t = 0.5 * i as f64;
            assert!((amplitude(&s, &pair, t).norm() - closed(t).abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn p3_readout_matches_perturbation_estimate() {
        let (_, _, tp, _) = solve(&Graph::path(3), 0, 2, 10.0);
        // H restricted to the top pair is Q + 1/Q (1 1; 1 1) to leading order
        let estimate = PI / (2.0 / 10.0);
        let t0 = readout_time(&tp).unwrap();
        assert!((t0 - estimate).abs() / estimate < 0.05, "{t0} vs {estimate}");
        assert_eq!(t0, PI / tp.gap);
    }

    #[test]
    fn degenerate_gap_is_rejected() {
        let (_, _, mut tp, _) = solve(&Graph::path(2), 0, 1, 5.0);
        tp.gap = 1e-300;
        assert!(matches!(readout_time(&tp), Err(Error::UnreliableGap { .. })));
    }

    #[test]
    fn search_examples() {
        let (_, s, tp, pair) = solve(&Graph::path(2), 0, 1, 5.0);
        let r = fidelity_search(&s, &tp, &pair, 4.0).unwrap();
        assert!((r.p_star - 1.0).abs() < 1e-9 && (r.t_star - FRAC_PI_2).abs() < 1e-4, "{r:?}");
        assert!(r.complete);

        let (_, s, tp, pair) = solve(&Graph::path(3), 0, 2, 0.0);
        let r = fidelity_search(&s, &tp, &pair, 10.0).unwrap();
        assert!((r.p_star - 1.0).abs() < 1e-8, "{r:?}");
        assert!((r.t_star - PI / SQRT_2).abs() < 1e-4 || (r.t_star - 3.0 * PI / SQRT_2).abs() < 1e-4);
        assert!(r.p_t0 <= r.p_star && r.p_star <= r.p_upper);
    }

    #[test]
    fn search_finds_the_grid_maximum() {
        for seed in 0..6 {
            let g = families::random_connected(7, 0.4, seed);
            let q = 2.5 * g.max_degree() as f64;
            let (_, s, tp, pair) = solve(&g, 0, 6, q);
            let t_max = 60.0;
            let r = fidelity_search(&s, &tp, &pair, t_max).unwrap();
            assert!(r.complete);
            let h = r.grid_resolution;
            let dense = (0..=(t_max / h) as usize).map(|k| transfer_strength(&s, &pair, k as f64 * h)).fold(0.0, f64::max);
            assert!(r.p_star >= dense - 1e-12, "seed {seed}: {} < {dense}", r.p_star);
            let fine = (0..=(t_max / h * 16.0) as usize).map(|k| transfer_strength(&s, &pair, k as f64 * h / 16.0)).fold(0.0, f64::max);
            assert!(r.p_upper >= fine - 1e-12, "seed {seed}: upper {} < {fine}", r.p_upper);
        }
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let (_, s, tp, pair) = solve(&Graph::path(4), 0, 3, 8.0);
        let r = fidelity_search_with(&s, &tp, &pair, 1e7, SearchOptions { budget: 1000, leaf_size: 64 }).unwrap();
        assert!(!r.complete);
        assert!(r.p_upper >= r.p_star && r.p_star >= r.p_t0);
        assert!(fidelity_search(&s, &tp, &pair, f64::NAN).is_err());
        assert!(fidelity_search(&s, &tp, &pair, 0.0).is_err());
    }

    #[test]
    fn oracle_closed_form() {
        let g = Graph::path(2);
        let pair = VertexPair::new(&g, 0, 1).unwrap();
        let q = 5.0;
        let h = build_hamiltonian::<f64>(&g, &pair, q).unwrap();
        let u0 = propagator_oracle(&h, 0.0).unwrap();
        assert_eq!(u0.squarings, 0);
        assert!((u0.matrix[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15 && u0.matrix[(0, 1)].norm() < 1e-15);
        for t in [0.3, 1.7, 12.5, 100.0] {
            let u = propagator_oracle(&h, t).unwrap();
            let phase = Complex64::from_polar(1.0, q * t);
            let c = phase * t.cos();
            let s = phase * Complex64::new(0.0, t.sin());
            assert!((u.matrix[(0, 0)] - c).norm() < 1e-12, "t = {t}");
            assert!((u.matrix[(0, 1)] - s).norm() < 1e-12, "t = {t}");
            assert!(u.unitarity_defect < 1e-12);
        }
        let big = Graph::path(65);
        let pair = VertexPair::new(&big, 0, 64).unwrap();
        assert!(matches!(propagator_oracle(&build_hamiltonian::<f64>(&big, &pair, 1.0).unwrap(), 1.0), Err(Error::WorkCap { .. })));
        assert!(matches!(propagator_oracle(&h, 1e4), Err(Error::WorkCap { .. })));
    }

    #[test]
    fn curve_on_p3() {
        let g = Graph::path(3);
        let pair = VertexPair::new(&g, 0, 2).unwrap();
        let qs = [10.0, 40.0, 160.0];
        let c = fidelity_curve(&g, &pair, &qs, TMaxPolicy::default(), &CurveOptions::default()).unwrap();
        assert_eq!(c.rows.len(), 3);
        assert!(c.trend.p_star_nondecreasing, "{:?}", c.trend);
        assert!(c.rows.iter().all(|r| r.certified && r.p_t0 <= r.p_star));
        let parallel = fidelity_curve(&g, &pair, &qs, TMaxPolicy::default(), &CurveOptions { jobs: 3, ..Default::default() }).unwrap();
        assert_eq!(c, parallel);
        let csv = c.to_csv();
        assert!(csv.starts_with("Q,gap,t0,p_t0,t_star,p_star,certified\n1.0000000000000000e+1,"));
        assert_eq!(csv.lines().count(), 4);

        let low = fidelity_curve(&g, &pair, &[1.0], TMaxPolicy::Fixed(20.0), &CurveOptions::default()).unwrap();
        assert!(!low.rows[0].certified);
        assert!(fidelity_curve(&g, &pair, &[], TMaxPolicy::default(), &CurveOptions::default()).is_err());
    }

    #[test]
    fn policies() {
        assert!((TMaxPolicy::default().resolve(227.0, 2, 4, 1.0) - 1.1 * 2.0 * PI * 229f64.powi(3)).abs() < 1e-3);
        assert_eq!(TMaxPolicy::Fixed(3.0).resolve(1.0, 1, 1, 1.0), 3.0);
        assert_eq!(TMaxPolicy::ReadoutMultiple(2.0).resolve(1.0, 1, 1, 1.5), 3.0);
        assert!((readout_cap(5.0, 1, 1) - 2.0 * PI).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn oracle_agrees_with_spectral_amplitude(n in 2usize..12, seed in any::<u64>(), qf in 0.0f64..6.0, t in 0.0f64..40.0) {
            let g = families::random_connected(n, 0.35, seed);
            let q = qf * g.max_degree() as f64;
            let (h, s, _, pair) = solve(&g, 0, n - 1, q);
            let u = propagator_oracle(&h, t).unwrap();
            let a = amplitude(&s, &pair, t);
            prop_assert!((a - u.matrix[(0, n - 1)]).norm() <= 1e-8);
            prop_assert!(u.unitarity_defect <= 1e-8);
            let row: f64 = (0..n).map(|x| u.matrix[(0, x)].norm_sqr()).sum();
            prop_assert!((row - 1.0).abs() <= 1e-8);
            let spectral_row: f64 = (0..n).map(|x| amplitude(&s, &VertexPair { u: 0, v: x, d: 0 }, t).norm_sqr()).sum();
            prop_assert!((spectral_row - 1.0).abs() <= 1e-8);
        }

        #[test]
        fn probability_is_symmetric_and_continuous(n in 2usize..10, seed in any::<u64>(), qf in 0.0f64..6.0, t in 0.0f64..100.0) {
            let g = families::random_connected(n, 0.35, seed);
            let q = qf * g.max_degree() as f64;
            let (h, s, _, pair) = solve(&g, 0, n - 1, q);
            let (_, s2, _, pair2) = solve(&g, n - 1, 0, q);
            prop_assert!((transfer_strength(&s, &pair, t) - transfer_strength(&s2, &pair2, t)).abs() <= 1e-10);
            prop_assert!(transfer_strength(&s, &pair, 0.0) <= 1e-20);
            let norm = (0..n).map(|i| h.matrix.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
            let dt = 1e-4;
            let jump = (transfer_strength(&s, &pair, t + dt) - transfer_strength(&s, &pair, t)).abs();
            prop_assert!(jump <= 2.0 * norm * dt + 1e-7);
        }
    }
}
