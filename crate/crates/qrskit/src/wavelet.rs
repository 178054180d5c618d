//! Daubechies filter generation and multi-level discrete wavelet transform.
//!
//! Filters are generated at runtime by spectral factorization of the
//! Daubechies half-band polynomial rather than copied from a table, and are
//! validated against the quadrature-mirror invariants before use. The
//! transform is the Mallat cascade: convolve with the lowpass/highpass pair,
//! downsample by two, repeat on the running approximation.
//!
//! Periodic boundary handling gives exact perfect reconstruction and (for
//! even-length levels) exact energy conservation. Symmetric extension is
//! available for signals where wrap-around artifacts matter more than exact
//! invertibility; its reconstruction is the adjoint cascade, exact away from
//! the signal edges.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal_io::Signal;

/// Smallest and largest supported Daubechies order (vanishing moments).
pub const MIN_ORDER: usize = 1;
pub const MAX_ORDER: usize = 8;

/// An orthonormal quadrature mirror filter pair for one Daubechies order.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter {
    order: usize,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl WaveletFilter {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of taps (2 * order).
    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    /// Check the orthonormal filter invariants: Σh = √2, Σh² = 1, double-shift
    /// orthogonality, and the alternating-sign mirror relation.
    pub fn validate(&self) -> Result<()> {
        let h = &self.lowpass;
        let n = h.len();
        let sum: f64 = h.iter().sum();
        if (sum - std::f64::consts::SQRT_2).abs() > 1e-12 {
            return Err(Error::value(format!(
                "db{}: lowpass sum {sum} differs from sqrt(2)",
                self.order
            )));
        }
        let energy: f64 = h.iter().map(|x| x * x).sum();
        if (energy - 1.0).abs() > 1e-12 {
            return Err(Error::value(format!(
                "db{}: lowpass energy {energy} differs from 1",
                self.order
            )));
        }
        for m in 1..self.order {
            let dot: f64 = (0..n - 2 * m).map(|k| h[k] * h[k + 2 * m]).sum();
            if dot.abs() > 1e-10 {
                return Err(Error::value(format!(
                    "db{}: double-shift product at offset {} is {dot}",
                    self.order,
                    2 * m
                )));
            }
        }
        for k in 0..n {
            let expected = if k % 2 == 0 { h[n - 1 - k] } else { -h[n - 1 - k] };
            if (self.highpass[k] - expected).abs() > 1e-15 {
                return Err(Error::value(format!(
                    "db{}: highpass tap {k} breaks the mirror relation",
                    self.order
                )));
            }
        }
        Ok(())
    }
}

/// Generate the orthonormal Daubechies filter pair with `order` vanishing
/// moments via spectral factorization, keeping the minimum-phase root set.
/// The result is deterministic and validated before it is returned.
pub fn daubechies_filter(order: usize) -> Result<WaveletFilter> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(Error::value(format!(
            "wavelet order must be in [{MIN_ORDER}, {MAX_ORDER}], got {order}"
        )));
    }

    // Half-band remainder P(y) = sum_k C(order-1+k, k) y^k.
    let poly: Vec<f64> = (0..order)
        .map(|k| binomial(order - 1 + k, k))
        .collect();
    let y_roots = polynomial_roots(&poly);

    // Each root of P maps to a reciprocal pair in z; keep the root inside the
    // unit circle.
    let mut q = vec![Complex64::new(1.0, 0.0)];
    for y in y_roots {
        let b = Complex64::new(2.0, 0.0) - 4.0 * y;
        let disc = (b * b - 4.0).sqrt();
        let z1 = (b + disc) / 2.0;
        let z2 = (b - disc) / 2.0;
        let z = if z1.norm() < z2.norm() { z1 } else { z2 };
        q = poly_mul(&q, &[-z, Complex64::new(1.0, 0.0)]);
    }

    // Multiply by (1 + z)^order and take the real part.
    let binom: Vec<Complex64> = (0..=order)
        .map(|k| Complex64::new(binomial(order, k), 0.0))
        .collect();
    let full = poly_mul(&q, &binom);
    debug_assert_eq!(full.len(), 2 * order);
    let mut lowpass: Vec<f64> = full.iter().map(|c| c.re).collect();

    let scale = std::f64::consts::SQRT_2 / lowpass.iter().sum::<f64>();
    for h in &mut lowpass {
        *h *= scale;
    }

    // Canonical orientation: the minimum-phase filter carries its energy up
    // front.
    let half = lowpass.len() / 2;
    let front: f64 = lowpass[..half].iter().map(|x| x * x).sum();
    let back: f64 = lowpass[half..].iter().map(|x| x * x).sum();
    if front < back {
        lowpass.reverse();
    }

    let n = lowpass.len();
    let highpass: Vec<f64> = (0..n)
        .map(|k| {
            let h = lowpass[n - 1 - k];
            if k % 2 == 0 {
                h
            } else {
                -h
            }
        })
        .collect();

    let filter = WaveletFilter {
        order,
        lowpass,
        highpass,
    };
    filter.validate()?;
    Ok(filter)
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc = 1.0_f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Multiply two polynomials given by ascending coefficients.
fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn poly_eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// All complex roots of a real polynomial (ascending coefficients) via
/// Durand-Kerner iteration with a Newton polish. Deterministic: fixed seeds,
/// fixed iteration order.
fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    let lead = coeffs[degree];
    let monic: Vec<Complex64> = coeffs
        .iter()
        .map(|&c| Complex64::new(c / lead, 0.0))
        .collect();

    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..degree).map(|i| seed.powu(i as u32 + 1)).collect();

    for _ in 0..500 {
        let mut max_step = 0.0_f64;
        for i in 0..degree {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..degree {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = poly_eval(&monic, roots[i]) / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm() / (1.0 + roots[i].norm()));
        }
        if max_step < 1e-14 {
            break;
        }
    }

    // Newton polish against the original polynomial.
    let derivative: Vec<Complex64> = monic
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect();
    for root in &mut roots {
        for _ in 0..3 {
            let dp = poly_eval(&derivative, *root);
            if dp.norm() == 0.0 {
                break;
            }
            *root -= poly_eval(&monic, *root) / dp;
        }
    }
    roots
}

// ---------------------------------------------------------------------------
// Multi-level transform
// ---------------------------------------------------------------------------

/// Boundary handling for the convolution at signal edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// Circular wrap-around. Exactly invertible; default.
    #[default]
    Periodic,
    /// Half-sample mirror extension. Reconstruction is exact away from the
    /// edges only.
    Symmetric,
}

impl std::str::FromStr for BoundaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(BoundaryMode::Periodic),
            "symmetric" => Ok(BoundaryMode::Symmetric),
            other => Err(Error::value(format!(
                "unknown boundary mode {other:?} (expected periodic or symmetric)"
            ))),
        }
    }
}

/// Per-level approximation and detail coefficients of a multi-level DWT.
#[derive(Debug, Clone)]
pub struct Decomposition {
    levels: usize,
    approximations: Vec<Vec<f64>>,
    details: Vec<Vec<f64>>,
    boundary_mode: BoundaryMode,
    original_length: usize,
    filter: WaveletFilter,
    sample_rate_hz: f64,
}

impl Decomposition {
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Approximation coefficients a_k for level `k` in 1..=levels.
    pub fn approximation(&self, level: usize) -> Result<&[f64]> {
        self.check_level(level)?;
        Ok(&self.approximations[level - 1])
    }

    /// Detail coefficients d_k for level `k` in 1..=levels.
    pub fn detail(&self, level: usize) -> Result<&[f64]> {
        self.check_level(level)?;
        Ok(&self.details[level - 1])
    }

    pub fn boundary_mode(&self) -> BoundaryMode {
        self.boundary_mode
    }

    pub fn original_length(&self) -> usize {
        self.original_length
    }

    pub fn filter(&self) -> &WaveletFilter {
        &self.filter
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Sum of squares of the final approximation plus every detail band.
    pub fn coefficient_energy(&self) -> f64 {
        let details: f64 = self
            .details
            .iter()
            .flat_map(|d| d.iter())
            .map(|x| x * x)
            .sum();
        let approx: f64 = self
            .approximations
            .last()
            .map(|a| a.iter().map(|x| x * x).sum())
            .unwrap_or(0.0);
        details + approx
    }

    /// Input length at each cascade stage: index 0 is the original length,
    /// index k the length fed into level k+1.
    fn stage_lengths(&self) -> Vec<usize> {
        let mut lens = Vec::with_capacity(self.levels + 1);
        let mut len = self.original_length;
        lens.push(len);
        for _ in 0..self.levels {
            len = len.div_ceil(2);
            lens.push(len);
        }
        lens
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level < 1 || level > self.levels {
            return Err(Error::value(format!(
                "level {level} out of range 1..={}",
                self.levels
            )));
        }
        Ok(())
    }
}

/// Deepest decomposition allowed for a signal length: the running
/// approximation fed into each level must be at least as long as the filter.
pub fn max_levels(signal_len: usize, filter_len: usize) -> usize {
    let mut levels = 0;
    let mut len = signal_len;
    while len >= filter_len {
        levels += 1;
        len = len.div_ceil(2);
    }
    levels
}

/// Decompose `signal` into `levels` approximation/detail pairs by the
/// convolve-and-halve cascade.
pub fn dwt_decompose(
    signal: &Signal,
    filter: &WaveletFilter,
    levels: usize,
    boundary_mode: BoundaryMode,
) -> Result<Decomposition> {
    if levels < 1 {
        return Err(Error::value(format!("levels must be >= 1, got {levels}")));
    }
    let supported = max_levels(signal.len(), filter.len());
    if levels > supported {
        return Err(Error::value(format!(
            "signal of {} samples supports at most {} level(s) with a {}-tap filter, requested {}",
            signal.len(),
            supported,
            filter.len(),
            levels
        )));
    }

    let mut approximations = Vec::with_capacity(levels);
    let mut details = Vec::with_capacity(levels);
    let mut running = signal.samples.clone();
    for _ in 0..levels {
        let (a, d) = analyze_step(&running, filter, boundary_mode);
        running = a.clone();
        approximations.push(a);
        details.push(d);
    }

    Ok(Decomposition {
        levels,
        approximations,
        details,
        boundary_mode,
        original_length: signal.len(),
        filter: filter.clone(),
        sample_rate_hz: signal.sample_rate_hz,
    })
}

/// Project the detail band at `level` back onto the original sampling grid:
/// the inverse cascade applied with every other band zeroed.
pub fn reconstruct_detail(decomposition: &Decomposition, level: usize) -> Result<Signal> {
    decomposition.check_level(level)?;
    let lens = decomposition.stage_lengths();
    let zeros_a = vec![0.0; lens[level]];
    let mut current = synthesize_step(
        &zeros_a,
        &decomposition.details[level - 1],
        &decomposition.filter,
        decomposition.boundary_mode,
        lens[level - 1],
    );
    for k in (1..level).rev() {
        let zeros_d = vec![0.0; lens[k]];
        current = synthesize_step(
            &current,
            &zeros_d,
            &decomposition.filter,
            decomposition.boundary_mode,
            lens[k - 1],
        );
    }
    Ok(Signal {
        samples: current,
        sample_rate_hz: decomposition.sample_rate_hz,
        label: Some(format!("d{level}")),
    })
}

/// Project the final approximation band back onto the original grid.
pub fn reconstruct_approximation(decomposition: &Decomposition) -> Result<Signal> {
    let lens = decomposition.stage_lengths();
    let n = decomposition.levels;
    let mut current = decomposition.approximations[n - 1].clone();
    for k in (1..=n).rev() {
        let zeros_d = vec![0.0; lens[k]];
        current = synthesize_step(
            &current,
            &zeros_d,
            &decomposition.filter,
            decomposition.boundary_mode,
            lens[k - 1],
        );
    }
    Ok(Signal {
        samples: current,
        sample_rate_hz: decomposition.sample_rate_hz,
        label: Some(format!("a{n}")),
    })
}

/// Full inverse transform from the final approximation and all details.
pub fn reconstruct_signal(decomposition: &Decomposition) -> Result<Signal> {
    let lens = decomposition.stage_lengths();
    let n = decomposition.levels;
    let mut current = decomposition.approximations[n - 1].clone();
    for k in (1..=n).rev() {
        current = synthesize_step(
            &current,
            &decomposition.details[k - 1],
            &decomposition.filter,
            decomposition.boundary_mode,
            lens[k - 1],
        );
    }
    Ok(Signal {
        samples: current,
        sample_rate_hz: decomposition.sample_rate_hz,
        label: Some("reconstruction".to_string()),
    })
}

fn analyze_step(x: &[f64], filter: &WaveletFilter, mode: BoundaryMode) -> (Vec<f64>, Vec<f64>) {
    match mode {
        BoundaryMode::Periodic => {
            // Odd lengths are padded to even by repeating the last sample;
            // reconstruction truncates the pad back off.
            let padded;
            let buf: &[f64] = if x.len() % 2 == 1 {
                padded = {
                    let mut v = x.to_vec();
                    v.push(*x.last().unwrap());
                    v
                };
                &padded
            } else {
                x
            };
            let m = buf.len();
            let half = m / 2;
            let lo = filter.lowpass();
            let hi = filter.highpass();
            let mut a = vec![0.0; half];
            let mut d = vec![0.0; half];
            for i in 0..half {
                let mut sa = 0.0;
                let mut sd = 0.0;
                for (j, (&l, &h)) in lo.iter().zip(hi).enumerate() {
                    let v = buf[(2 * i + j) % m];
                    sa += l * v;
                    sd += h * v;
                }
                a[i] = sa;
                d[i] = sd;
            }
            (a, d)
        }
        BoundaryMode::Symmetric => {
            let n = x.len();
            let half = n.div_ceil(2);
            let lo = filter.lowpass();
            let hi = filter.highpass();
            let mut a = vec![0.0; half];
            let mut d = vec![0.0; half];
            for i in 0..half {
                let mut sa = 0.0;
                let mut sd = 0.0;
                for (j, (&l, &h)) in lo.iter().zip(hi).enumerate() {
                    let v = x[mirror(2 * i + j, n)];
                    sa += l * v;
                    sd += h * v;
                }
                a[i] = sa;
                d[i] = sd;
            }
            (a, d)
        }
    }
}

fn synthesize_step(
    a: &[f64],
    d: &[f64],
    filter: &WaveletFilter,
    mode: BoundaryMode,
    out_len: usize,
) -> Vec<f64> {
    debug_assert_eq!(a.len(), d.len());
    let lo = filter.lowpass();
    let hi = filter.highpass();
    match mode {
        BoundaryMode::Periodic => {
            let m = 2 * a.len();
            let mut y = vec![0.0; m];
            for i in 0..a.len() {
                for (j, (&l, &h)) in lo.iter().zip(hi).enumerate() {
                    y[(2 * i + j) % m] += a[i] * l + d[i] * h;
                }
            }
            y.truncate(out_len);
            y
        }
        BoundaryMode::Symmetric => {
            let mut y = vec![0.0; out_len];
            for i in 0..a.len() {
                for (j, (&l, &h)) in lo.iter().zip(hi).enumerate() {
                    y[mirror(2 * i + j, out_len)] += a[i] * l + d[i] * h;
                }
            }
            y
        }
    }
}

/// Half-sample mirror fold of an index into [0, n).
fn mirror(idx: usize, n: usize) -> usize {
    let m = idx % (2 * n);
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn signal(samples: Vec<f64>, rate: f64) -> Signal {
        Signal::new(samples, rate).unwrap()
    }

    fn random_samples(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn haar_is_exact() {
        let f = daubechies_filter(1).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((f.lowpass()[0] - r).abs() < 1e-14);
        assert!((f.lowpass()[1] - r).abs() < 1e-14);
        assert!((f.highpass()[0] - r).abs() < 1e-14);
        assert!((f.highpass()[1] + r).abs() < 1e-14);
    }

    #[test]
    fn db2_matches_closed_form() {
        // Solving the two-vanishing-moment system in closed form gives
        // [(1+s)/4r, (3+s)/4r, (3-s)/4r, (1-s)/4r] with s=sqrt(3), r=sqrt(2).
        let s = 3.0_f64.sqrt();
        let r = 2.0_f64.sqrt();
        let expected = [
            (1.0 + s) / (4.0 * r),
            (3.0 + s) / (4.0 * r),
            (3.0 - s) / (4.0 * r),
            (1.0 - s) / (4.0 * r),
        ];
        let f = daubechies_filter(2).unwrap();
        for (got, want) in f.lowpass().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
        }
    }

    #[test]
    fn db6_matches_published_coefficients() {
        let expected = [
            0.111540743350109,
            0.494623890398453,
            0.751133908021093,
            0.315250351709195,
            -0.226264693965169,
            -0.129766867567262,
            0.097501605587079,
            0.027522865530016,
            -0.031582039317674,
            0.000553842201161,
            0.004777257511010,
            -0.001077301085308,
        ];
        let f = daubechies_filter(6).unwrap();
        assert_eq!(f.len(), 12);
        for (got, want) in f.lowpass().iter().zip(expected) {
            assert!((got - want).abs() < 1e-10, "got {got}, want {want}");
        }
    }

    #[test]
    fn db4_matches_published_coefficients() {
        let expected = [
            0.230377813308855,
            0.714846570552542,
            0.630880767929590,
            -0.027983769416984,
            -0.187034811717090,
            0.030841381835987,
            0.032883011666983,
            -0.010597401784997,
        ];
        let f = daubechies_filter(4).unwrap();
        for (got, want) in f.lowpass().iter().zip(expected) {
            assert!((got - want).abs() < 1e-10, "got {got}, want {want}");
        }
    }

    #[test]
    fn all_orders_satisfy_invariants() {
        for order in MIN_ORDER..=MAX_ORDER {
            let f = daubechies_filter(order).unwrap();
            assert_eq!(f.len(), 2 * order);
            f.validate().unwrap();
            let hp_sum: f64 = f.highpass().iter().sum();
            assert!(hp_sum.abs() < 1e-12, "db{order} highpass sum {hp_sum}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        for order in MIN_ORDER..=MAX_ORDER {
            let a = daubechies_filter(order).unwrap();
            let b = daubechies_filter(order).unwrap();
            assert_eq!(a.lowpass(), b.lowpass());
        }
    }

    #[test]
    fn order_out_of_range_is_rejected() {
        assert!(daubechies_filter(0).is_err());
        assert!(daubechies_filter(9).is_err());
    }

    #[test]
    fn constant_signal_has_zero_details() {
        let sig = signal(vec![5.0; 64], 100.0);
        let f = daubechies_filter(6).unwrap();
        let dec = dwt_decompose(&sig, &f, 2, BoundaryMode::Periodic).unwrap();
        for level in 1..=2 {
            for &x in dec.detail(level).unwrap() {
                assert!(x.abs() < 1e-12, "level {level} detail {x}");
            }
        }
    }

    #[test]
    fn haar_detail_identity() {
        let samples = random_samples(40, 7);
        let sig = signal(samples.clone(), 100.0);
        let f = daubechies_filter(1).unwrap();
        let dec = dwt_decompose(&sig, &f, 1, BoundaryMode::Periodic).unwrap();
        let d1 = dec.detail(1).unwrap();
        for (k, &d) in d1.iter().enumerate() {
            let want = (samples[2 * k] - samples[2 * k + 1]) / std::f64::consts::SQRT_2;
            assert!((d - want).abs() < 1e-12, "k={k} got {d} want {want}");
        }
    }

    /// Dense analysis matrix for one periodic level, built independently of
    /// the streaming transform.
    fn analysis_matrices(filter: &WaveletFilter, n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        assert_eq!(n % 2, 0);
        let taps = filter.len();
        let mut wa = vec![vec![0.0; n]; n / 2];
        let mut wd = vec![vec![0.0; n]; n / 2];
        for i in 0..n / 2 {
            for m in 0..n {
                let j = (m + n - (2 * i) % n) % n;
                if j < taps {
                    wa[i][m] = filter.lowpass()[j];
                    wd[i][m] = filter.highpass()[j];
                }
            }
        }
        (wa, wd)
    }

    fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        m.iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    #[test]
    fn impulse_decomposition_matches_matrix_oracle() {
        let mut samples = vec![0.0; 32];
        samples[5] = 1.0;
        let sig = signal(samples.clone(), 100.0);
        let f = daubechies_filter(6).unwrap();
        let dec = dwt_decompose(&sig, &f, 2, BoundaryMode::Periodic).unwrap();

        let (wa1, wd1) = analysis_matrices(&f, 32);
        let a1 = mat_vec(&wa1, &samples);
        let d1 = mat_vec(&wd1, &samples);
        let (wa2, wd2) = analysis_matrices(&f, 16);
        let a2 = mat_vec(&wa2, &a1);
        let d2 = mat_vec(&wd2, &a1);

        for (got, want) in dec.detail(1).unwrap().iter().zip(&d1) {
            assert!((got - want).abs() < 1e-12);
        }
        for (got, want) in dec.approximation(2).unwrap().iter().zip(&a2) {
            assert!((got - want).abs() < 1e-12);
        }
        for (got, want) in dec.detail(2).unwrap().iter().zip(&d2) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn impulse_detail_reconstruction_matches_synthesis_matrix() {
        let mut samples = vec![0.0; 16];
        samples[3] = 1.0;
        let sig = signal(samples.clone(), 100.0);
        let f = daubechies_filter(1).unwrap();
        let dec = dwt_decompose(&sig, &f, 1, BoundaryMode::Periodic).unwrap();

        // Synthesis is the transpose of analysis for the periodic transform.
        let (_, wd) = analysis_matrices(&f, 16);
        let d1 = dec.detail(1).unwrap();
        let mut expected = vec![0.0; 16];
        for (i, row) in wd.iter().enumerate() {
            for (m, &w) in row.iter().enumerate() {
                expected[m] += w * d1[i];
            }
        }
        let rec = reconstruct_detail(&dec, 1).unwrap();
        for (got, want) in rec.samples.iter().zip(&expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_detail_reconstructs_to_zero() {
        let sig = signal(vec![1.0; 64], 100.0);
        let f = daubechies_filter(4).unwrap();
        let dec = dwt_decompose(&sig, &f, 2, BoundaryMode::Periodic).unwrap();
        // A constant input already has (numerically) zero details.
        let rec = reconstruct_detail(&dec, 2).unwrap();
        assert_eq!(rec.len(), 64);
        for &x in &rec.samples {
            assert!(x.abs() < 1e-11);
        }
    }

    #[test]
    fn sum_of_parts_recovers_signal_including_odd_lengths() {
        // Length 100 forces an odd stage (25) at level 3.
        for &(len, order, levels) in &[(100usize, 6usize, 3usize), (97, 3, 3), (64, 8, 2)] {
            let samples = random_samples(len, 11);
            let sig = signal(samples.clone(), 360.0);
            let f = daubechies_filter(order).unwrap();
            let dec = dwt_decompose(&sig, &f, levels, BoundaryMode::Periodic).unwrap();

            let mut sum = reconstruct_approximation(&dec).unwrap().samples;
            for level in 1..=levels {
                let det = reconstruct_detail(&dec, level).unwrap();
                assert_eq!(det.len(), len);
                for (s, d) in sum.iter_mut().zip(&det.samples) {
                    *s += d;
                }
            }
            let norm: f64 = samples.iter().map(|x| x * x).sum::<f64>().sqrt();
            let err: f64 = sum
                .iter()
                .zip(&samples)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(
                err / norm < 1e-10,
                "len {len} db{order} x{levels}: relative error {}",
                err / norm
            );

            let full = reconstruct_signal(&dec).unwrap();
            for (a, b) in full.samples.iter().zip(&samples) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn energy_is_conserved_for_even_stages() {
        let samples = random_samples(256, 3);
        let sig = signal(samples.clone(), 360.0);
        let f = daubechies_filter(5).unwrap();
        let dec = dwt_decompose(&sig, &f, 4, BoundaryMode::Periodic).unwrap();
        let input: f64 = samples.iter().map(|x| x * x).sum();
        let coeffs = dec.coefficient_energy();
        assert!(
            ((input - coeffs) / input).abs() < 1e-12,
            "input {input}, coefficients {coeffs}"
        );
    }

    #[test]
    fn db4_annihilates_low_degree_polynomials() {
        let len = 256usize;
        let f = daubechies_filter(4).unwrap();
        for power in 0..4u32 {
            let samples: Vec<f64> = (0..len).map(|i| (i as f64 / len as f64).powi(power as i32)).collect();
            let sig = signal(samples, 100.0);
            let dec = dwt_decompose(&sig, &f, 1, BoundaryMode::Periodic).unwrap();
            let d1 = dec.detail(1).unwrap();
            // Interior coefficients: those whose support does not wrap.
            let interior = (len - f.len()) / 2;
            for (k, &d) in d1.iter().take(interior).enumerate() {
                assert!(d.abs() < 1e-8, "t^{power} interior coefficient {k} = {d}");
            }
        }
    }

    #[test]
    fn symmetric_mode_is_exact_away_from_edges() {
        let samples = random_samples(64, 21);
        let sig = signal(samples.clone(), 100.0);
        let f = daubechies_filter(4).unwrap();
        let dec = dwt_decompose(&sig, &f, 1, BoundaryMode::Symmetric).unwrap();
        let full = reconstruct_signal(&dec).unwrap();
        let guard = 2 * f.len();
        for (i, (got, want)) in full.samples.iter().zip(&samples).enumerate() {
            if (guard..64 - guard).contains(&i) {
                assert!((got - want).abs() < 1e-12, "interior sample {i} drifted");
            }
        }
    }

    #[test]
    fn too_short_signal_is_rejected() {
        let sig = signal(vec![1.0; 40], 100.0);
        let f = daubechies_filter(6).unwrap();
        // 40 -> 20 -> 10: the third level would filter 10 < 12 samples.
        assert!(dwt_decompose(&sig, &f, 3, BoundaryMode::Periodic).is_err());
        assert!(dwt_decompose(&sig, &f, 2, BoundaryMode::Periodic).is_ok());
    }

    #[test]
    fn zero_levels_is_rejected() {
        let sig = signal(vec![1.0; 64], 100.0);
        let f = daubechies_filter(2).unwrap();
        assert!(dwt_decompose(&sig, &f, 0, BoundaryMode::Periodic).is_err());
    }

    #[test]
    fn level_out_of_range_is_rejected() {
        let sig = signal(vec![1.0; 64], 100.0);
        let f = daubechies_filter(2).unwrap();
        let dec = dwt_decompose(&sig, &f, 2, BoundaryMode::Periodic).unwrap();
        assert!(reconstruct_detail(&dec, 0).is_err());
        assert!(reconstruct_detail(&dec, 3).is_err());
    }

    #[test]
    fn max_levels_counts_halvings() {
        // Inputs 100, 50, 25, 13 all reach 12 taps; the fifth level would
        // see only 7 samples.
        assert_eq!(max_levels(100, 12), 4);
        assert_eq!(max_levels(100, 16), 3);
        assert_eq!(max_levels(8, 12), 0);
    }

    proptest! {
        #[test]
        fn decomposition_is_linear(
            seed_x in 0u64..1000,
            seed_y in 1000u64..2000,
            alpha in -3.0f64..3.0,
            beta in -3.0f64..3.0,
        ) {
            let n = 48;
            let x = random_samples(n, seed_x);
            let y = random_samples(n, seed_y);
            let combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
            let f = daubechies_filter(3).unwrap();
            let dx = dwt_decompose(&signal(x, 100.0), &f, 2, BoundaryMode::Periodic).unwrap();
            let dy = dwt_decompose(&signal(y, 100.0), &f, 2, BoundaryMode::Periodic).unwrap();
            let dc = dwt_decompose(&signal(combo, 100.0), &f, 2, BoundaryMode::Periodic).unwrap();
            for level in 1..=2 {
                let want: Vec<f64> = dx.detail(level).unwrap().iter()
                    .zip(dy.detail(level).unwrap())
                    .map(|(a, b)| alpha * a + beta * b)
                    .collect();
                for (got, want) in dc.detail(level).unwrap().iter().zip(&want) {
                    prop_assert!((got - want).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn perfect_reconstruction_on_arbitrary_lengths(
            len in 24usize..200,
            order in 1usize..4,
            seed in 0u64..500,
        ) {
            let samples = random_samples(len, seed);
            let f = daubechies_filter(order).unwrap();
            let levels = max_levels(len, f.len()).clamp(1, 3);
            let sig = signal(samples.clone(), 100.0);
            let dec = dwt_decompose(&sig, &f, levels, BoundaryMode::Periodic).unwrap();
            let rec = reconstruct_signal(&dec).unwrap();
            prop_assert_eq!(rec.len(), len);
            for (a, b) in rec.samples.iter().zip(&samples) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
