//! Multi-user frequency-selective uplink model: ULA steering vectors, sinc
//! pulse-shaping, random multipath channels, QPSK frames, and the exact
//! covariance structure of the received signal.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// Scenario parameters for one uplink trial. The symbol period is fixed to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    /// Receive antennas `N`.
    pub antennas: usize,
    /// Users `U`.
    pub users: usize,
    /// Channel taps `Q`.
    pub taps: usize,
    /// Propagation paths per user `L`.
    pub paths: usize,
    /// Frame length `K` in symbols.
    pub frame_len: usize,
    /// Symbol variance (linear).
    pub sigma_s2: f64,
    pub snr_db: f64,
    /// Upper end of the uniform path-delay range in symbol periods; `None`
    /// means `Q - 1`.
    pub max_delay: Option<f64>,
    /// Scale path gains by `1/sqrt(L)`.
    pub normalize_gains: bool,
    pub seed: u64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            antennas: 64,
            users: 4,
            taps: 5,
            paths: 5,
            frame_len: 600,
            sigma_s2: 1.0,
            snr_db: 20.0,
            max_delay: None,
            normalize_gains: false,
            seed: 0,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("antennas", self.antennas),
            ("users", self.users),
            ("taps", self.taps),
            ("paths", self.paths),
            ("frame_len", self.frame_len),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !self.sigma_s2.is_finite() || self.sigma_s2 <= 0.0 {
            return Err(Error::Config(format!(
                "sigma_s2 must be positive, got {}",
                self.sigma_s2
            )));
        }
        // +inf is accepted and means a noiseless channel.
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::Config(format!("invalid snr_db {}", self.snr_db)));
        }
        if let Some(m) = self.max_delay {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::Config(format!("max_delay must be >= 0, got {m}")));
            }
        }
        Ok(())
    }

    /// `sigma_n^2 = sigma_s^2 / 10^(SNR/10)`.
    pub fn noise_variance(&self) -> f64 {
        self.sigma_s2 / 10f64.powf(self.snr_db / 10.0)
    }

    pub fn delay_range(&self) -> f64 {
        self.max_delay
            .unwrap_or((self.taps.saturating_sub(1)) as f64)
    }
}

/// ULA response `a_n = exp(-j pi (n-1) cos(theta))`, `theta` in degrees.
pub fn steering_vector(theta_deg: f64, antennas: usize) -> Vec<C64> {
    let phase = -PI * theta_deg.to_radians().cos();
    (0..antennas)
        .map(|n| C64::from_polar(1.0, phase * n as f64))
        .collect()
}

/// Normalized sinc, `sin(pi t) / (pi t)` with `sinc(0) = 1`.
pub fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        let x = PI * t;
        x.sin() / x
    }
}

/// Tap samples `g(q - tau)` for `q = 0..Q`.
pub fn pulse_vector(tau: f64, taps: usize) -> Vec<f64> {
    (0..taps).map(|q| sinc(q as f64 - tau)).collect()
}

/// Draws one circularly-symmetric complex Gaussian sample of the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// Multipath parameters of one user and the channel matrix they generate.
#[derive(Debug, Clone, PartialEq)]
pub struct UserChannel {
    pub gains: Vec<C64>,
    pub angles_deg: Vec<f64>,
    pub delays: Vec<f64>,
    /// `N x Q` matrix `sum_l alpha_l a(theta_l) g(tau_l)^T`.
    pub matrix: CMatrix,
}

impl UserChannel {
    pub fn from_paths(
        gains: Vec<C64>,
        angles_deg: Vec<f64>,
        delays: Vec<f64>,
        antennas: usize,
        taps: usize,
    ) -> Result<Self> {
        if gains.len() != angles_deg.len() || gains.len() != delays.len() {
            return Err(Error::dim("path parameter lists differ in length"));
        }
        let matrix = assemble_channel(&gains, &angles_deg, &delays, antennas, taps);
        Ok(Self {
            gains,
            angles_deg,
            delays,
            matrix,
        })
    }

    /// Re-evaluates the channel matrix from the stored path parameters.
    pub fn reconstruct(&self) -> CMatrix {
        assemble_channel(
            &self.gains,
            &self.angles_deg,
            &self.delays,
            self.matrix.rows(),
            self.matrix.cols(),
        )
    }
}

fn assemble_channel(
    gains: &[C64],
    angles_deg: &[f64],
    delays: &[f64],
    antennas: usize,
    taps: usize,
) -> CMatrix {
    let mut h = CMatrix::zeros(antennas, taps);
    for ((&alpha, &theta), &tau) in gains.iter().zip(angles_deg).zip(delays) {
        let a = steering_vector(theta, antennas);
        let g = pulse_vector(tau, taps);
        for (q, &gq) in g.iter().enumerate() {
            let coef = alpha * gq;
            for (h_nq, &a_n) in h.col_mut(q).iter_mut().zip(&a) {
                *h_nq += coef * a_n;
            }
        }
    }
    h
}

/// Channels of every user in one block-fading realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub users: Vec<UserChannel>,
}

impl ChannelRealization {
    pub fn matrix(&self, user: usize) -> &CMatrix {
        &self.users[user].matrix
    }

    pub fn antennas(&self) -> usize {
        self.users.first().map_or(0, |u| u.matrix.rows())
    }

    pub fn taps(&self) -> usize {
        self.users.first().map_or(0, |u| u.matrix.cols())
    }
}

/// Draws gains ~ CN(0,1), angles ~ U[-90, 90] degrees and delays ~ U[0, max_delay].
pub fn draw_channel<R: Rng + ?Sized>(
    params: &ScenarioParams,
    rng: &mut R,
) -> Result<ChannelRealization> {
    params.validate()?;
    let gain_var = if params.normalize_gains {
        1.0 / params.paths as f64
    } else {
        1.0
    };
    let max_delay = params.delay_range();
    let users = (0..params.users)
        .map(|_| {
            let mut gains = Vec::with_capacity(params.paths);
            let mut angles = Vec::with_capacity(params.paths);
            let mut delays = Vec::with_capacity(params.paths);
            for _ in 0..params.paths {
                gains.push(complex_gaussian(rng, gain_var));
                angles.push(rng.random_range(-90.0..=90.0));
                delays.push(if max_delay > 0.0 {
                    rng.random_range(0.0..=max_delay)
                } else {
                    0.0
                });
            }
            UserChannel::from_paths(gains, angles, delays, params.antennas, params.taps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelRealization { users })
}

/// I.i.d. QPSK symbols `(+-1 +- j)/sqrt(2) * sqrt(sigma_s2)`.
pub fn qpsk_symbols<R: Rng + ?Sized>(count: usize, sigma_s2: f64, rng: &mut R) -> Vec<C64> {
    let amp = FRAC_1_SQRT_2 * sigma_s2.sqrt();
    (0..count)
        .map(|_| {
            let re = if rng.random::<bool>() { amp } else { -amp };
            let im = if rng.random::<bool>() { amp } else { -amp };
            C64::new(re, im)
        })
        .collect()
}

/// One received frame and everything that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalFrame {
    /// `N x K` received samples.
    pub x: CMatrix,
    /// Per-user symbol history of length `K + Q - 1`; entry `m` is the symbol
    /// sent at time `m - (Q - 1)`, so frame time 0 sits at index `Q - 1`.
    pub symbols: Vec<Vec<C64>>,
    /// `N x K` additive noise.
    pub noise: CMatrix,
    pub taps: usize,
}

impl SignalFrame {
    pub fn frame_len(&self) -> usize {
        self.x.cols()
    }

    /// `s_u[k - lag]` for frame time `k`. Requires `lag < Q`.
    pub fn symbol(&self, user: usize, k: usize, lag: usize) -> C64 {
        self.symbols[user][k + self.taps - 1 - lag]
    }

    /// Training sequence `[s_u[-lag], ..., s_u[K-1-lag]]` aligned with the
    /// frame columns.
    pub fn training(&self, user: usize, lag: usize) -> Result<Vec<C64>> {
        if user >= self.symbols.len() {
            return Err(Error::Index(format!(
                "user {user} of {}",
                self.symbols.len()
            )));
        }
        if lag >= self.taps {
            return Err(Error::Index(format!(
                "lag {lag} needs at least {} taps of symbol history",
                lag + 1
            )));
        }
        let start = self.taps - 1 - lag;
        Ok(self.symbols[user][start..start + self.frame_len()].to_vec())
    }

    /// Noise-free part `sum_u H_u s_u[k]` recomputed from the channel.
    pub fn noiseless(&self, channel: &ChannelRealization) -> CMatrix {
        let n = self.x.rows();
        let k_len = self.frame_len();
        let mut out = CMatrix::zeros(n, k_len);
        for (u, user) in channel.users.iter().enumerate() {
            for k in 0..k_len {
                for q in 0..self.taps {
                    let s = self.symbol(u, k, q);
                    let h = user.matrix.col(q);
                    for (o, &hn) in out.col_mut(k).iter_mut().zip(h) {
                        *o += hn * s;
                    }
                }
            }
        }
        out
    }

    /// FNV-1a hash of the received samples, used to confirm that every
    /// equalizer in a trial saw the same data.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for z in self.x.data() {
            for bits in [z.re.to_bits(), z.im.to_bits()] {
                for byte in bits.to_le_bytes() {
                    h ^= u64::from(byte);
                    h = h.wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
        }
        h
    }
}

/// Generates symbols (with `Q - 1` pre-frame symbols per user), noise, and
/// the received frame `x[k] = sum_u H_u s_u[k] + b[k]`.
pub fn synthesize_frame<R: Rng + ?Sized>(
    params: &ScenarioParams,
    channel: &ChannelRealization,
    rng: &mut R,
) -> Result<SignalFrame> {
    params.validate()?;
    if channel.users.len() != params.users
        || channel.antennas() != params.antennas
        || channel.taps() != params.taps
    {
        return Err(Error::dim(
            "channel realization does not match the scenario parameters",
        ));
    }
    let history = params.frame_len + params.taps - 1;
    let symbols: Vec<Vec<C64>> = (0..params.users)
        .map(|_| qpsk_symbols(history, params.sigma_s2, rng))
        .collect();
    let sigma_n2 = params.noise_variance();
    let noise = CMatrix::from_fn(params.antennas, params.frame_len, |_, _| {
        complex_gaussian(rng, sigma_n2)
    });
    let mut frame = SignalFrame {
        x: CMatrix::zeros(params.antennas, params.frame_len),
        symbols,
        noise,
        taps: params.taps,
    };
    frame.x = frame
        .noiseless(channel)
        .add(&frame.noise)
        .expect("shapes agree by construction");
    Ok(frame)
}

/// Exact second-order statistics of the received signal for one target user.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariances {
    pub target: usize,
    pub sigma_s2: f64,
    pub sigma_n2: f64,
    /// `H_u R_ss H_u^H`.
    pub r_dd: CMatrix,
    /// `sum_{j != u} H_j R_ss H_j^H`.
    pub r_ii: CMatrix,
    /// `sigma_n^2 I`.
    pub r_bb: CMatrix,
    pub r_xx: CMatrix,
    /// `p(delta) = H_u R_ss e_delta` for each lag `delta = 0..Q`.
    pub cross: Vec<Vec<C64>>,
}

impl Covariances {
    /// `R_ii + R_bb`.
    pub fn interference_plus_noise(&self) -> CMatrix {
        self.r_ii.add(&self.r_bb).expect("same shape")
    }

    /// `R_ss = sigma_s^2 I_Q`.
    pub fn r_ss(&self) -> CMatrix {
        CMatrix::identity(self.cross.len()).scale(C64::new(self.sigma_s2, 0.0))
    }
}

pub fn theoretical_covariances(
    params: &ScenarioParams,
    channel: &ChannelRealization,
    target: usize,
) -> Result<Covariances> {
    if target >= channel.users.len() {
        return Err(Error::Index(format!(
            "target user {target} of {}",
            channel.users.len()
        )));
    }
    let n = channel.antennas();
    let s2 = C64::new(params.sigma_s2, 0.0);
    let sigma_n2 = params.noise_variance();
    let outer =
        |h: &CMatrix| -> CMatrix { h.matmul(&h.conj_transpose()).expect("conformant").scale(s2) };
    let r_dd = outer(channel.matrix(target));
    let mut r_ii = CMatrix::zeros(n, n);
    for (j, user) in channel.users.iter().enumerate() {
        if j != target {
            r_ii = r_ii.add(&outer(&user.matrix))?;
        }
    }
    let r_bb = CMatrix::identity(n).scale(C64::new(sigma_n2, 0.0));
    let r_xx = r_dd.add(&r_ii)?.add(&r_bb)?;
    let h = channel.matrix(target);
    let cross = (0..h.cols())
        .map(|q| h.col(q).iter().map(|&z| z * s2).collect())
        .collect();
    Ok(Covariances {
        target,
        sigma_s2: params.sigma_s2,
        sigma_n2,
        r_dd,
        r_ii,
        r_bb,
        r_xx,
        cross,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn steering_examples() {
        for z in steering_vector(90.0, 4) {
            assert!(close(z, C64::new(1.0, 0.0), 1e-15));
        }
        let a = steering_vector(0.0, 4);
        for (n, z) in a.iter().enumerate() {
            let expect = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!(close(*z, C64::new(expect, 0.0), 1e-14));
        }
        let a = steering_vector(60.0, 2);
        assert!(close(a[0], C64::new(1.0, 0.0), 0.0));
        assert!(close(a[1], C64::new(0.0, -1.0), 1e-15));
    }

    #[test]
    fn steering_entries_unit_modulus() {
        for theta in [-90.0, -33.3, 0.0, 12.5, 77.0] {
            for z in steering_vector(theta, 16) {
                assert!((z.norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pulse_examples() {
        let g = pulse_vector(0.0, 4);
        assert_eq!(g[0], 1.0);
        assert!(g[1..].iter().all(|x| x.abs() < 1e-15));
        let g = pulse_vector(1.0, 3);
        assert!(g[0].abs() < 1e-15 && (g[1] - 1.0).abs() < 1e-15 && g[2].abs() < 1e-15);
        let g = pulse_vector(0.5, 2);
        assert!((g[0] - 2.0 / PI).abs() < 1e-15);
        assert!((g[1] - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn single_path_channel_is_outer_product() {
        let ch =
            UserChannel::from_paths(vec![C64::new(1.0, 0.0)], vec![90.0], vec![0.0], 2, 2).unwrap();
        let m = &ch.matrix;
        for n in 0..2 {
            assert!(close(m[(n, 0)], C64::new(1.0, 0.0), 1e-15));
            assert!(close(m[(n, 1)], C64::new(0.0, 0.0), 1e-15));
        }
    }

    #[test]
    fn drawn_channel_reconstructs_and_is_deterministic() {
        let params = ScenarioParams {
            antennas: 8,
            ..Default::default()
        };
        let a = draw_channel(&params, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = draw_channel(&params, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        for user in &a.users {
            assert!(user.reconstruct().sub(&user.matrix).unwrap().max_abs() < 1e-12);
            assert!(user.angles_deg.iter().all(|t| (-90.0..=90.0).contains(t)));
            assert!(user.delays.iter().all(|t| (0.0..=4.0).contains(t)));
        }
    }

    #[test]
    fn qpsk_constant_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for s in qpsk_symbols(1000, 2.5, &mut rng) {
            assert!((s.norm_sqr() - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn qpsk_sample_mean_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let s = qpsk_symbols(n, 1.0, &mut rng);
        let mean: C64 = s.iter().sum::<C64>() / n as f64;
        // Per-component variance is 1/2.
        let bound = 3.0 * (1.0f64 / n as f64).sqrt();
        assert!(mean.re.abs() < bound && mean.im.abs() < bound, "{mean}");
    }

    #[test]
    fn qpsk_cross_moments_vanish() {
        // E[s_i[k-p] s_j^*[k-q]] for two users and lags 0..3.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 50_000;
        let streams = [
            qpsk_symbols(n + 3, 1.0, &mut rng),
            qpsk_symbols(n + 3, 1.0, &mut rng),
        ];
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..3 {
                    for q in 0..3 {
                        let m: C64 = (3..n + 3)
                            .map(|k| streams[i][k - p] * streams[j][k - q].conj())
                            .sum::<C64>()
                            / n as f64;
                        if i == j && p == q {
                            assert!((m.re - 1.0).abs() < 1e-12);
                        } else {
                            // Five standard deviations of a unit-variance product mean.
                            assert!(m.norm() < 5.0 / (n as f64).sqrt(), "{i}{j}{p}{q}: {m}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn noiseless_memoryless_frame() {
        let params = ScenarioParams {
            antennas: 4,
            users: 1,
            taps: 1,
            paths: 2,
            frame_len: 10,
            snr_db: f64::INFINITY,
            ..Default::default()
        };
        assert_eq!(params.noise_variance(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = draw_channel(&params, &mut rng).unwrap();
        let f = synthesize_frame(&params, &ch, &mut rng).unwrap();
        let h = ch.matrix(0).col(0);
        for k in 0..10 {
            for (n, &hn) in h.iter().enumerate() {
                assert_eq!(f.x[(n, k)], hn * f.symbol(0, k, 0));
            }
        }
    }

    #[test]
    fn zero_channel_gives_noise_only() {
        let params = ScenarioParams {
            antennas: 3,
            users: 2,
            taps: 2,
            paths: 1,
            frame_len: 7,
            ..Default::default()
        };
        let zero_user = || {
            UserChannel::from_paths(vec![C64::new(0.0, 0.0)], vec![10.0], vec![0.3], 3, 2).unwrap()
        };
        let ch = ChannelRealization {
            users: vec![zero_user(), zero_user()],
        };
        let f = synthesize_frame(&params, &ch, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(f.x, f.noise);
    }

    #[test]
    fn frames_are_deterministic_and_reconstructible() {
        let params = ScenarioParams {
            antennas: 6,
            frame_len: 30,
            ..Default::default()
        };
        let ch = draw_channel(&params, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let a = synthesize_frame(&params, &ch, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let b = synthesize_frame(&params, &ch, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.checksum(), b.checksum());
        let rebuilt = a.noiseless(&ch).add(&a.noise).unwrap();
        assert!(rebuilt.sub(&a.x).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn training_alignment() {
        let params = ScenarioParams {
            antennas: 2,
            users: 1,
            taps: 3,
            paths: 1,
            frame_len: 5,
            ..Default::default()
        };
        let ch = draw_channel(&params, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let f = synthesize_frame(&params, &ch, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let s = f.training(0, 2).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s[0], f.symbols[0][0]);
        assert_eq!(s[2], f.symbol(0, 2, 2));
        assert!(f.training(0, 3).is_err());
    }

    #[test]
    fn two_by_two_covariance() {
        let params = ScenarioParams {
            antennas: 2,
            users: 1,
            taps: 1,
            paths: 1,
            sigma_s2: 1.0,
            snr_db: 0.0,
            ..Default::default()
        };
        let h = CMatrix::from_rows(&[vec![C64::new(1.0, 0.0)], vec![C64::new(0.0, 0.0)]]).unwrap();
        let ch = ChannelRealization {
            users: vec![UserChannel {
                gains: vec![],
                angles_deg: vec![],
                delays: vec![],
                matrix: h,
            }],
        };
        let cov = theoretical_covariances(&params, &ch, 0).unwrap();
        let expect = CMatrix::from_rows(&[
            vec![C64::new(2.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        ])
        .unwrap();
        assert!(cov.r_xx.sub(&expect).unwrap().max_abs() < 1e-15);
        assert_eq!(cov.cross[0], vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        assert_eq!(cov.r_ii.max_abs(), 0.0);
    }

    #[test]
    fn covariance_decomposition_holds() {
        let params = ScenarioParams {
            antennas: 8,
            ..Default::default()
        };
        let ch = draw_channel(&params, &mut ChaCha8Rng::seed_from_u64(21)).unwrap();
        let cov = theoretical_covariances(&params, &ch, 1).unwrap();
        let sum = cov.r_dd.add(&cov.r_ii).unwrap().add(&cov.r_bb).unwrap();
        assert!(sum.sub(&cov.r_xx).unwrap().max_abs() <= 1e-12 * cov.r_xx.max_abs());
        for m in [&cov.r_dd, &cov.r_ii, &cov.r_bb, &cov.r_xx] {
            assert!(m.hermitian_defect() < 1e-12 * m.max_abs().max(1.0));
        }
        assert!(theoretical_covariances(&params, &ch, 4).is_err());
    }

    #[test]
    fn noise_variance_from_snr() {
        let p = ScenarioParams {
            sigma_s2: 2.0,
            snr_db: 10.0,
            ..Default::default()
        };
        assert!((p.noise_variance() - 0.2).abs() < 1e-15);
    }
}
