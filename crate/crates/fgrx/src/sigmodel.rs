//! Frequency-domain MIMO-OFDM signal model and its configuration.
//!
//! A packet is a K×T grid (subcarriers × OFDM symbols) carrying N spatial
//! streams into M receive antennas. Channels are block fading: each (m, n)
//! antenna pair has L time-domain taps drawn once per packet, independent
//! CN(0, pdp_l), and the per-subcarrier response is the L-point DFT of those
//! taps. Observations are
//!
//! ```text
//! y_m(k,t) = Σ_n x_n(k,t) · Σ_l h_mn(l) · d_kl  +  w_m(k,t),   w ~ CN(0, 1/γ)
//! ```
//!
//! with d_kl = exp(−j2πkl/K) and γ = 10^(snr_db/10) under unit average symbol
//! energy and a unit-energy power-delay profile.
//!
//! Pilot resources are antenna-orthogonal: at a pilot (k, t) exactly one
//! antenna transmits a known unit-energy symbol and the rest transmit a known
//! zero, so channel estimation can separate antennas without joint detection.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::coding::{CodeSpec, Constellation};
use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Power-delay profile specification; resolved to a normalized length-L vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdpSpec {
    /// Equal power on all L taps.
    Uniform,
    /// Power decaying by the given number of dB per tap.
    Exponential { decay_db_per_tap: f64 },
    /// Explicit per-tap powers (normalized to sum 1 at resolve time).
    Explicit(Vec<f64>),
}

impl Default for PdpSpec {
    fn default() -> Self {
        PdpSpec::Uniform
    }
}

/// Pilot layout specification; resolved to explicit (antenna, k, t, value) entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotGridSpec {
    /// Antenna-orthogonal comb: antenna n occupies subcarriers k ≡ n
    /// (mod n_tx·spacing) of the listed OFDM symbols (indices ≥ T are
    /// ignored, so the same spec works across grid heights).
    Comb { spacing: usize, symbols: Vec<usize> },
    /// Explicit pilot entries.
    Explicit { entries: Vec<PilotEntry> },
}

impl Default for PilotGridSpec {
    fn default() -> Self {
        PilotGridSpec::Comb {
            spacing: 2,
            symbols: vec![0, 4],
        }
    }
}

/// One pilot resource: antenna `tx` sends `value` on (subcarrier, symbol);
/// all other antennas send zero there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotEntry {
    pub tx: usize,
    pub subcarrier: usize,
    pub symbol: usize,
    pub value: Complex64,
}

/// Full per-packet system description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_subcarriers: usize,
    pub n_taps: usize,
    pub n_ofdm_symbols: usize,
    pub constellation: Constellation,
    pub code: CodeSpec,
    pub pilot_grid: PilotGridSpec,
    pub snr_db: f64,
    pub seed: u64,
    pub power_delay_profile: PdpSpec,
    /// Damping of EP messages in natural parameters, in [0, 1); 0 disables.
    pub ep_damping: f64,
}

impl Default for SystemConfig {
    /// Bench-scale default: 2×2, 64 subcarriers, 4 taps, 4 OFDM symbols,
    /// QPSK with the (7,5) rate-1/2 code, comb pilots, uniform PDP.
    fn default() -> Self {
        SystemConfig {
            n_tx: 2,
            n_rx: 2,
            n_subcarriers: 64,
            n_taps: 4,
            n_ofdm_symbols: 4,
            constellation: Constellation::Qpsk,
            code: CodeSpec::default(),
            pilot_grid: PilotGridSpec::default(),
            snr_db: 8.0,
            seed: 1,
            power_delay_profile: PdpSpec::default(),
            ep_damping: 0.0,
        }
    }
}

impl SystemConfig {
    /// Noise precision γ = 10^(snr_db/10).
    pub fn gamma(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    /// Resolved power-delay profile (length L, nonnegative, sums to 1).
    pub fn pdp(&self) -> Vec<f64> {
        let l = self.n_taps;
        let raw: Vec<f64> = match &self.power_delay_profile {
            PdpSpec::Uniform => vec![1.0; l],
            PdpSpec::Exponential { decay_db_per_tap } => (0..l)
                .map(|i| 10f64.powf(-decay_db_per_tap * i as f64 / 10.0))
                .collect(),
            PdpSpec::Explicit(v) => v.clone(),
        };
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }

    /// Resolved pilot entries, sorted by (symbol, subcarrier, antenna).
    pub fn pilot_entries(&self) -> Vec<PilotEntry> {
        let mut entries = match &self.pilot_grid {
            PilotGridSpec::Comb { spacing, symbols } => {
                let period = self.n_tx * spacing;
                let mut out = Vec::new();
                for &t in symbols.iter().filter(|&&t| t < self.n_ofdm_symbols) {
                    for n in 0..self.n_tx {
                        let mut k = n;
                        while k < self.n_subcarriers {
                            out.push(PilotEntry {
                                tx: n,
                                subcarrier: k,
                                symbol: t,
                                value: pilot_value(n, k, t),
                            });
                            k += period;
                        }
                    }
                }
                out
            }
            PilotGridSpec::Explicit { entries } => entries.clone(),
        };
        entries.sort_by_key(|e| (e.symbol, e.subcarrier, e.tx));
        entries
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_tx == 0 || self.n_rx == 0 || self.n_subcarriers == 0 || self.n_ofdm_symbols == 0 {
            return fail("all grid dimensions must be at least 1".into());
        }
        if self.n_taps == 0 || self.n_taps > self.n_subcarriers {
            return fail(format!(
                "n_taps {} must be in 1..=n_subcarriers {}",
                self.n_taps, self.n_subcarriers
            ));
        }
        self.code.validate()?;
        if !(0.0..1.0).contains(&self.ep_damping) {
            return fail(format!("ep_damping {} outside [0, 1)", self.ep_damping));
        }
        if let PdpSpec::Explicit(v) = &self.power_delay_profile {
            if v.len() != self.n_taps {
                return fail(format!("pdp length {} != n_taps {}", v.len(), self.n_taps));
            }
            if v.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) || v.iter().sum::<f64>() <= 0.0 {
                return fail("pdp entries must be nonnegative with positive sum".into());
            }
        }
        if let PilotGridSpec::Comb { spacing, .. } = &self.pilot_grid {
            if *spacing == 0 {
                return fail("pilot comb spacing must be at least 1".into());
            }
        }
        // Pilot entries must lie inside the grid, carry energy, and keep
        // antenna orthogonality: at most one antenna active per (k, t).
        let mut seen: std::collections::HashMap<(usize, usize), usize> = Default::default();
        for e in self.pilot_entries() {
            if e.tx >= self.n_tx || e.subcarrier >= self.n_subcarriers || e.symbol >= self.n_ofdm_symbols {
                return fail(format!(
                    "pilot entry (tx {}, k {}, t {}) outside the grid",
                    e.tx, e.subcarrier, e.symbol
                ));
            }
            if e.value.norm_sqr() <= 0.0 {
                return fail(format!(
                    "pilot entry (tx {}, k {}, t {}) has zero energy",
                    e.tx, e.subcarrier, e.symbol
                ));
            }
            if let Some(prev) = seen.insert((e.subcarrier, e.symbol), e.tx) {
                return fail(format!(
                    "pilot resource (k {}, t {}) claimed by antennas {} and {}",
                    e.subcarrier, e.symbol, prev, e.tx
                ));
            }
        }
        Ok(())
    }

    /// Data (k, t) resources, i.e. everything not claimed by a pilot, in
    /// transmit fill order (symbol-major, then subcarrier).
    pub fn resource_map(&self) -> ResourceMap {
        let pilots = self.pilot_entries();
        let claimed: std::collections::HashSet<(usize, usize)> =
            pilots.iter().map(|e| (e.subcarrier, e.symbol)).collect();
        let mut data = Vec::with_capacity(self.n_subcarriers * self.n_ofdm_symbols - claimed.len());
        for t in 0..self.n_ofdm_symbols {
            for k in 0..self.n_subcarriers {
                if !claimed.contains(&(k, t)) {
                    data.push((k, t));
                }
            }
        }
        ResourceMap {
            n_tx: self.n_tx,
            pilots,
            data,
        }
    }

    /// Information bits per stream for this grid, given the code's tail overhead.
    pub fn info_bits_per_stream(&self) -> Result<usize> {
        let map = self.resource_map();
        let coded = map.data.len() * self.constellation.bits_per_symbol();
        if coded == 0 {
            return Ok(0);
        }
        self.code.info_len(coded)
    }
}

/// Deterministic unit-energy pilot symbol for a given (antenna, k, t):
/// a QPSK point selected by a fixed index so transmitter and receiver agree.
fn pilot_value(tx: usize, k: usize, t: usize) -> Complex64 {
    let pts = Constellation::Qpsk.points();
    pts[(tx + 3 * k + 5 * t) % 4]
}

/// Resolved pilot/data layout of one packet grid.
#[derive(Clone, Debug)]
pub struct ResourceMap {
    n_tx: usize,
    /// Pilot entries sorted by (symbol, subcarrier, antenna).
    pub pilots: Vec<PilotEntry>,
    /// Data (subcarrier, symbol) pairs in transmit fill order.
    pub data: Vec<(usize, usize)>,
}

impl ResourceMap {
    /// The known transmit vector at a pilot resource (zeros except the active antenna).
    pub fn pilot_vector(&self, entry: &PilotEntry) -> DVector<Complex64> {
        let mut s = DVector::zeros(self.n_tx);
        s[entry.tx] = entry.value;
        s
    }
}

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

/// Block-fading channel taps, indexed (rx m, tx n, tap l).
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTaps {
    n_rx: usize,
    n_tx: usize,
    n_taps: usize,
    taps: Vec<Complex64>,
}

impl ChannelTaps {
    pub fn new(n_rx: usize, n_tx: usize, n_taps: usize, taps: Vec<Complex64>) -> Self {
        assert_eq!(taps.len(), n_rx * n_tx * n_taps);
        ChannelTaps {
            n_rx,
            n_tx,
            n_taps,
            taps,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_rx, self.n_tx, self.n_taps)
    }

    pub fn get(&self, m: usize, n: usize, l: usize) -> Complex64 {
        self.taps[(m * self.n_tx + n) * self.n_taps + l]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.taps
    }
}

/// Per-subcarrier frequency response, indexed (rx m, tx n, subcarrier k).
#[derive(Clone, Debug, PartialEq)]
pub struct FreqResponse {
    n_rx: usize,
    n_tx: usize,
    n_subcarriers: usize,
    values: Vec<Complex64>,
}

impl FreqResponse {
    pub fn get(&self, m: usize, n: usize, k: usize) -> Complex64 {
        self.values[(m * self.n_tx + n) * self.n_subcarriers + k]
    }
}

/// Transmitted symbols, indexed (tx n, subcarrier k, symbol t), with a
/// pilot/data flag per entry.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolGrid {
    n_tx: usize,
    n_subcarriers: usize,
    n_symbols: usize,
    x: Vec<Complex64>,
    kind: Vec<SymbolKind>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Pilot,
    Data,
}

impl SymbolGrid {
    /// Places pilots (and their companion zeros) plus per-stream data symbols
    /// in transmit fill order. `data_per_stream[n]` must match the map's data
    /// resource count.
    pub fn assemble(cfg: &SystemConfig, map: &ResourceMap, data_per_stream: &[Vec<Complex64>]) -> Self {
        assert_eq!(data_per_stream.len(), cfg.n_tx);
        for d in data_per_stream {
            assert_eq!(d.len(), map.data.len(), "data symbol count mismatch");
        }
        let (n, k_total, t_total) = (cfg.n_tx, cfg.n_subcarriers, cfg.n_ofdm_symbols);
        let mut x = vec![Complex64::ZERO; n * k_total * t_total];
        let mut kind = vec![SymbolKind::Data; n * k_total * t_total];
        let idx = |nn: usize, k: usize, t: usize| (nn * k_total + k) * t_total + t;
        for e in &map.pilots {
            for nn in 0..n {
                x[idx(nn, e.subcarrier, e.symbol)] = Complex64::ZERO;
                kind[idx(nn, e.subcarrier, e.symbol)] = SymbolKind::Pilot;
            }
            x[idx(e.tx, e.subcarrier, e.symbol)] = e.value;
        }
        for (r, &(k, t)) in map.data.iter().enumerate() {
            for nn in 0..n {
                x[idx(nn, k, t)] = data_per_stream[nn][r];
            }
        }
        SymbolGrid {
            n_tx: n,
            n_subcarriers: k_total,
            n_symbols: t_total,
            x,
            kind,
        }
    }

    /// All-zero data grid (useful for noise-only observations).
    pub fn zeros(cfg: &SystemConfig) -> Self {
        SymbolGrid {
            n_tx: cfg.n_tx,
            n_subcarriers: cfg.n_subcarriers,
            n_symbols: cfg.n_ofdm_symbols,
            x: vec![Complex64::ZERO; cfg.n_tx * cfg.n_subcarriers * cfg.n_ofdm_symbols],
            kind: vec![SymbolKind::Data; cfg.n_tx * cfg.n_subcarriers * cfg.n_ofdm_symbols],
        }
    }

    pub fn get(&self, n: usize, k: usize, t: usize) -> Complex64 {
        self.x[(n * self.n_subcarriers + k) * self.n_symbols + t]
    }

    pub fn kind(&self, n: usize, k: usize, t: usize) -> SymbolKind {
        self.kind[(n * self.n_subcarriers + k) * self.n_symbols + t]
    }
}

/// Received samples, indexed (rx m, subcarrier k, symbol t), plus the noise
/// precision they were generated with.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationGrid {
    n_rx: usize,
    n_subcarriers: usize,
    n_symbols: usize,
    y: Vec<Complex64>,
    noise_precision: f64,
}

impl ObservationGrid {
    pub fn get(&self, m: usize, k: usize, t: usize) -> Complex64 {
        self.y[(m * self.n_subcarriers + k) * self.n_symbols + t]
    }

    /// Received M-vector at one resource element.
    pub fn vector(&self, k: usize, t: usize) -> DVector<Complex64> {
        DVector::from_fn(self.n_rx, |m, _| self.get(m, k, t))
    }

    pub fn noise_precision(&self) -> f64 {
        self.noise_precision
    }
}

// ---------------------------------------------------------------------------
// Model operations
// ---------------------------------------------------------------------------

/// K×L DFT matrix with entries d_kl = exp(−j2πkl/K).
pub fn dft_matrix(n_subcarriers: usize, n_taps: usize) -> Result<DMatrix<Complex64>> {
    if n_taps == 0 || n_taps > n_subcarriers {
        return Err(Error::BadDims {
            context: format!("dft_matrix needs 1 <= L <= K, got L={n_taps}, K={n_subcarriers}"),
        });
    }
    let k_total = n_subcarriers as f64;
    Ok(DMatrix::from_fn(n_subcarriers, n_taps, |k, l| {
        Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (k as f64) * (l as f64) / k_total)
    }))
}

/// Per-subcarrier response h̃_mn(k) = Σ_l h_mn(l) · d_kl.
pub fn freq_response(taps: &ChannelTaps, dft: &DMatrix<Complex64>) -> FreqResponse {
    let (n_rx, n_tx, n_taps) = taps.dims();
    assert_eq!(dft.ncols(), n_taps, "DFT matrix tap count mismatch");
    let n_subcarriers = dft.nrows();
    let mut values = Vec::with_capacity(n_rx * n_tx * n_subcarriers);
    for m in 0..n_rx {
        for n in 0..n_tx {
            for k in 0..n_subcarriers {
                let mut acc = Complex64::ZERO;
                for l in 0..n_taps {
                    acc += taps.get(m, n, l) * dft[(k, l)];
                }
                values.push(acc);
            }
        }
    }
    FreqResponse {
        n_rx,
        n_tx,
        n_subcarriers,
        values,
    }
}

fn complex_normal(rng: &mut impl Rng, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

/// Draws block-fading taps, independent CN(0, pdp_l), consuming the RNG in
/// (m, n, l) lexicographic order. Zero-power taps come out exactly zero.
pub fn draw_channel(cfg: &SystemConfig, rng: &mut impl Rng) -> ChannelTaps {
    let pdp = cfg.pdp();
    let mut taps = Vec::with_capacity(cfg.n_rx * cfg.n_tx * cfg.n_taps);
    for _m in 0..cfg.n_rx {
        for _n in 0..cfg.n_tx {
            for &p in &pdp {
                taps.push(complex_normal(rng, p));
            }
        }
    }
    ChannelTaps::new(cfg.n_rx, cfg.n_tx, cfg.n_taps, taps)
}

/// Pushes a symbol grid through the channel and adds CN(0, 1/γ) noise,
/// consuming the RNG in (m, k, t) lexicographic order. An infinite γ
/// (snr_db = ∞) produces exact noiseless observations.
pub fn observe(
    x: &SymbolGrid,
    taps: &ChannelTaps,
    cfg: &SystemConfig,
    rng: &mut impl Rng,
) -> Result<ObservationGrid> {
    let (n_rx, n_tx, _) = taps.dims();
    assert_eq!(n_tx, cfg.n_tx);
    assert_eq!(x.n_tx, cfg.n_tx);
    let dft = dft_matrix(cfg.n_subcarriers, cfg.n_taps)?;
    let h = freq_response(taps, &dft);
    let gamma = cfg.gamma();
    let noise_var = if gamma.is_infinite() { 0.0 } else { 1.0 / gamma };
    let mut y = Vec::with_capacity(n_rx * cfg.n_subcarriers * cfg.n_ofdm_symbols);
    for m in 0..n_rx {
        for k in 0..cfg.n_subcarriers {
            for t in 0..cfg.n_ofdm_symbols {
                let mut acc = Complex64::ZERO;
                for n in 0..n_tx {
                    acc += x.get(n, k, t) * h.get(m, n, k);
                }
                y.push(acc + complex_normal(rng, noise_var));
            }
        }
    }
    Ok(ObservationGrid {
        n_rx,
        n_subcarriers: cfg.n_subcarriers,
        n_symbols: cfg.n_ofdm_symbols,
        y,
        noise_precision: gamma,
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // --- DFT -----------------------------------------------------------------

    #[test]
    fn dft_corner_entries() {
        let d = dft_matrix(4, 2).unwrap();
        assert!((d[(0, 0)] - Complex64::ONE).norm() < 1e-15);
        // d_11 = exp(−j·2π/4) = −j
        assert!((d[(1, 1)] - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn dft_columns_are_orthogonal_with_norm_k() {
        let k = 8;
        let d = dft_matrix(k, k).unwrap();
        for l1 in 0..k {
            for l2 in 0..k {
                let dot: Complex64 = (0..k).map(|kk| d[(kk, l1)] * d[(kk, l2)].conj()).sum();
                let expect = if l1 == l2 { k as f64 } else { 0.0 };
                assert!((dot - Complex64::from(expect)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dft_rejects_bad_dims() {
        assert!(matches!(dft_matrix(4, 5), Err(Error::BadDims { .. })));
        assert!(matches!(dft_matrix(4, 0), Err(Error::BadDims { .. })));
    }

    // --- frequency response ----------------------------------------------------

    #[test]
    fn single_tap_response_is_flat() {
        let taps = ChannelTaps::new(1, 1, 1, vec![c(0.3, -0.7)]);
        let d = dft_matrix(16, 1).unwrap();
        let h = freq_response(&taps, &d);
        for k in 0..16 {
            assert!((h.get(0, 0, k) - c(0.3, -0.7)).norm() < 1e-15);
        }
    }

    #[test]
    fn two_tap_response_by_hand() {
        // taps (1, 1), K = 2: h̃(0) = 2, h̃(1) = 1 + e^{−jπ} = 0.
        let taps = ChannelTaps::new(1, 1, 2, vec![Complex64::ONE, Complex64::ONE]);
        let d = dft_matrix(2, 2).unwrap();
        let h = freq_response(&taps, &d);
        assert!((h.get(0, 0, 0) - c(2.0, 0.0)).norm() < 1e-15);
        assert!(h.get(0, 0, 1).norm() < 1e-15);
    }

    #[test]
    fn response_satisfies_parseval() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let cfg = SystemConfig {
            n_rx: 2,
            n_tx: 2,
            n_subcarriers: 32,
            n_taps: 4,
            ..Default::default()
        };
        let taps = draw_channel(&cfg, &mut rng);
        let d = dft_matrix(32, 4).unwrap();
        let h = freq_response(&taps, &d);
        for m in 0..2 {
            for n in 0..2 {
                let freq_energy: f64 = (0..32).map(|k| h.get(m, n, k).norm_sqr()).sum();
                let tap_energy: f64 = (0..4).map(|l| taps.get(m, n, l).norm_sqr()).sum();
                assert!((freq_energy - 32.0 * tap_energy).abs() < 1e-9 * freq_energy.max(1.0));
            }
        }
    }

    // --- channel drawing ---------------------------------------------------------

    #[test]
    fn draw_channel_is_seed_deterministic() {
        let cfg = SystemConfig::default();
        let a = draw_channel(&cfg, &mut ChaCha12Rng::seed_from_u64(5));
        let b = draw_channel(&cfg, &mut ChaCha12Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn draw_channel_matches_pdp_power() {
        let cfg = SystemConfig {
            n_rx: 2,
            n_tx: 2,
            n_taps: 4,
            ..Default::default()
        };
        let mut rng = ChaCha12Rng::seed_from_u64(101);
        let mut sums = vec![0.0f64; 4];
        let packets = 6250; // 6250 · 4 antenna pairs = 25k samples per tap position
        for _ in 0..packets {
            let taps = draw_channel(&cfg, &mut rng);
            for m in 0..2 {
                for n in 0..2 {
                    for l in 0..4 {
                        sums[l] += taps.get(m, n, l).norm_sqr();
                    }
                }
            }
        }
        for (l, s) in sums.iter().enumerate() {
            let var = s / (packets as f64 * 4.0);
            assert!(
                (var - 0.25).abs() < 0.25 * 0.05,
                "tap {l} empirical power {var} vs 0.25"
            );
        }
    }

    #[test]
    fn zero_power_taps_are_exactly_zero() {
        let cfg = SystemConfig {
            power_delay_profile: PdpSpec::Explicit(vec![1.0, 0.0, 0.0, 0.0]),
            ..Default::default()
        };
        let taps = draw_channel(&cfg, &mut ChaCha12Rng::seed_from_u64(3));
        for m in 0..2 {
            for n in 0..2 {
                for l in 1..4 {
                    assert_eq!(taps.get(m, n, l), Complex64::ZERO);
                }
                assert_ne!(taps.get(m, n, 0), Complex64::ZERO);
            }
        }
    }

    // --- observation model ---------------------------------------------------------

    fn noiseless(cfg: &SystemConfig) -> SystemConfig {
        SystemConfig {
            snr_db: f64::INFINITY,
            ..cfg.clone()
        }
    }

    #[test]
    fn noiseless_flat_single_antenna_reproduces_scaled_symbols() {
        let cfg = SystemConfig {
            n_tx: 1,
            n_rx: 1,
            n_taps: 1,
            n_subcarriers: 8,
            n_ofdm_symbols: 2,
            pilot_grid: PilotGridSpec::Explicit { entries: vec![] },
            ..Default::default()
        };
        let cfg = noiseless(&cfg);
        let map = cfg.resource_map();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let data: Vec<Complex64> = (0..map.data.len())
            .map(|i| c(i as f64 * 0.1, -(i as f64) * 0.05))
            .collect();
        let grid = SymbolGrid::assemble(&cfg, &map, &[data.clone()]);
        let h0 = c(0.5, 0.25);
        let taps = ChannelTaps::new(1, 1, 1, vec![h0]);
        let obs = observe(&grid, &taps, &cfg, &mut rng).unwrap();
        for (r, &(k, t)) in map.data.iter().enumerate() {
            assert!((obs.get(0, k, t) - h0 * data[r]).norm() < 1e-15);
        }
    }

    #[test]
    fn observe_matches_matrix_form_oracle() {
        // Independent route: y(k,t) = H̃(k)·x(k,t) via nalgebra matrix algebra.
        let cfg = noiseless(&SystemConfig::default());
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let taps = draw_channel(&cfg, &mut rng);
        let map = cfg.resource_map();
        let data: Vec<Vec<Complex64>> = (0..cfg.n_tx)
            .map(|_| {
                (0..map.data.len())
                    .map(|_| complex_normal(&mut rng, 1.0))
                    .collect()
            })
            .collect();
        let grid = SymbolGrid::assemble(&cfg, &map, &data);
        let obs = observe(&grid, &taps, &cfg, &mut rng).unwrap();

        let d = dft_matrix(cfg.n_subcarriers, cfg.n_taps).unwrap();
        let h = freq_response(&taps, &d);
        for k in 0..cfg.n_subcarriers {
            let hmat = DMatrix::from_fn(cfg.n_rx, cfg.n_tx, |m, n| h.get(m, n, k));
            for t in 0..cfg.n_ofdm_symbols {
                let x = DVector::from_fn(cfg.n_tx, |n, _| grid.get(n, k, t));
                let y = &hmat * &x;
                for m in 0..cfg.n_rx {
                    assert!((obs.get(m, k, t) - y[m]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn observe_is_linear_for_fixed_noise_realization() {
        let cfg = SystemConfig::default();
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let taps = draw_channel(&cfg, &mut rng);
        let map = cfg.resource_map();
        let mut rng2 = ChaCha12Rng::seed_from_u64(55);
        let draw_data = |rng: &mut ChaCha12Rng| -> Vec<Vec<Complex64>> {
            (0..cfg.n_tx)
                .map(|_| (0..map.data.len()).map(|_| complex_normal(rng, 1.0)).collect())
                .collect()
        };
        let a = draw_data(&mut rng2);
        let b = draw_data(&mut rng2);
        let sum: Vec<Vec<Complex64>> = a
            .iter()
            .zip(&b)
            .map(|(ra, rb)| ra.iter().zip(rb).map(|(&x, &y)| x + y).collect())
            .collect();
        let run = |data: &[Vec<Complex64>]| {
            let grid = SymbolGrid::assemble(&cfg, &map, data);
            observe(&grid, &taps, &cfg, &mut ChaCha12Rng::seed_from_u64(1234)).unwrap()
        };
        let oa = run(&a);
        let ob = run(&b);
        let osum = run(&sum);
        let ozero = run(&vec![vec![Complex64::ZERO; map.data.len()]; cfg.n_tx]);
        for k in 0..cfg.n_subcarriers {
            for t in 0..cfg.n_ofdm_symbols {
                for m in 0..cfg.n_rx {
                    let lhs = osum.get(m, k, t) - ob.get(m, k, t);
                    let rhs = oa.get(m, k, t) - ozero.get(m, k, t);
                    assert!((lhs - rhs).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn noise_only_observation_has_expected_variance() {
        let cfg = SystemConfig {
            n_tx: 1,
            n_rx: 1,
            n_taps: 1,
            n_subcarriers: 500,
            n_ofdm_symbols: 200,
            snr_db: 7.0,
            pilot_grid: PilotGridSpec::Explicit { entries: vec![] },
            ..Default::default()
        };
        let taps = ChannelTaps::new(1, 1, 1, vec![Complex64::ONE]);
        let grid = SymbolGrid::zeros(&cfg);
        let obs = observe(&grid, &taps, &cfg, &mut ChaCha12Rng::seed_from_u64(9)).unwrap();
        let n = 500 * 200;
        let power: f64 = (0..500)
            .flat_map(|k| (0..200).map(move |t| (k, t)))
            .map(|(k, t)| obs.get(0, k, t).norm_sqr())
            .sum::<f64>()
            / n as f64;
        let expect = 1.0 / cfg.gamma();
        assert!(
            (power - expect).abs() < 0.05 * expect,
            "noise power {power} vs {expect}"
        );
    }

    // --- config / layout ---------------------------------------------------------

    #[test]
    fn default_comb_layout_counts() {
        let cfg = SystemConfig::default();
        cfg.validate().unwrap();
        let map = cfg.resource_map();
        // T = 4 keeps only pilot symbol 0; period 4 ⇒ 16 pilots per antenna.
        assert_eq!(map.pilots.len(), 32);
        assert!(map.pilots.iter().all(|e| e.symbol == 0));
        assert_eq!(map.data.len(), 64 * 4 - 32);
        // fill order is symbol-major
        assert!(map.data.windows(2).all(|w| (w[0].1, w[0].0) < (w[1].1, w[1].0)));
        // every data resource of symbol 0 avoids the comb residues 0,1 mod 4
        for &(k, t) in map.data.iter().filter(|&&(_, t)| t == 0) {
            assert!(k % 4 >= 2, "k {k} t {t} should be a pilot");
        }
    }

    #[test]
    fn pilot_vectors_are_antenna_orthogonal() {
        let cfg = SystemConfig::default();
        let map = cfg.resource_map();
        for e in &map.pilots {
            let v = map.pilot_vector(e);
            assert!((v[e.tx].norm() - 1.0).abs() < 1e-12);
            for n in 0..cfg.n_tx {
                if n != e.tx {
                    assert_eq!(v[n], Complex64::ZERO);
                }
            }
        }
    }

    #[test]
    fn validation_rejects_bad_layouts() {
        let mut cfg = SystemConfig::default();
        cfg.pilot_grid = PilotGridSpec::Explicit {
            entries: vec![PilotEntry {
                tx: 0,
                subcarrier: 64,
                symbol: 0,
                value: Complex64::ONE,
            }],
        };
        assert!(cfg.validate().is_err());

        cfg.pilot_grid = PilotGridSpec::Explicit {
            entries: vec![
                PilotEntry {
                    tx: 0,
                    subcarrier: 3,
                    symbol: 0,
                    value: Complex64::ONE,
                },
                PilotEntry {
                    tx: 1,
                    subcarrier: 3,
                    symbol: 0,
                    value: Complex64::ONE,
                },
            ],
        };
        assert!(cfg.validate().is_err(), "two antennas on one resource");

        cfg = SystemConfig::default();
        cfg.power_delay_profile = PdpSpec::Explicit(vec![0.5, -0.5, 0.5, 0.5]);
        assert!(cfg.validate().is_err());

        cfg = SystemConfig::default();
        cfg.ep_damping = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn info_bits_match_frame_budget() {
        let cfg = SystemConfig::default();
        // 224 data resources · 2 bits = 448 coded bits ⇒ 222 info bits.
        assert_eq!(cfg.info_bits_per_stream().unwrap(), 222);
    }

    #[test]
    fn symbol_grid_assembly_places_pilots_and_data() {
        let cfg = SystemConfig::default();
        let map = cfg.resource_map();
        let data: Vec<Vec<Complex64>> = (0..2)
            .map(|n| (0..map.data.len()).map(|r| c(n as f64 + 1.0, r as f64)).collect())
            .collect();
        let grid = SymbolGrid::assemble(&cfg, &map, &data);
        for e in &map.pilots {
            assert_eq!(grid.get(e.tx, e.subcarrier, e.symbol), e.value);
            assert_eq!(grid.kind(e.tx, e.subcarrier, e.symbol), SymbolKind::Pilot);
            for n in 0..2 {
                if n != e.tx {
                    assert_eq!(grid.get(n, e.subcarrier, e.symbol), Complex64::ZERO);
                    assert_eq!(grid.kind(n, e.subcarrier, e.symbol), SymbolKind::Pilot);
                }
            }
        }
        for (r, &(k, t)) in map.data.iter().enumerate() {
            for n in 0..2 {
                assert_eq!(grid.get(n, k, t), data[n][r]);
                assert_eq!(grid.kind(n, k, t), SymbolKind::Data);
            }
        }
    }

    #[test]
    fn exponential_pdp_is_normalized_and_decaying() {
        let cfg = SystemConfig {
            power_delay_profile: PdpSpec::Exponential { decay_db_per_tap: 3.0 },
            ..Default::default()
        };
        let pdp = cfg.pdp();
        assert_eq!(pdp.len(), 4);
        assert!((pdp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(pdp.windows(2).all(|w| w[0] > w[1]));
        for w in pdp.windows(2) {
            assert!((w[0] / w[1] - 10f64.powf(0.3)).abs() < 1e-9);
        }
    }

    #[test]
    fn config_json_round_trip_rejects_unknown_keys() {
        let cfg = SystemConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: SystemConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
        let bad = json.replacen("\"n_tx\"", "\"n_tx_typo\"", 1);
        assert!(serde_json::from_str::<SystemConfig>(&bad).is_err());
    }
}
