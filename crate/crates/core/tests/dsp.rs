mod common;

use std::f64::consts::PI;

use common::{filterbank_oracle, rel_err, rng, uniform};
use istftnet_core::dsp::{
    istft, istft_params, log_mel, mel_filterbank, stft, MelConfig, PqmfBank, Spectrogram,
    StftConfig,
};
use istftnet_core::selftest::pqmf_error_db;
use istftnet_core::Tensor;

fn periodic_hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

fn reflect_pad(x: &[f32], p: usize) -> Vec<f64> {
    let n = x.len() as isize;
    (-(p as isize)..n + p as isize)
        .map(|i| {
            let j = if i < 0 {
                -i
            } else if i >= n {
                2 * (n - 1) - i
            } else {
                i
            };
            x[j as usize] as f64
        })
        .collect()
}

#[test]
fn round_trip_fifty_signals() {
    let mut r = rng(21);
    for (fft, hop) in [(1024, 256), (1024, 512), (128, 32), (128, 64), (16, 4)] {
        let cfg = StftConfig::new(fft, hop, fft).unwrap();
        let mut worst = 0f64;
        for _ in 0..50 {
            let x = uniform(&mut r, 4096);
            let y = istft(&stft(&x, &cfg).unwrap(), &cfg, x.len()).unwrap();
            assert_eq!(y.len(), x.len());
            worst = worst.max(rel_err(&y[fft..4096 - fft], &x[fft..4096 - fft]));
        }
        assert!(worst <= 1e-6, "f={fft} h={hop}: {worst:e}");
    }
}

#[test]
fn parseval_per_frame() {
    let cfg = StftConfig::default();
    let x = uniform(&mut rng(22), 5000);
    let spec = stft(&x, &cfg).unwrap();
    let padded = reflect_pad(&x, 512);
    let w = periodic_hann(1024);
    let (bins, frames) = (spec.freq_bins(), spec.frames());
    assert_eq!(frames, 5000 / 256 + 1);
    for t in 0..frames {
        let time: f64 = (0..1024)
            .map(|n| (padded[t * 256 + n] * w[n]).powi(2))
            .sum();
        let freq: f64 = (0..bins)
            .map(|k| {
                let m = spec.magnitude.data()[k * frames + t] as f64;
                let weight = if k == 0 || k == bins - 1 { 1.0 } else { 2.0 };
                weight * m * m
            })
            .sum::<f64>()
            / 1024.0;
        assert!(
            (time - freq).abs() <= 1e-4 * time,
            "frame {t}: {time} vs {freq}"
        );
    }
}

#[test]
fn sine_at_bin_centre_concentrates() {
    let cfg = StftConfig::default();
    let k0 = 37;
    let x: Vec<f32> = (0..8192)
        .map(|n| (2.0 * PI * k0 as f64 * n as f64 / 1024.0).cos() as f32)
        .collect();
    let spec = stft(&x, &cfg).unwrap();
    let frames = spec.frames();
    for t in 4..frames - 4 {
        let col = |k: usize| (spec.magnitude.data()[k * frames + t] as f64).powi(2);
        let total: f64 = (0..spec.freq_bins()).map(col).sum();
        // A Hann window spreads a bin-centred tone over the centre bin and its
        // two neighbours (energy 1/6, 2/3, 1/6), so "that bin" is its main lobe.
        let lobe = col(k0 - 1) + col(k0) + col(k0 + 1);
        assert!(lobe >= 0.9 * total, "frame {t}");
        assert!((col(k0) / (col(k0 - 1) + col(k0) + col(k0 + 1)) - 2.0 / 3.0).abs() < 1e-3);
        // Peak equals Σw / 2 = N / 4.
        assert!((col(k0).sqrt() - 256.0).abs() < 1e-2);
    }
}

#[test]
fn reduced_resolution_lengths_match_base() {
    let base = StftConfig::default();
    for s in [1, 4, 8, 16, 32, 64] {
        let cfg = istft_params(&base, s).unwrap();
        assert_eq!(cfg.freq_bins(), 1024 / s / 2 + 1);
        let mel_frames = 7;
        let frames = mel_frames * s;
        let zero = Tensor::zeros(&[cfg.freq_bins(), frames]);
        let spec = Spectrogram::new(zero.clone(), zero).unwrap();
        let y = istft(&spec, &cfg, frames * cfg.hop()).unwrap();
        assert_eq!(y.len(), mel_frames * base.hop());
    }
    assert!(istft_params(&base, 3).is_err());
}

#[test]
fn filterbank_matches_oracle() {
    let fb = mel_filterbank(&MelConfig::default(), 1024).unwrap();
    assert_eq!(fb.shape(), &[80, 513]);
    let want = filterbank_oracle(22050.0, 1024, 80, 0.0, 8000.0);
    for (m, row) in want.iter().enumerate() {
        let got = fb.channel(m);
        let peak = got.iter().cloned().fold(0f32, f32::max);
        assert!(peak > 0.0, "empty filter {m}");
        for (k, w) in row.iter().enumerate() {
            assert!((got[k] as f64 - w).abs() <= 1e-6, "mel {m} bin {k}");
        }
    }
}

#[test]
fn log_mel_floor_and_shape() {
    let y = log_mel(
        &vec![0.0; 22050],
        &StftConfig::default(),
        &MelConfig::default(),
    )
    .unwrap();
    assert_eq!(y.shape(), &[80, 22050 / 256 + 1]);
    assert!(y.data().iter().all(|&v| v == 1e-5f32.ln()));
}

#[test]
fn pqmf_round_trip_below_minus_35_db() {
    let bank = PqmfBank::four_band();
    let mut r = rng(23);
    for _ in 0..5 {
        let db = pqmf_error_db(&bank, &uniform(&mut r, 16384)).unwrap();
        assert!(db <= -35.0, "{db} dB");
    }
}

#[test]
fn pqmf_filters_are_modulated_prototype() {
    let bank = PqmfBank::four_band();
    let (b, n) = (4, bank.taps() + 1);
    let h = bank.analysis_filters();
    assert_eq!(h.shape(), &[b, n]);
    // Recover the prototype from band 0: h0[i] = 2 p[i] cos(π/8 (i − N/2) + π/4).
    let proto: Vec<f64> = (0..n)
        .map(|i| {
            let c = (PI / 8.0 * (i as f64 - (n - 1) as f64 / 2.0) + PI / 4.0).cos();
            h.data()[i] as f64 / (2.0 * c)
        })
        .collect();
    for k in 1..b {
        for (i, p) in proto.iter().enumerate() {
            let phase = (2 * k + 1) as f64 * PI / 8.0 * (i as f64 - (n - 1) as f64 / 2.0)
                + if k % 2 == 0 { PI / 4.0 } else { -PI / 4.0 };
            let want = 2.0 * p * phase.cos();
            assert!(
                (h.data()[k * n + i] as f64 - want).abs() < 1e-5,
                "band {k} tap {i}"
            );
        }
    }
    let dc: f64 = proto.iter().sum();
    assert!((dc - 1.0).abs() < 1e-3, "prototype DC gain {dc}");
}

#[test]
fn pqmf_shape_laws() {
    let bank = PqmfBank::four_band();
    let zero = bank.synthesis(&Tensor::zeros(&[4, 25])).unwrap();
    assert_eq!(zero.len(), 100);
    assert!(zero.iter().all(|&v| v == 0.0));
    assert!(bank.synthesis(&Tensor::zeros(&[3, 25])).is_err());
    assert!(bank.analysis(&[0.0; 101]).is_err());
}
