//! Spectral helpers for inspecting temporal behavior.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Dominant frequency of a real series in cycles per step, in `(0, 0.5]`.
///
/// The series is mean-removed, Hann-windowed and zero-padded (default 4096
/// points) before the FFT, so the peak location is resolved well below the
/// raw bin width of short windows. The DC bin is excluded.
pub fn dominant_frequency(series: &[f64], pad_to: Option<usize>) -> f64 {
    assert!(series.len() >= 2, "need at least two samples");
    let len = series.len();
    let pad = pad_to.unwrap_or(4096).max(len).next_power_of_two();

    let mean = series.iter().sum::<f64>() / len as f64;
    let mut buf: Vec<Complex64> = Vec::with_capacity(pad);
    for (i, &v) in series.iter().enumerate() {
        let phase = std::f64::consts::PI * i as f64 / (len - 1) as f64;
        let hann = phase.sin() * phase.sin();
        buf.push(Complex64::new((v - mean) * hann, 0.0));
    }
    buf.resize(pad, Complex64::new(0.0, 0.0));

    FftPlanner::new().plan_fft_forward(pad).process(&mut buf);

    let mut best_bin = 1;
    let mut best_mag = 0.0;
    for (bin, value) in buf.iter().enumerate().take(pad / 2 + 1).skip(1) {
        let mag = value.norm_sqr();
        if mag > best_mag {
            best_mag = mag;
            best_bin = bin;
        }
    }
    best_bin as f64 / pad as f64
}
