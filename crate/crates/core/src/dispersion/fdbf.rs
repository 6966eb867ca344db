//! Frequency-domain beamforming.
//!
//! For each analysis frequency the receiver spectra X(f) form the
//! cross-power matrix R(f) = X X^H, and each trial velocity v is scored by
//! the quadratic form P(v, f) = e^H R e with plane-wave steering
//! e_n = exp(-i 2 pi f / v * x_n). Records are zero-padded to the next power
//! of two; each analysis frequency is evaluated at the nearest FFT bin, and
//! the steering vector uses that bin's actual frequency so the velocity
//! estimate carries no frequency-quantization bias.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::DispersionGrid;
use crate::grid::Grid;
use crate::sim::Wavefield;
use crate::{exec, Error, Result};

/// Per-frequency-normalized beamformer power on the (velocity, frequency) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionImage {
    /// Rows are velocities (row 0 = slowest), columns are frequencies.
    pub power: Grid<f64>,
    pub grid: DispersionGrid,
    pub provenance: String,
}

fn spectra(wavefield: &Wavefield, grid: &DispersionGrid) -> Result<(Vec<Vec<Complex<f64>>>, Vec<f64>)> {
    let nt = wavefield.nt();
    let dt = wavefield.dt_s;
    let nyquist = 0.5 / dt;
    let f_top = grid.frequency_at(grid.freq_count - 1);
    if f_top > nyquist {
        return Err(Error::InvalidArgument(format!(
            "analysis frequency {f_top} Hz exceeds the Nyquist frequency {nyquist:.2} Hz"
        )));
    }
    let n_fft = nt.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n_fft);

    let rows: Vec<Vec<Complex<f64>>> = exec::map_indexed(wavefield.receiver_count(), |r| {
        let mut buf: Vec<Complex<f64>> = wavefield
            .traces
            .row(r)
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .collect();
        buf.resize(n_fft, Complex::new(0.0, 0.0));
        fft.process(&mut buf);
        buf
    });

    // Nearest FFT bin to each requested frequency; steering happens at the
    // bin's true frequency.
    let df = 1.0 / (n_fft as f64 * dt);
    let bin_freqs: Vec<f64> = (0..grid.freq_count)
        .map(|k| {
            let bin = (grid.frequency_at(k) / df).round() as usize;
            bin as f64 * df
        })
        .collect();
    Ok((rows, bin_freqs))
}

fn power_column(
    spectra: &[Vec<Complex<f64>>],
    offsets: &[f64],
    f_hz: f64,
    dt: f64,
    n_fft: usize,
    grid: &DispersionGrid,
) -> Vec<f64> {
    let n = spectra.len();
    let bin = (f_hz * n_fft as f64 * dt).round() as usize;
    let x: Vec<Complex<f64>> = spectra.iter().map(|s| s[bin]).collect();

    // Cross-power matrix R = X X^H.
    let mut r = vec![Complex::new(0.0, 0.0); n * n];
    for a in 0..n {
        for b in 0..n {
            r[a * n + b] = x[a] * x[b].conj();
        }
    }

    let two_pi = 2.0 * std::f64::consts::PI;
    (0..grid.vel_count)
        .map(|vi| {
            let v = grid.velocity_at(vi);
            let e: Vec<Complex<f64>> = offsets
                .iter()
                .map(|&xn| Complex::from_polar(1.0, -two_pi * f_hz / v * xn))
                .collect();
            let mut acc = Complex::new(0.0, 0.0);
            for a in 0..n {
                let ea = e[a].conj();
                for b in 0..n {
                    acc += ea * r[a * n + b] * e[b];
                }
            }
            // Hermitian quadratic form: real and non-negative up to roundoff.
            acc.re.max(0.0)
        })
        .collect()
}

fn fdbf_impl(wavefield: &Wavefield, grid: &DispersionGrid, parallel: bool) -> Result<Grid<f64>> {
    grid.validate()?;
    if wavefield.receiver_count() < 2 {
        return Err(Error::InvalidArgument("beamforming needs at least 2 receivers".into()));
    }
    if wavefield.duration_s() < 1.0 / grid.freq_start_hz {
        return Err(Error::InvalidArgument(format!(
            "record of {:.3} s cannot resolve {} Hz",
            wavefield.duration_s(),
            grid.freq_start_hz
        )));
    }
    let (rows, bin_freqs) = spectra(wavefield, grid)?;
    let n_fft = rows[0].len();
    let x0 = wavefield.receiver_x_m[0];
    let offsets: Vec<f64> = wavefield.receiver_x_m.iter().map(|&x| x - x0).collect();
    let dt = wavefield.dt_s;

    let columns: Vec<Vec<f64>> = if parallel {
        exec::map_indexed(grid.freq_count, |k| {
            power_column(&rows, &offsets, bin_freqs[k], dt, n_fft, grid)
        })
    } else {
        exec::seq_map_indexed(grid.freq_count, |k| {
            power_column(&rows, &offsets, bin_freqs[k], dt, n_fft, grid)
        })
    };

    let mut power = Grid::filled(grid.vel_count, grid.freq_count, 0.0);
    for (k, col) in columns.iter().enumerate() {
        for (vi, &p) in col.iter().enumerate() {
            power.set(vi, k, p);
        }
    }
    Ok(power)
}

/// Raw (unnormalized) beamformer power; frequencies are processed in parallel.
pub fn fdbf(wavefield: &Wavefield, grid: &DispersionGrid) -> Result<Grid<f64>> {
    fdbf_impl(wavefield, grid, true)
}

/// Sequential variant; bitwise-identical output.
pub fn fdbf_sequential(wavefield: &Wavefield, grid: &DispersionGrid) -> Result<Grid<f64>> {
    fdbf_impl(wavefield, grid, false)
}

/// Divides every frequency column by its maximum. Identically-zero columns
/// are left at zero.
pub fn normalize_per_frequency(
    raw: &Grid<f64>,
    grid: &DispersionGrid,
    provenance: impl Into<String>,
) -> Result<DispersionImage> {
    if raw.data().iter().any(|&p| p < 0.0) {
        return Err(Error::Internal("negative beamformer power".into()));
    }
    let mut power = raw.clone();
    for k in 0..power.cols() {
        let mut max = 0.0f64;
        for vi in 0..power.rows() {
            max = max.max(power.get(vi, k));
        }
        if max > 0.0 {
            for vi in 0..power.rows() {
                power.set(vi, k, power.get(vi, k) / max);
            }
        }
    }
    Ok(DispersionImage {
        power,
        grid: grid.clone(),
        provenance: provenance.into(),
    })
}

/// FDBF followed by per-frequency normalization.
pub fn dispersion_image(
    wavefield: &Wavefield,
    grid: &DispersionGrid,
    provenance: impl Into<String>,
) -> Result<DispersionImage> {
    let raw = fdbf(wavefield, grid)?;
    normalize_per_frequency(&raw, grid, provenance)
}
