use super::{ricker, stability_check, SimConfig, Wavefield};
use crate::geo::SubsurfaceModel;
use crate::grid::Grid;
use crate::nn::Real;
use crate::{exec, Error, Result};

// Halo of two cells around the computational grid. Out-of-range stress and
// velocity samples read as zero there, which lets the interior stencils run
// branch-free; the free surface is handled by stress imaging into the top
// halo rows.
const HALO: usize = 2;

/// Periodic snapshot hook; receives the vertical-velocity field.
pub struct SnapshotSink<'a> {
    pub every: usize,
    pub callback: &'a mut dyn FnMut(usize, Grid<f32>),
}

struct Materials<T> {
    bx: Vec<T>,
    bz: Vec<T>,
    lam: Vec<T>,
    l2m: Vec<T>,
    mxz: Vec<T>,
    /// Effective surface modulus 4 mu (lam + mu) / (lam + 2 mu) at z = 0.
    surf: Vec<T>,
    gx: Vec<T>,
    gz: Vec<T>,
}

struct SimGrid {
    nx: usize,
    nz: usize,
    stride: usize,
    sponge: usize,
    dx: f64,
}

impl SimGrid {
    #[inline]
    fn at(&self, j: usize, i: usize) -> usize {
        (j + HALO) * self.stride + i + HALO
    }

    fn padded_len(&self) -> usize {
        (self.nz + 2 * HALO) * self.stride
    }
}

fn build_grid(model: &SubsurfaceModel, config: &SimConfig) -> SimGrid {
    let sponge = config.boundary.cells();
    let nx_phys = (model.width_m() / config.dx_m).round() as usize + 1;
    let nz_phys = (model.depth_m() / config.dx_m).round() as usize + 1;
    let nx = nx_phys + 2 * sponge;
    let nz = nz_phys + sponge;
    SimGrid {
        nx,
        nz,
        stride: nx + 2 * HALO,
        sponge,
        dx: config.dx_m,
    }
}

fn build_materials<T: Real>(model: &SubsurfaceModel, grid: &SimGrid) -> Materials<T> {
    let px = model.pixel_m;
    let rows = model.vs.rows();
    let cols = model.vs.cols();
    let lookup = |i: usize, j: usize| -> (f64, f64, f64) {
        let x = (i as f64 - grid.sponge as f64) * grid.dx;
        let z = j as f64 * grid.dx;
        let c = ((x / px).floor() as isize).clamp(0, cols as isize - 1) as usize;
        let r = ((z / px).floor() as isize).clamp(0, rows as isize - 1) as usize;
        let vs = model.vs.get(r, c);
        let vp = model.vp.get(r, c);
        let rho = model.density.get(r, c);
        let mu = rho * vs * vs;
        let lam = rho * vp * vp - 2.0 * mu;
        (lam, mu, rho)
    };

    let n = grid.padded_len();
    let mut m = Materials {
        bx: vec![T::ZERO; n],
        bz: vec![T::ZERO; n],
        lam: vec![T::ZERO; n],
        l2m: vec![T::ZERO; n],
        mxz: vec![T::ZERO; n],
        surf: vec![T::ZERO; grid.stride],
        gx: vec![T::ONE; grid.nx],
        gz: vec![T::ONE; grid.nz],
    };

    for j in 0..grid.nz {
        for i in 0..grid.nx {
            let (lam, mu, rho) = lookup(i, j);
            let k = grid.at(j, i);
            m.lam[k] = T::from_f64(lam);
            m.l2m[k] = T::from_f64(lam + 2.0 * mu);
            let (_, mu_r, rho_r) = lookup((i + 1).min(grid.nx - 1), j);
            m.bx[k] = T::from_f64(0.5 * (1.0 / rho + 1.0 / rho_r));
            let (_, mu_d, rho_d) = lookup(i, (j + 1).min(grid.nz - 1));
            m.bz[k] = T::from_f64(0.5 * (1.0 / rho + 1.0 / rho_d));
            let (_, mu_rd, _) = lookup((i + 1).min(grid.nx - 1), (j + 1).min(grid.nz - 1));
            // Harmonic mean keeps the shear stress stable across interfaces.
            m.mxz[k] = T::from_f64(4.0 / (1.0 / mu + 1.0 / mu_r + 1.0 / mu_d + 1.0 / mu_rd));
            if j == 0 {
                m.surf[i + HALO] = T::from_f64(4.0 * mu * (lam + mu) / (lam + 2.0 * mu));
            }
        }
    }

    // Cerjan-style taper: ~0.914 per step at the outer edge, ~1 at the inner edge.
    let ns = grid.sponge;
    if ns > 0 {
        let alpha = 0.3 / ns as f64;
        let w = |d: usize| T::from_f64((-(alpha * d as f64).powi(2)).exp());
        for i in 0..ns {
            m.gx[i] = w(ns - i);
            m.gx[grid.nx - 1 - i] = w(ns - i);
        }
        for d in 1..=ns {
            m.gz[grid.nz - 1 - (ns - d)] = w(d);
        }
    }
    m
}

// Rows are thin (a few hundred cells), so parallel tasks take blocks of
// rows to amortize dispatch. The per-row closure and its in-row order are
// identical on every path, keeping results bitwise reproducible.
const ROW_BLOCK: usize = 16;

fn rows_mut<T: Real>(parallel: bool, data: &mut [T], stride: usize, f: impl Fn(usize, &mut [T]) + Sync + Send) {
    let per_row = |offset: usize, block: &mut [T]| {
        for (k, row) in block.chunks_mut(stride).enumerate() {
            f(offset + k * stride, row);
        }
    };
    if parallel {
        exec::for_each_chunk_mut(data, stride * ROW_BLOCK, per_row);
    } else {
        exec::seq_for_each_chunk_mut(data, stride * ROW_BLOCK, per_row);
    }
}

#[inline]
fn row<T>(v: &[T], jp: usize, stride: usize) -> &[T] {
    &v[jp * stride..(jp + 1) * stride]
}

/// Runs one simulation with sequential time stepping. Receiver traces are
/// vertical particle velocity at z = dx/2 below each receiver position,
/// sampled every time step.
///
/// Batches should parallelize across simulations (see the pipeline module).
/// Row-parallel stepping inside a single run is available through
/// [`simulate_with_observer`]; it produces bitwise-identical traces but only
/// pays off on wide grids with many cores, since every field update is a
/// fork-join barrier.
pub fn simulate(model: &SubsurfaceModel, config: &SimConfig) -> Result<Wavefield> {
    simulate_with_observer(model, config, false, None)
}

/// Explicitly sequential variant, kept for parity testing and benchmarks.
pub fn simulate_sequential(model: &SubsurfaceModel, config: &SimConfig) -> Result<Wavefield> {
    simulate_with_observer(model, config, false, None)
}

pub fn simulate_with_observer(
    model: &SubsurfaceModel,
    config: &SimConfig,
    parallel: bool,
    sink: Option<SnapshotSink>,
) -> Result<Wavefield> {
    match config.precision {
        super::Precision::Single => simulate_impl::<f32>(model, config, parallel, sink),
        super::Precision::Double => simulate_impl::<f64>(model, config, parallel, sink),
    }
}

fn simulate_impl<T: Real>(
    model: &SubsurfaceModel,
    config: &SimConfig,
    parallel: bool,
    mut sink: Option<SnapshotSink>,
) -> Result<Wavefield> {
    let stability = stability_check(model, config)?;
    let dt = stability.dt;
    let nt = (config.duration_s / dt).ceil() as usize + 1;
    let grid = build_grid(model, config);
    let mat = build_materials::<T>(model, &grid);

    let f0 = config.source.center_frequency_hz;
    let t0 = config.source.delay();
    if (nt as f64) * dt < t0 {
        eprintln!(
            "warning: record ({:.3} s) shorter than source delay {:.3} s; wavelet truncated",
            nt as f64 * dt,
            t0
        );
    }
    let wavelet: Vec<T> = ricker(f0, t0, dt, nt).into_iter().map(T::from_f64).collect();

    let receiver_x = config.receivers.positions(model.width_m());
    let to_ix = |x: f64| -> usize {
        let i = (x / grid.dx).round() as isize + grid.sponge as isize;
        i.clamp(0, grid.nx as isize - 1) as usize
    };
    let rec_idx: Vec<usize> = receiver_x.iter().map(|&x| grid.at(0, to_ix(x))).collect();
    let source_x = config
        .source
        .position_x_m
        .unwrap_or(receiver_x[0] - config.source.offset_m);
    let src = grid.at(0, to_ix(source_x));
    // Point force -> velocity increment: F dt / (rho dx^2) per unit line length.
    let src_scale = T::from_f64(config.source.amplitude * dt / (grid.dx * grid.dx)) * mat.bz[src];

    let n = grid.padded_len();
    let mut sxx = vec![T::ZERO; n];
    let mut szz = vec![T::ZERO; n];
    let mut sxz = vec![T::ZERO; n];
    let mut vx = vec![T::ZERO; n];
    let mut vz = vec![T::ZERO; n];

    let (c1f, c2f) = config.spatial_order.coefficients();
    let c1 = T::from_f64(c1f);
    let c2 = T::from_f64(c2f);
    let dtq = T::from_f64(dt / grid.dx);
    let stride = grid.stride;
    let (nx, nz) = (grid.nx, grid.nz);
    let ns = grid.sponge;

    let mut traces = vec![0f64; receiver_x.len() * nt];

    for step in 0..nt {
        // Stress images across the free surface: szz antisymmetric about the
        // surface node row, sxz antisymmetric about the surface itself.
        {
            let (head, rest) = szz.split_at_mut(2 * stride);
            for i in 0..stride {
                head[stride + i] = -rest[stride + i];
            }
            let (head, rest) = sxz.split_at_mut(2 * stride);
            for i in 0..stride {
                head[i] = -rest[stride + i];
                head[stride + i] = -rest[i];
            }
        }

        // Velocity update: v += dt/rho * div(stress).
        rows_mut(parallel, &mut vx, stride, |offset, out| {
            let jp = offset / stride;
            if jp < HALO || jp >= nz + HALO {
                return;
            }
            let sxx0 = row(&sxx, jp, stride);
            let sxz0 = row(&sxz, jp, stride);
            let sxz_m1 = row(&sxz, jp - 1, stride);
            let sxz_m2 = row(&sxz, jp - 2, stride);
            let sxz_p1 = row(&sxz, jp + 1, stride);
            let b = row(&mat.bx, jp, stride);
            for i in HALO..HALO + nx - 1 {
                let dsxx = c1 * (sxx0[i + 1] - sxx0[i]) - c2 * (sxx0[i + 2] - sxx0[i - 1]);
                let dsxz = c1 * (sxz0[i] - sxz_m1[i]) - c2 * (sxz_p1[i] - sxz_m2[i]);
                out[i] += dtq * b[i] * (dsxx + dsxz);
            }
        });
        rows_mut(parallel, &mut vz, stride, |offset, out| {
            let jp = offset / stride;
            if jp < HALO || jp >= nz + HALO - 1 {
                return;
            }
            let sxz0 = row(&sxz, jp, stride);
            let szz0 = row(&szz, jp, stride);
            let szz_m1 = row(&szz, jp - 1, stride);
            let szz_p1 = row(&szz, jp + 1, stride);
            let szz_p2 = row(&szz, jp + 2, stride);
            let b = row(&mat.bz, jp, stride);
            for i in HALO..HALO + nx {
                let dsxz = c1 * (sxz0[i] - sxz0[i - 1]) - c2 * (sxz0[i + 1] - sxz0[i - 2]);
                let dszz = c1 * (szz_p1[i] - szz0[i]) - c2 * (szz_p2[i] - szz_m1[i]);
                out[i] += dtq * b[i] * (dsxz + dszz);
            }
        });

        vz[src] += src_scale * wavelet[step];

        damp(parallel, &mut vx, stride, nx, nz, ns, &mat.gx, &mat.gz);
        damp(parallel, &mut vz, stride, nx, nz, ns, &mat.gx, &mat.gz);

        // Normal stresses; the two fields share every stencil read.
        rows_pair_mut(parallel, &mut sxx, &mut szz, stride, |offset, sxx_row, szz_row| {
            let jp = offset / stride;
            if jp < HALO || jp >= nz + HALO {
                return;
            }
            let j = jp - HALO;
            let vx0 = row(&vx, jp, stride);
            if j == 0 {
                // Free surface: szz = 0; sxx driven by the effective modulus
                // with dvz/dz eliminated through szz = 0.
                let surf = &mat.surf;
                for i in HALO..HALO + nx {
                    let dvx = c1 * (vx0[i] - vx0[i - 1]) - c2 * (vx0[i + 1] - vx0[i - 2]);
                    sxx_row[i] += dtq * surf[i] * dvx;
                    szz_row[i] = T::ZERO;
                }
                return;
            }
            let vz0 = row(&vz, jp, stride);
            let vz_m1 = row(&vz, jp - 1, stride);
            let vz_m2 = row(&vz, jp - 2, stride);
            let vz_p1 = row(&vz, jp + 1, stride);
            let lam = row(&mat.lam, jp, stride);
            let l2m = row(&mat.l2m, jp, stride);
            if j == 1 {
                // One step below the surface the 4th-order stencil would
                // reach across it; drop to 2nd order there.
                for i in HALO..HALO + nx {
                    let dvx = c1 * (vx0[i] - vx0[i - 1]) - c2 * (vx0[i + 1] - vx0[i - 2]);
                    let dvz = vz0[i] - vz_m1[i];
                    sxx_row[i] += dtq * (l2m[i] * dvx + lam[i] * dvz);
                    szz_row[i] += dtq * (lam[i] * dvx + l2m[i] * dvz);
                }
            } else {
                for i in HALO..HALO + nx {
                    let dvx = c1 * (vx0[i] - vx0[i - 1]) - c2 * (vx0[i + 1] - vx0[i - 2]);
                    let dvz = c1 * (vz0[i] - vz_m1[i]) - c2 * (vz_p1[i] - vz_m2[i]);
                    sxx_row[i] += dtq * (l2m[i] * dvx + lam[i] * dvz);
                    szz_row[i] += dtq * (lam[i] * dvx + l2m[i] * dvz);
                }
            }
        });
        rows_mut(parallel, &mut sxz, stride, |offset, out| {
            let jp = offset / stride;
            if jp < HALO || jp >= nz + HALO - 1 {
                return;
            }
            let j = jp - HALO;
            let vx0 = row(&vx, jp, stride);
            let vx_p1 = row(&vx, jp + 1, stride);
            let vx_p2 = row(&vx, jp + 2, stride);
            let vx_m1 = row(&vx, jp - 1, stride);
            let vz0 = row(&vz, jp, stride);
            let mu = row(&mat.mxz, jp, stride);
            for i in HALO..HALO + nx - 1 {
                let dvxz = if j == 0 {
                    vx_p1[i] - vx0[i]
                } else {
                    c1 * (vx_p1[i] - vx0[i]) - c2 * (vx_p2[i] - vx_m1[i])
                };
                let dvzx = c1 * (vz0[i + 1] - vz0[i]) - c2 * (vz0[i + 2] - vz0[i - 1]);
                out[i] += dtq * mu[i] * (dvxz + dvzx);
            }
        });

        damp(parallel, &mut sxx, stride, nx, nz, ns, &mat.gx, &mat.gz);
        damp(parallel, &mut szz, stride, nx, nz, ns, &mat.gx, &mat.gz);
        damp(parallel, &mut sxz, stride, nx, nz, ns, &mat.gx, &mat.gz);

        for (rcv, &k) in rec_idx.iter().enumerate() {
            traces[rcv * nt + step] = vz[k].to_f64();
        }

        if (step % 256 == 0 || step + 1 == nt) && !vz[rec_idx[rec_idx.len() / 2]].is_finite() {
            return Err(Error::Unstable { step });
        }
        if let Some(s) = sink.as_mut() {
            if s.every > 0 && step % s.every == 0 {
                let g = Grid::from_fn(nz, nx, |j, i| vz[(j + HALO) * stride + i + HALO].to_f64() as f32);
                (s.callback)(step, g);
            }
        }
    }

    if traces.iter().any(|v| !v.is_finite()) {
        return Err(Error::Unstable { step: nt });
    }

    Ok(Wavefield {
        traces: Grid::from_vec(receiver_x.len(), nt, traces),
        dt_s: dt,
        receiver_x_m: receiver_x,
        source_x_m: source_x,
        source_f0_hz: f0,
    })
}

/// Multiplies the sponge strips by the taper. Interior cells are untouched.
fn damp<T: Real>(parallel: bool, field: &mut [T], stride: usize, nx: usize, nz: usize, ns: usize, gx: &[T], gz: &[T]) {
    if ns == 0 {
        return;
    }
    rows_mut(parallel, field, stride, |offset, out| {
        let jp = offset / stride;
        if jp < HALO || jp >= nz + HALO {
            return;
        }
        let gzj = gz[jp - HALO];
        if gzj != T::ONE {
            for i in 0..nx {
                out[i + HALO] *= gx[i] * gzj;
            }
        } else {
            for i in 0..ns {
                out[i + HALO] *= gx[i];
            }
            for i in nx - ns..nx {
                out[i + HALO] *= gx[i];
            }
        }
    });
}

/// Applies `f` to matching rows of two equally shaped fields in lockstep.
fn rows_pair_mut<T: Real>(
    parallel: bool,
    a: &mut [T],
    b: &mut [T],
    stride: usize,
    f: impl Fn(usize, &mut [T], &mut [T]) + Sync + Send,
) {
    let block = stride * ROW_BLOCK;
    let per_block = |i: usize, ba: &mut [T], bb: &mut [T]| {
        for (k, (ra, rb)) in ba.chunks_mut(stride).zip(bb.chunks_mut(stride)).enumerate() {
            f(i * block + k * stride, ra, rb);
        }
    };
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        a.par_chunks_mut(block)
            .zip(b.par_chunks_mut(block))
            .enumerate()
            .for_each(|(i, (ra, rb))| per_block(i, ra, rb));
        return;
    }
    let _ = parallel;
    a.chunks_mut(block)
        .zip(b.chunks_mut(block))
        .enumerate()
        .for_each(|(i, (ra, rb))| per_block(i, ra, rb));
}
