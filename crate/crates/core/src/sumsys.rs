//! Two-parameter sum systems `(G_{(a,b)}, S_t)` over a translation-invariant kernel,
//! discretized on a uniform grid of step functions.
//!
//! Every interval endpoint and shift is a multiple of the grid width `h`, so shifts
//! and reversals are exact permutations and all numerical error sits in the Gram
//! quadrature. The Gram of an interval is a leading block of one Toeplitz matrix.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{gram_projector, s_class_check, GramMap, GramSpace, INV_FLOOR};
use crate::kernels::{cell_count, gram_matrix, Kernel};
use crate::linalg::toeplitz;
use crate::table::{fmt_f64, Table};

const ALIGN_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SumSystem {
    kernel: Kernel,
    h: f64,
    horizon: f64,
    offsets: Vec<f64>,
    quad_error: f64,
}

#[derive(Debug, Clone)]
pub struct IntervalSpace {
    pub interval: (f64, f64),
    pub space: Arc<GramSpace>,
}

impl IntervalSpace {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }
}

impl SumSystem {
    /// Sum system whose intervals may reach up to `horizon`.
    pub fn new(kernel: Kernel, h: f64, horizon: f64) -> Result<Self> {
        let gram = gram_matrix(&kernel, (0.0, horizon), h)?;
        Ok(SumSystem { kernel, h, horizon, offsets: gram.offsets, quad_error: gram.quad_error })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn quad_error(&self) -> f64 {
        self.quad_error
    }

    /// Grid index of `x`.
    pub fn index(&self, x: f64) -> Result<usize> {
        let r = x / self.h;
        if r.is_nan() || r < -ALIGN_TOL || (r - r.round()).abs() > ALIGN_TOL * r.abs().max(1.0) {
            return Err(Error::Misaligned(format!("{x} is not a nonnegative multiple of h = {}", self.h)));
        }
        Ok(r.round() as usize)
    }

    fn cells(&self, a: f64, b: f64) -> Result<(usize, usize)> {
        let (i, j) = (self.index(a)?, self.index(b)?);
        if i >= j {
            return Err(Error::InvalidParameter(format!("empty interval ({a}, {b})")));
        }
        if j > self.offsets.len() {
            return Err(Error::InvalidParameter(format!("interval ({a}, {b}) exceeds the horizon {}", self.horizon)));
        }
        Ok((i, j))
    }

    /// Kernel Gram of the cell indicators of `(a, b)`.
    pub fn gram(&self, a: f64, b: f64) -> Result<DMatrix<f64>> {
        let (i, j) = self.cells(a, b)?;
        Ok(toeplitz(&self.offsets, j - i))
    }

    pub fn space(&self, a: f64, b: f64) -> Result<IntervalSpace> {
        let (i, j) = self.cells(a, b)?;
        let space = GramSpace::new(toeplitz(&self.offsets, j - i), format!("G[{i},{j})"))?;
        Ok(IntervalSpace { interval: (a, b), space: Arc::new(space) })
    }

    /// `S_s : G_{(a,b)} → G_{(a+s,b+s)}`, the identity on cell coordinates.
    pub fn shift_interval(&self, a: f64, b: f64, s: f64) -> Result<GramMap> {
        self.index(s)?;
        let src = self.space(a, b)?;
        let tgt = self.space(a + s, b + s)?;
        let n = src.dim();
        GramMap::new(src.space, tgt.space, DMatrix::identity(n, n))
    }

    /// `S_s : G_{(0,t)} → G_{(s,s+t)}`.
    pub fn shift(&self, s: f64, t: f64) -> Result<GramMap> {
        self.shift_interval(0.0, t, s)
    }

    /// `x ⊕ y ↦ x + y` from `G_{(0,s)} ⊕ G_{(s,s+t)}` onto `G_{(0,s+t)}`.
    pub fn addition_map(&self, s: f64, t: f64) -> Result<GramMap> {
        self.addition_map_at(0.0, s, t)
    }

    /// The addition map with both intervals translated by `offset`.
    pub fn addition_map_at(&self, offset: f64, s: f64, t: f64) -> Result<GramMap> {
        let left = self.space(offset, offset + s)?;
        let right = self.space(offset + s, offset + s + t)?;
        let whole = self.space(offset, offset + s + t)?;
        let source = Arc::new(GramSpace::direct_sum(&left.space, &right.space)?);
        let n = whole.dim();
        GramMap::new(source, whole.space, DMatrix::identity(n, n))
    }

    /// `B_{s,t}(x ⊕ y) = x + S_s y` from `G_{(0,s)} ⊕ G_{(0,t)}` onto `G_{(0,s+t)}`.
    pub fn one_param_map(&self, s: f64, t: f64) -> Result<GramMap> {
        let left = self.space(0.0, s)?;
        let shift = GramMap::direct_sum(&GramMap::identity(left.space), &self.shift(s, t)?)?;
        self.addition_map(s, t)?.compose(&shift)
    }

    /// `f ↦ f(t − ·)` on `G_{(0,t)}`.
    pub fn time_reversal(&self, t: f64) -> Result<GramMap> {
        let sp = self.space(0.0, t)?;
        let n = sp.dim();
        let matrix = DMatrix::from_fn(n, n, |i, j| if i + j == n - 1 { 1.0 } else { 0.0 });
        GramMap::new(sp.space.clone(), sp.space, matrix)
    }

    /// `‖P_{G_{(0,s)}} x‖` for probes `x ∈ G_{(0,1)}` along a decreasing `s` sequence.
    pub fn vanishing_intersection_probe(&self, probes: &[DVector<f64>], s_seq: &[f64]) -> Result<ProbeDecay> {
        let whole = self.space(0.0, 1.0)?;
        let d = whole.dim();
        for p in probes {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: p.len() });
            }
        }
        let projectors: Vec<DMatrix<f64>> = s_seq
            .par_iter()
            .map(|&s| {
                let k = self.index(s)?;
                if k > d {
                    return Err(Error::InvalidParameter(format!("s = {s} exceeds the unit interval")));
                }
                gram_projector(&whole.space, &DMatrix::identity(d, d).columns(0, k).into_owned())
            })
            .collect::<Result<_>>()?;
        let norms: Vec<Vec<f64>> = probes
            .iter()
            .map(|x| projectors.iter().map(|p| whole.space.norm(&(p * x))).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let monotone = norms.iter().map(|row| row.windows(2).all(|w| w[1] <= w[0] + 1e-12)).collect();
        Ok(ProbeDecay { s_values: s_seq.to_vec(), norms, monotone })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeDecay {
    pub s_values: Vec<f64>,
    /// `norms[p][k] = ‖P_{G_{(0,s_k)}} x_p‖`.
    pub norms: Vec<Vec<f64>>,
    pub monotone: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectRow {
    pub h: f64,
    pub defect: f64,
    /// `|defect(h) − defect(previous h)|`.
    pub increment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectScan {
    pub rows: Vec<DefectRow>,
    /// Increments decrease strictly until they vanish.
    pub converging: bool,
}

impl DefectScan {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["h", "defect", "increment", "flag"]);
        for r in &self.rows {
            t.push(vec![
                fmt_f64(r.h),
                fmt_f64(r.defect),
                r.increment.map(fmt_f64).unwrap_or_default(),
                self.converging.to_string(),
            ]);
        }
        t
    }
}

/// Hilbert–Schmidt defect of `addition_map(s, t)` across grid resolutions.
pub fn defect_scan(kernel: &Kernel, hs: &[f64], s: f64, t: f64) -> Result<DefectScan> {
    let defects: Vec<f64> = hs
        .par_iter()
        .map(|&h| {
            cell_count((0.0, s + t), h)?;
            let sys = SumSystem::new(*kernel, h, s + t)?;
            let report = s_class_check(&sys.addition_map(s, t)?, INV_FLOOR);
            if !report.invertible {
                return Err(Error::NotInvertible {
                    smallest: report.smallest_singular,
                    largest: report.largest_singular,
                });
            }
            Ok(report.hs_defect)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<DefectRow> = hs
        .iter()
        .zip(&defects)
        .enumerate()
        .map(|(i, (&h, &defect))| DefectRow { h, defect, increment: (i > 0).then(|| (defect - defects[i - 1]).abs()) })
        .collect();
    let incs: Vec<f64> = rows.iter().filter_map(|r| r.increment).collect();
    let converging = incs.windows(2).all(|w| w[1] < w[0] || w[1] == 0.0);
    Ok(DefectScan { rows, converging })
}
