#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Deserialize;
use sumsys_core::hilbert::{ComplexVector, GramMap, GramSpace};

#[derive(Debug, Deserialize)]
pub struct Residuals {
    pub functorial: f64,
    pub intertwining: f64,
    pub ccr_minus_im_xy: f64,
    pub ccr_plus_im_xy: f64,
}

#[derive(Debug, Deserialize)]
pub struct Pair {
    pub dim: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub u: [Vec<f64>; 2],
    pub x: [Vec<f64>; 2],
    pub y: [Vec<f64>; 2],
    pub oracle: Residuals,
    pub threshold: Residuals,
}

#[derive(Debug, Deserialize)]
pub struct Fixture {
    pub provenance: String,
    pub seed: u64,
    pub oracle_cutoff: usize,
    pub cutoff: usize,
    pub sector: usize,
    pub pairs: Vec<Pair>,
}

pub fn fixture() -> Fixture {
    let text = include_str!("../fixtures/shale_oracle.json");
    serde_json::from_str(text).expect("fixture parses")
}

impl Pair {
    fn map(&self, rows: &[Vec<f64>]) -> GramMap {
        let s = Arc::new(GramSpace::euclidean(self.dim, "R").unwrap());
        let m = DMatrix::from_fn(self.dim, self.dim, |i, j| rows[i][j]);
        GramMap::new(s.clone(), s, m).unwrap()
    }

    pub fn a_map(&self) -> GramMap {
        self.map(&self.a)
    }

    pub fn b_map(&self) -> GramMap {
        self.map(&self.b)
    }

    pub fn u_vec(&self) -> ComplexVector {
        ComplexVector::new(DVector::from_vec(self.u[0].clone()), DVector::from_vec(self.u[1].clone()))
    }

    fn complex(v: &[Vec<f64>; 2]) -> DVector<Complex64> {
        DVector::from_fn(v[0].len(), |i, _| Complex64::new(v[0][i], v[1][i]))
    }

    pub fn x_vec(&self) -> DVector<Complex64> {
        Self::complex(&self.x)
    }

    pub fn y_vec(&self) -> DVector<Complex64> {
        Self::complex(&self.y)
    }
}
