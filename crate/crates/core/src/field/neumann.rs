//! Fast solver for `(-Lap_N + s) x = r` on a cell-centred grid with
//! reflecting boundary, diagonalised by the type-II cosine transform.

use std::sync::Arc;

use rayon::prelude::*;
use rustdct::{DctPlanner, TransformType2And3};

pub struct NeumannSolver {
    n: usize,
    dct: Arc<dyn TransformType2And3<f64>>,
    eig: Vec<f64>,
    shift: f64,
}

impl NeumannSolver {
    pub fn new(n: usize, spacing: f64, shift: f64) -> Self {
        let mut planner = DctPlanner::new();
        let dct = planner.plan_dct2(n);
        let eig = (0..n)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / (2.0 * n as f64)).sin();
                4.0 * s * s / (spacing * spacing)
            })
            .collect();
        Self { n, dct, eig, shift }
    }

    /// Solves in place.
    pub fn apply(&self, x: &mut [f64]) {
        let n = self.n;
        assert_eq!(x.len(), n * n);
        x.par_chunks_mut(n).for_each(|row| self.dct.process_dct2(row));
        let mut t = transpose(x, n);
        t.par_chunks_mut(n).enumerate().for_each(|(i, col)| {
            self.dct.process_dct2(col);
            for (j, c) in col.iter_mut().enumerate() {
                *c /= self.eig[i] + self.eig[j] + self.shift;
            }
            self.dct.process_dct3(col);
        });
        x.copy_from_slice(&transpose(&t, n));
        let scale = (2.0 / n as f64).powi(2);
        x.par_chunks_mut(n).for_each(|row| {
            self.dct.process_dct3(row);
            row.iter_mut().for_each(|v| *v *= scale);
        });
    }
}

fn transpose(x: &[f64], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    t.par_chunks_mut(n).enumerate().for_each(|(i, col)| {
        for (j, c) in col.iter_mut().enumerate() {
            *c = x[j * n + i];
        }
    });
    t
}
