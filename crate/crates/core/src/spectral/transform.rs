//! Fast tensor cosine transforms on the half-integer collocation grid.
//!
//! Forward: nodal values -> amplitudes `c_k` with
//! `f(x_j) = sum_k c_k prod_i cos(pi k_i (j_i + 1/2) / N_i)`.
//! Odd derivatives produce sine series, which are evaluated back at the
//! nodes with a DST-III along the affected axes.

use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};

use crate::real::Real;

/// Series type along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// Cosine series, index `k` multiplies `cos(pi k x / L)`.
    Even,
    /// Sine series, index `k` multiplies `sin(pi k x / L)`; entry 0 is ignored.
    Odd,
}

struct AxisPlan<T: Real> {
    n: usize,
    dct2: Arc<dyn TransformType2And3<T>>,
    dct3: Arc<dyn TransformType2And3<T>>,
    dst3: Arc<dyn TransformType2And3<T>>,
}

/// Per-axis transform plans for one grid shape.
pub struct CosineTransform<T: Real> {
    counts: Vec<usize>,
    axes: Vec<AxisPlan<T>>,
}

impl<T: Real> Clone for CosineTransform<T> {
    fn clone(&self) -> Self {
        Self {
            counts: self.counts.clone(),
            axes: self
                .axes
                .iter()
                .map(|a| AxisPlan {
                    n: a.n,
                    dct2: Arc::clone(&a.dct2),
                    dct3: Arc::clone(&a.dct3),
                    dst3: Arc::clone(&a.dst3),
                })
                .collect(),
        }
    }
}

impl<T: Real> std::fmt::Debug for CosineTransform<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CosineTransform").field("counts", &self.counts).finish()
    }
}

// Lines gathered together for the strided (non-contiguous) axes.
const BLOCK: usize = 16;

impl<T: Real> CosineTransform<T> {
    pub fn new(counts: &[usize]) -> Self {
        let mut planner = DctPlanner::new();
        let axes = counts
            .iter()
            .map(|&n| AxisPlan {
                n,
                dct2: planner.plan_dct2(n),
                dct3: planner.plan_dct3(n),
                dst3: planner.plan_dst3(n),
            })
            .collect();
        Self {
            counts: counts.to_vec(),
            axes,
        }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Nodal values -> cosine amplitudes, in place.
    pub fn forward(&self, data: &mut [T]) {
        for axis in 0..self.axes.len() {
            let plan = &self.axes[axis];
            let n = plan.n;
            let inv_n = T::one() / T::from_usize_lossy(n);
            let two_inv_n = inv_n + inv_n;
            let mut scratch = vec![T::zero(); plan.dct2.get_scratch_len()];
            self.for_each_line(data, axis, |line| {
                plan.dct2.process_dct2_with_scratch(line, &mut scratch);
                line[0] = line[0] * inv_n;
                for v in &mut line[1..] {
                    *v = *v * two_inv_n;
                }
            });
        }
    }

    /// Cosine amplitudes -> nodal values, in place.
    pub fn inverse(&self, data: &mut [T]) {
        let parity = vec![Parity::Even; self.axes.len()];
        self.evaluate(data, &parity);
    }

    /// Evaluate a mixed cosine/sine series at the nodes, in place.
    pub fn evaluate(&self, data: &mut [T], parity: &[Parity]) {
        assert_eq!(parity.len(), self.axes.len());
        for (axis, &p) in parity.iter().enumerate() {
            let plan = &self.axes[axis];
            match p {
                Parity::Even => {
                    let mut scratch = vec![T::zero(); plan.dct3.get_scratch_len()];
                    self.for_each_line(data, axis, |line| {
                        line[0] = line[0] + line[0];
                        plan.dct3.process_dct3_with_scratch(line, &mut scratch);
                    });
                }
                Parity::Odd => {
                    let mut scratch = vec![T::zero(); plan.dst3.get_scratch_len()];
                    self.for_each_line(data, axis, |line| {
                        // DST-III input index k carries wavenumber k + 1.
                        line.rotate_left(1);
                        let last = line.len() - 1;
                        line[last] = T::zero();
                        plan.dst3.process_dst3_with_scratch(line, &mut scratch);
                    });
                }
            }
        }
    }

    fn for_each_line(&self, data: &mut [T], axis: usize, mut f: impl FnMut(&mut [T])) {
        let n = self.counts[axis];
        let inner: usize = self.counts[axis + 1..].iter().product();
        let outer: usize = self.counts[..axis].iter().product();
        // every line map is linear, so zero lines stay zero
        let is_zero = |line: &[T]| line.iter().all(|v| *v == T::zero());
        if inner == 1 {
            for line in data.chunks_exact_mut(n) {
                if !is_zero(line) {
                    f(line);
                }
            }
            return;
        }
        let mut buf = vec![T::zero(); BLOCK * n];
        for o in 0..outer {
            let base = o * n * inner;
            let mut i0 = 0;
            while i0 < inner {
                let width = BLOCK.min(inner - i0);
                let block_zero = (0..n).all(|j| {
                    let row = base + j * inner + i0;
                    is_zero(&data[row..row + width])
                });
                if block_zero {
                    i0 += width;
                    continue;
                }
                for j in 0..n {
                    let row = base + j * inner + i0;
                    for b in 0..width {
                        buf[b * n + j] = data[row + b];
                    }
                }
                for b in 0..width {
                    let line = &mut buf[b * n..(b + 1) * n];
                    if !is_zero(line) {
                        f(line);
                    }
                }
                for j in 0..n {
                    let row = base + j * inner + i0;
                    for b in 0..width {
                        data[row + b] = buf[b * n + j];
                    }
                }
                i0 += width;
            }
        }
    }
}
