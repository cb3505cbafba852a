//! Thin row/column wrapper over `rustfft` for 1-D and 2-D row-major buffers.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// Unnormalized in-place transform of a `n^dim` row-major buffer.
pub(crate) fn transform(data: &mut [Complex64], n: usize, dim: usize, dir: Direction) {
    debug_assert_eq!(data.len(), n.pow(dim as u32));
    PLANNER.with(|planner| {
        let plan = {
            let mut planner = planner.borrow_mut();
            match dir {
                Direction::Forward => planner.plan_fft_forward(n),
                Direction::Inverse => planner.plan_fft_inverse(n),
            }
        };
        // rows are contiguous; rustfft processes every length-n chunk
        plan.process(data);
        if dim == 2 {
            let mut t = transpose(data, n);
            plan.process(&mut t);
            let back = transpose(&t, n);
            data.copy_from_slice(&back);
        }
    });
}

fn transpose(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = data[i * n + j];
        }
    }
    out
}
