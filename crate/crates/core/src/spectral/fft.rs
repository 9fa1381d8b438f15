use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized in-place transform along every axis of a row-major
/// `n^d` array.
pub(crate) fn transform(data: &mut [Complex64], n: usize, d: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), n.pow(d as u32));
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction));
    if d == 1 {
        fft.process(data);
        return;
    }
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, value) in line.iter().enumerate() {
                    data[base + j * stride] = *value;
                }
            }
        }
    }
}

pub(crate) fn forward(data: &mut [Complex64], n: usize, d: usize) {
    transform(data, n, d, FftDirection::Forward);
    let scale = 1.0 / data.len() as f64;
    data.iter_mut().for_each(|c| *c *= scale);
}

pub(crate) fn inverse(data: &mut [Complex64], n: usize, d: usize) {
    transform(data, n, d, FftDirection::Inverse);
}
