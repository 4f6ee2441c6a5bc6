use crate::raster::Raster;

/// Standard deviation used for a Gaussian of `ksize` taps when none is given
/// (the common image-processing convention).
pub fn gaussian_sigma_for_kernel(ksize: usize) -> f64 {
    0.3 * ((ksize as f64 - 1.0) * 0.5 - 1.0) + 0.8
}

/// Normalised 1-D Gaussian taps.
pub fn gaussian_kernel(ksize: usize) -> Vec<f64> {
    let sigma = gaussian_sigma_for_kernel(ksize);
    let half = (ksize / 2) as f64;
    let raw: Vec<f64> = (0..ksize)
        .map(|i| {
            let x = i as f64 - half;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Separable Gaussian blur of the 0/1 raster with zero padding outside,
/// thresholded back to binary at 0.5 (strictly greater).
pub fn smooth_binary(src: &Raster, ksize: usize) -> Raster {
    if ksize <= 1 {
        return src.clone();
    }
    let (rows, cols) = (src.rows(), src.cols());
    let kernel: Vec<f32> = gaussian_kernel(ksize).into_iter().map(|v| v as f32).collect();
    let half = ksize / 2;

    let input: Vec<f32> = src.data().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();

    // Horizontal pass; all-zero rows stay zero.
    let mut tmp = vec![0f32; rows * cols];
    for r in 0..rows {
        let row_in = &input[r * cols..(r + 1) * cols];
        if !row_in.iter().any(|&v| v != 0.0) {
            continue;
        }
        let row_out = &mut tmp[r * cols..(r + 1) * cols];
        for (t, &k) in kernel.iter().enumerate() {
            // out[j] += k * in[j + t - half]
            let shift = t as isize - half as isize;
            let (out_lo, in_lo) = if shift < 0 {
                ((-shift) as usize, 0usize)
            } else {
                (0usize, shift as usize)
            };
            if out_lo >= cols || in_lo >= cols {
                continue;
            }
            let len = cols - out_lo.max(in_lo);
            for (o, &i) in row_out[out_lo..out_lo + len]
                .iter_mut()
                .zip(&row_in[in_lo..in_lo + len])
            {
                *o += k * i;
            }
        }
    }

    // Vertical pass, accumulating whole rows.
    let mut out = vec![0f32; rows * cols];
    for r in 0..rows {
        let row_out = &mut out[r * cols..(r + 1) * cols];
        for (t, &k) in kernel.iter().enumerate() {
            let src_r = r as isize + t as isize - half as isize;
            if src_r < 0 || src_r >= rows as isize {
                continue;
            }
            let row_in = &tmp[src_r as usize * cols..(src_r as usize + 1) * cols];
            for (o, &i) in row_out.iter_mut().zip(row_in) {
                *o += k * i;
            }
        }
    }

    Raster::from_vec(rows, cols, out.into_iter().map(|v| v > 0.5).collect())
}
