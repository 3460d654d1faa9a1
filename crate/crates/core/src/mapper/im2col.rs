//! Activation layout helpers. Activations are `C x H x W`, row-major.

use super::layer::{LayerKind, LayerSpec};

/// Lower a convolution input to one MVM input vector per output pixel, in
/// row-major output order. Vector entries are ordered `(channel, ky, kx)`;
/// padding reads zero. Fully connected layers yield the input unchanged.
pub fn im2col(act: &[u64], layer: &LayerSpec) -> Vec<Vec<u64>> {
    assert_eq!(act.len(), layer.input_len(), "activation size for `{}`", layer.name);
    if layer.kind == LayerKind::Fc {
        return vec![act.to_vec()];
    }
    let (h, w, k, s, p) = (
        layer.input_h as isize,
        layer.input_w as isize,
        layer.kernel as isize,
        layer.stride as isize,
        layer.padding as isize,
    );
    let mut out = Vec::with_capacity(layer.mvm_count());
    for oy in 0..layer.output_h() as isize {
        for ox in 0..layer.output_w() as isize {
            let mut v = Vec::with_capacity(layer.mvm_rows());
            for c in 0..layer.in_channels as isize {
                for ky in 0..k {
                    for kx in 0..k {
                        let (y, x) = (oy * s + ky - p, ox * s + kx - p);
                        v.push(if y < 0 || x < 0 || y >= h || x >= w {
                            0
                        } else {
                            act[(c * h * w + y * w + x) as usize]
                        });
                    }
                }
            }
            out.push(v);
        }
    }
    out
}

/// Max or average pooling; averages round half up.
pub fn pool(act: &[u64], layer: &LayerSpec) -> Vec<u64> {
    assert_eq!(act.len(), layer.input_len(), "activation size for `{}`", layer.name);
    let (h, w, k, s) = (layer.input_h, layer.input_w, layer.kernel, layer.stride);
    let (oh, ow) = (layer.output_h(), layer.output_w());
    let mut out = Vec::with_capacity(layer.output_len());
    for c in 0..layer.in_channels {
        for oy in 0..oh {
            for ox in 0..ow {
                let window = (0..k).flat_map(|ky| (0..k).map(move |kx| (oy * s + ky, ox * s + kx)));
                let values = window.map(|(y, x)| act[c * h * w + y * w + x]);
                out.push(match layer.kind {
                    LayerKind::MaxPool => values.max().unwrap_or(0),
                    _ => {
                        let n = (k * k) as u64;
                        (values.sum::<u64>() + n / 2) / n
                    }
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn im2col_matches_direct_convolution() {
        let l = LayerSpec::conv("c", 2, 3, 3, 5, 2, 1);
        let act: Vec<u64> = (0..l.input_len() as u64).map(|v| v % 7).collect();
        let weights: Vec<Vec<i64>> = (0..l.mvm_rows())
            .map(|r| (0..3).map(|c| (r as i64 * 3 + c) % 5 - 2).collect())
            .collect();
        let cols = im2col(&act, &l);
        assert_eq!(cols.len(), l.mvm_count());
        for (m, v) in cols.iter().enumerate() {
            let (oy, ox) = ((m / l.output_w()) as i64, (m % l.output_w()) as i64);
            for oc in 0..3 {
                let lowered: i64 = v.iter().zip(&weights).map(|(&x, w)| x as i64 * w[oc]).sum();
                let mut direct = 0i64;
                for c in 0..2i64 {
                    for ky in 0..3i64 {
                        for kx in 0..3i64 {
                            let (y, x) = (oy * 2 + ky - 1, ox * 2 + kx - 1);
                            if (0..5).contains(&y) && (0..5).contains(&x) {
                                let w = weights[(c * 9 + ky * 3 + kx) as usize][oc];
                                direct += act[(c * 25 + y * 5 + x) as usize] as i64 * w;
                            }
                        }
                    }
                }
                assert_eq!(lowered, direct);
            }
        }
    }

    #[test]
    fn pooling() {
        let act: Vec<u64> = vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16];
        let max = LayerSpec::pool("m", LayerKind::MaxPool, 1, 2, 4, 2);
        assert_eq!(pool(&act, &max), vec![6, 8, 14, 16]);
        let avg = LayerSpec::pool("a", LayerKind::AvgPool, 1, 2, 4, 2);
        // (1+2+5+6)/4 = 3.5 rounds to 4
        assert_eq!(pool(&act, &avg), vec![4, 6, 12, 14]);
    }
}
