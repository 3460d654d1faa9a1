/// Ideal uniform mid-rise ADC over `[-clip, +clip]` with `2^adc_bits` levels,
/// used only by the ADC baseline.
///
/// Level `k` reconstructs to `-clip + (k + 1/2) * step` with
/// `step = 2 * clip / 2^adc_bits`; out-of-range inputs clamp to the end codes.
/// Levels are returned rounded half-up to the nearest integer, which is exact
/// whenever `step` is an even integer (e.g. 7 bits over +/-128).
pub fn ideal_adc(ps: &[i64], adc_bits: u32, clip: i64) -> Vec<i64> {
    assert!((1..=30).contains(&adc_bits), "adc_bits {adc_bits} unsupported");
    assert!(clip > 0, "clip must be positive");
    let levels = 1i128 << adc_bits;
    let clip = clip as i128;
    ps.iter()
        .map(|&v| {
            let k = ((v as i128 + clip) * levels).div_euclid(2 * clip).clamp(0, levels - 1);
            // level = clip * (2k + 1 - levels) / levels, rounded half-up
            let num = clip * (2 * k + 1 - levels);
            (2 * num + levels).div_euclid(2 * levels) as i64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive scan of reconstruction levels; ties go to the upper level.
    fn nearest_level(v: i64, bits: u32, clip: i64) -> i64 {
        let n = 1i64 << bits;
        let step = 2.0 * clip as f64 / n as f64;
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..n {
            let level = -(clip as f64) + (k as f64 + 0.5) * step;
            let d = (v as f64 - level).abs();
            if d <= best.0 {
                best = (d, level);
            }
        }
        (best.1 + 0.5).floor() as i64
    }

    #[test]
    fn seven_bit_examples() {
        assert_eq!(ideal_adc(&[5], 7, 128), vec![5]);
        assert_eq!(ideal_adc(&[138], 7, 128), vec![127]);
        assert_eq!(ideal_adc(&[-500], 7, 128), vec![-127]);
    }

    #[test]
    fn four_bit_matches_level_scan() {
        let ps: Vec<i64> = (-140..=140).collect();
        let got = ideal_adc(&ps, 4, 128);
        for (v, g) in ps.iter().zip(got) {
            assert_eq!(g, nearest_level(*v, 4, 128), "ps={v}");
        }
    }

    #[test]
    fn odd_steps_round_half_up() {
        // 8 bits over +/-128 gives step 1 and half-integer levels
        assert_eq!(ideal_adc(&[0, 1, -1], 8, 128), vec![1, 2, 0]);
    }
}
