//! Built-in checks of the digital CiM arithmetic: gate truth tables,
//! exhaustive and randomized word-level add/subtract, and pipelined versus
//! serial issue.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dcim::{bitwise_read, borrow_reference, DcimArray, DcimGeometry, Gates};
use crate::quantkit::{QuantScheme, ScaleFactorSet, TernaryCode};
use crate::Result;

/// Failures recorded verbatim per suite; the rest are only counted.
const MAX_REPORTED: usize = 5;

pub const RANDOM_WORD_CASES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub cases: u64,
    pub failures: u64,
    pub examples: Vec<String>,
}

impl SuiteResult {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            cases: 0,
            failures: 0,
            examples: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.examples.len() < MAX_REPORTED {
                self.examples.push(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelftestReport {
    pub suites: Vec<SuiteResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }

    /// One line per suite.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for suite in &self.suites {
            let status = if suite.passed() { "PASS" } else { "FAIL" };
            s.push_str(&format!(
                "{status} {:<24} {:>7} cases, {} failed\n",
                suite.name, suite.cases, suite.failures
            ));
            for e in &suite.examples {
                s.push_str(&format!("     {e}\n"));
            }
        }
        s
    }
}

const BITS: [bool; 2] = [false, true];

pub fn adder_truth_table(gates: &Gates) -> SuiteResult {
    let mut r = SuiteResult::new("full_add_bit");
    for a in BITS {
        for b in BITS {
            for c in BITS {
                let lines = bitwise_read(a, b);
                let (sum, cout) = (gates.add)(lines.xor, lines.and, c);
                let want = a as u8 + b as u8 + c as u8;
                r.check(sum as u8 + 2 * cout as u8 == want, || {
                    format!("full_add_bit: A={} B={} Cin={} gave sum={} cout={}", a as u8, b as u8, c as u8, sum as u8, cout as u8)
                });
            }
        }
    }
    r
}

pub fn subtractor_truth_table(gates: &Gates) -> SuiteResult {
    let mut r = SuiteResult::new("full_sub_bit");
    for a in BITS {
        for b in BITS {
            for bin in BITS {
                let lines = bitwise_read(a, b);
                let (diff, bout) = (gates.sub)(lines.xor, b, bin);
                let want = a as i8 - b as i8 - bin as i8;
                let ok = diff as i8 - 2 * bout as i8 == want && bout == borrow_reference(a, b, bin);
                r.check(ok, || {
                    format!(
                        "full_sub_bit: A={} B={} Bin={} gave diff={} bout={}",
                        a as u8, b as u8, bin as u8, diff as u8, bout as u8
                    )
                });
            }
        }
    }
    r
}

fn single_step_array(scheme: &QuantScheme, sf: &[i64], gates: Gates) -> Result<DcimArray> {
    let cols = sf.len();
    let g = DcimGeometry::for_scheme(scheme, cols);
    let mut vals = vec![0i64; g.steps * cols];
    vals[..cols].copy_from_slice(sf);
    let set = ScaleFactorSet::from_signed(g.steps, cols, g.sf_bits, 0, &vals)?;
    Ok(DcimArray::load_scale_factors(g, &set)?.with_gates(gates))
}

/// Every 8-bit partial sum against every 4-bit magnitude, added and
/// subtracted: 8192 cases.
pub fn word_level_exhaustive(gates: Gates) -> Result<SuiteResult> {
    let mut r = SuiteResult::new("word_level_exhaustive");
    let scheme = QuantScheme::cifar();
    let start: Vec<i64> = (scheme.ps_min()..=scheme.ps_max()).collect();
    for sf in 0..1i64 << scheme.sf_bits {
        let mut array = single_step_array(&scheme, &vec![sf; start.len()], gates)?;
        for (code, sign) in [(TernaryCode::Plus, 1), (TernaryCode::Minus, -1)] {
            array.write_partial_sums(&start)?;
            array.apply_step(&vec![code; start.len()], 0)?;
            for (&ps, got) in start.iter().zip(array.read_partial_sums()) {
                let want = scheme.saturate(ps + sign * sf).0;
                r.check(got == want, || {
                    format!("word: {ps} {} {sf} gave {got}, expected {want}", if sign > 0 { '+' } else { '-' })
                });
            }
        }
    }
    Ok(r)
}

/// Random 16-bit partial sums and signed 8-bit scale factors.
pub fn word_level_random(gates: Gates, seed: u64, cases: usize) -> Result<SuiteResult> {
    const BATCH: usize = 1000;
    let mut r = SuiteResult::new("word_level_random");
    let scheme = QuantScheme::imagenet();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sf_max = (1i64 << scheme.sf_bits) - 1;
    let mut done = 0;
    while done < cases {
        let n = BATCH.min(cases - done);
        let sf: Vec<i64> = (0..n).map(|_| rng.gen_range(-sf_max..=sf_max)).collect();
        let ps: Vec<i64> = (0..n).map(|_| rng.gen_range(scheme.ps_min()..=scheme.ps_max())).collect();
        let codes: Vec<TernaryCode> = (0..n)
            .map(|_| if rng.gen() { TernaryCode::Plus } else { TernaryCode::Minus })
            .collect();
        let mut array = single_step_array(&scheme, &sf, gates)?;
        array.write_partial_sums(&ps)?;
        array.apply_step(&codes, 0)?;
        for (i, got) in array.read_partial_sums().into_iter().enumerate() {
            let want = scheme.saturate(ps[i] + codes[i].value() * sf[i]).0;
            r.check(got == want, || {
                format!("word: {} + ({})*({}) gave {got}, expected {want}", ps[i], codes[i].value(), sf[i])
            });
        }
        done += n;
    }
    Ok(r)
}

/// Random ternary op sequences issued back to back must match one-at-a-time
/// issue and plain saturating accumulation.
pub fn pipeline_transparency(gates: Gates, seed: u64) -> Result<SuiteResult> {
    let mut r = SuiteResult::new("pipeline_transparency");
    let scheme = QuantScheme::cifar();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = 64;
    for trial in 0..50 {
        let g = DcimGeometry::for_scheme(&scheme, cols);
        let sf: Vec<i64> = (0..g.steps * cols).map(|_| rng.gen_range(-15..=15)).collect();
        let set = ScaleFactorSet::from_signed(g.steps, cols, g.sf_bits, 0, &sf)?;
        let ops: Vec<(usize, Vec<TernaryCode>)> = (0..rng.gen_range(1..24))
            .map(|_| {
                let step = rng.gen_range(0..g.steps);
                let codes = (0..cols)
                    .map(|_| TernaryCode::from_value(rng.gen_range(-1..=1)).expect("valid"))
                    .collect();
                (step, codes)
            })
            .collect();
        let mut piped = DcimArray::load_scale_factors(g, &set)?.with_gates(gates);
        let mut serial = DcimArray::load_scale_factors(g, &set)?.with_gates(gates);
        let mut reference = vec![0i64; cols];
        for (step, codes) in &ops {
            piped.issue_step(codes, *step)?;
            serial.apply_step(codes, *step)?;
            for (c, code) in codes.iter().enumerate() {
                reference[c] = scheme.saturate(reference[c] + code.value() * sf[step * cols + c]).0;
            }
        }
        let (p, s) = (piped.read_partial_sums(), serial.read_partial_sums());
        r.check(p == s && s == reference, || format!("pipeline: trial {trial} diverged"));
        r.check(piped.counters().cycles == ops.len() as u64 + 2, || {
            format!("pipeline: trial {trial} took {} cycles for {} ops", piped.counters().cycles, ops.len())
        });
    }
    Ok(r)
}

pub fn run_selftest(gates: Gates, seed: u64) -> Result<SelftestReport> {
    Ok(SelftestReport {
        suites: vec![
            adder_truth_table(&gates),
            subtractor_truth_table(&gates),
            word_level_exhaustive(gates)?,
            word_level_random(gates, seed, RANDOM_WORD_CASES)?,
            pipeline_transparency(gates, seed)?,
        ],
    })
}
