//! Brute-force oracles: an independent bit-level array model and direct
//! metric recomputation over every operand pair.

use std::collections::BTreeMap;

use axmul_core::adder::{AdderLibrary, FullAdderSpec};
use axmul_core::cluster::{cluster_sweep, ed_histogram, ClusterSpec, PsnrPeak};
use axmul_core::fabric::{build_multiplier, Architecture, CellGrid, HalfAdderPolicy, MultiplierConfig};
use axmul_core::metrics::{exhaustive_sweep, exhaustive_sweep_seq, finalize, global_pmax};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const EXACT: [u8; 8] = [0b00, 0b01, 0b01, 0b10, 0b01, 0b10, 0b10, 0b11];

fn rows(spec: &FullAdderSpec) -> [u8; 8] {
    let mut t = [0u8; 8];
    for (i, r) in t.iter_mut().enumerate() {
        let (s, c) = spec.eval((i >> 2) as u8 & 1, (i >> 1) as u8 & 1, i as u8 & 1);
        *r = s | (c << 1);
    }
    t
}

fn fa(t: &[u8; 8], a: u8, b: u8, c: u8) -> (u8, u8) {
    let r = t[((a << 2) | (b << 1) | c) as usize];
    (r & 1, r >> 1)
}

fn bit(v: u64, i: usize) -> u8 {
    ((v >> i) & 1) as u8
}

/// Row-by-row ripple array: row `i` adds `x_i * y` to the running sum.
fn ref_ripple(x: u64, y: u64, n: usize, approx: &[u8; 8], degree: usize, exact_ha: bool) -> u64 {
    let pick = |w: usize, ha: bool| if w < degree && !(ha && exact_ha) { approx } else { &EXACT };
    let mut s: Vec<u8> = (0..n).map(|j| bit(x, 0) & bit(y, j)).collect();
    s.push(0);
    let mut out = vec![s[0]];
    for i in 1..n {
        let mut ns = vec![0u8; n + 1];
        let mut c = 0;
        for j in 0..n {
            let ha = j == 0 || (i == 1 && j == n - 1);
            let (sum, carry) = fa(pick(i + j, ha), bit(x, i) & bit(y, j), s[j + 1], c);
            ns[j] = sum;
            c = carry;
        }
        ns[n] = c;
        s = ns;
        out.push(s[0]);
    }
    out.extend_from_slice(&s[1..]);
    out.iter().enumerate().fold(0, |acc, (w, &b)| acc | (u64::from(b) << w))
}

/// Carry-save rows with a ripple merge; every cell uses the weight rule.
fn ref_carry_save(x: u64, y: u64, n: usize, approx: &[u8; 8], degree: usize) -> u64 {
    let pick = |w: usize| if w < degree { approx } else { &EXACT };
    let mut s: Vec<u8> = (0..n).map(|j| bit(x, 0) & bit(y, j)).collect();
    s.push(0);
    let mut c = vec![0u8; n];
    let mut out = vec![s[0]];
    for i in 1..n {
        let mut ns = vec![0u8; n + 1];
        let mut nc = vec![0u8; n];
        for j in 0..n {
            let (sum, carry) = fa(pick(i + j), bit(x, i) & bit(y, j), s[j + 1], c[j]);
            ns[j] = sum;
            nc[j] = carry;
        }
        s = ns;
        c = nc;
        out.push(s[0]);
    }
    let mut cin = 0;
    for w in n..2 * n {
        let (sum, carry) = fa(pick(w), s[w - n + 1], c[w - n], cin);
        out.push(sum);
        cin = carry;
    }
    out.iter().enumerate().fold(0, |acc, (w, &b)| acc | (u64::from(b) << w))
}

fn random_spec(rng: &mut StdRng, name: &str) -> FullAdderSpec {
    FullAdderSpec::from_masks(name, rng.random(), rng.random())
}

fn test_library() -> AdderLibrary {
    let mut rng = StdRng::seed_from_u64(0x5eed_0004);
    AdderLibrary::from_specs([
        FullAdderSpec::from_masks("ZERO", 0, 0),
        random_spec(&mut rng, "R1"),
        random_spec(&mut rng, "R2"),
        FullAdderSpec::from_bit_strings("AMA1", "01000001", "00110111").unwrap(),
        FullAdderSpec::from_bit_strings("AMA5", "00110011", "00001111").unwrap(),
    ])
    .unwrap()
}

fn grid(lib: &AdderLibrary, n: u32, name: &str, degree: u32, arch: Architecture) -> CellGrid {
    build_multiplier(&MultiplierConfig::with_architecture(n, name, degree, arch), lib).unwrap()
}

fn rel_close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

#[test]
fn grids_match_reference_array_models() {
    let lib = test_library();
    for name in ["ZERO", "R1", "R2", "AMA1", "AMA5"] {
        let t = rows(lib.get(name).unwrap());
        for n in [2u32, 3, 4, 5] {
            for degree in 0..=2 * n {
                let ripple = grid(&lib, n, name, degree, Architecture::RippleCarry);
                let ripple_fa = build_multiplier(
                    &MultiplierConfig::new(n, name, degree).half_adders(HalfAdderPolicy::FullAdder),
                    &lib,
                )
                .unwrap();
                let csa = grid(&lib, n, name, degree, Architecture::CarrySave);
                let (nn, d) = (n as usize, degree as usize);
                for x in 0..1u64 << n {
                    for y in 0..1u64 << n {
                        assert_eq!(ripple.product(x, y), ref_ripple(x, y, nn, &t, d, true), "{name} n={n} D={degree} {x}*{y}");
                        assert_eq!(ripple_fa.product(x, y), ref_ripple(x, y, nn, &t, d, false));
                        assert_eq!(csa.product(x, y), ref_carry_save(x, y, nn, &t, d), "csa {name} n={n} D={degree} {x}*{y}");
                    }
                }
            }
        }
    }
}

#[test]
fn eight_bit_grids_match_reference_on_samples() {
    let lib = test_library();
    let mut rng = StdRng::seed_from_u64(8);
    for name in ["R1", "AMA1", "AMA5"] {
        let t = rows(lib.get(name).unwrap());
        for degree in [7u32, 8, 9, 16] {
            let ripple = grid(&lib, 8, name, degree, Architecture::RippleCarry);
            let csa = grid(&lib, 8, name, degree, Architecture::CarrySave);
            for _ in 0..2000 {
                let (x, y) = (rng.random_range(0..256u64), rng.random_range(0..256u64));
                assert_eq!(ripple.product(x, y), ref_ripple(x, y, 8, &t, degree as usize, true));
                assert_eq!(csa.product(x, y), ref_carry_save(x, y, 8, &t, degree as usize));
            }
        }
    }
}

/// Direct recomputation of every reported quantity from the raw pairs.
struct Direct {
    er: f64,
    med: f64,
    ned: f64,
    mred: f64,
    mse: f64,
    psnr: f64,
    max_ed: u64,
    sum_ed: u128,
    sum_sq: u128,
    tally: BTreeMap<u64, u64>,
}

fn direct(g: &CellGrid) -> Direct {
    let n = g.width();
    let span = 1u64 << n;
    let (mut errs, mut sum, mut sq, mut max) = (0u64, 0u128, 0u128, 0u64);
    let (mut red, mut red_n) = (0.0f64, 0u64);
    let mut tally = BTreeMap::new();
    for x in 0..span {
        for y in 0..span {
            let p = x * y;
            let ed = p.abs_diff(g.product(x, y));
            errs += u64::from(ed != 0);
            sum += u128::from(ed);
            sq += u128::from(ed * ed);
            max = max.max(ed);
            if p != 0 {
                red += ed as f64 / p as f64;
                red_n += 1;
            }
            *tally.entry(ed).or_insert(0) += 1;
        }
    }
    let total = (span * span) as f64;
    let pmax = ((span - 1) * (span - 1)) as f64;
    let mse = sq as f64 / total;
    Direct {
        er: errs as f64 / total,
        med: sum as f64 / total,
        ned: sum as f64 / total / pmax,
        mred: red / red_n as f64,
        mse,
        psnr: if mse == 0.0 { f64::INFINITY } else { 10.0 * (65025.0 / mse).log10() },
        max_ed: max,
        sum_ed: sum,
        sum_sq: sq,
        tally,
    }
}

#[test]
fn four_bit_metrics_equal_direct_recomputation() {
    let lib = test_library();
    for name in ["ZERO", "R1", "R2"] {
        for degree in 0..=8 {
            for arch in [Architecture::RippleCarry, Architecture::CarrySave] {
                let g = grid(&lib, 4, name, degree, arch);
                let d = direct(&g);
                let acc = exhaustive_sweep(&g);
                assert_eq!(acc, exhaustive_sweep_seq(&g));
                assert_eq!(acc.count, 256);
                assert_eq!(acc.sum_ed, d.sum_ed);
                assert_eq!(acc.sum_ed_sq, d.sum_sq);
                assert_eq!(acc.max_ed, d.max_ed);
                let r = finalize(&acc, global_pmax(4)).unwrap();
                let ctx = format!("{name} D={degree} {arch}");
                assert!(rel_close(r.er, d.er), "{ctx} er");
                assert!(rel_close(r.med, d.med), "{ctx} med");
                assert!(rel_close(r.ned_global, d.ned), "{ctx} ned");
                assert!(rel_close(r.mred, d.mred), "{ctx} mred {} vs {}", r.mred, d.mred);
                assert!(rel_close(r.mse, d.mse), "{ctx} mse");
                assert!(rel_close(r.psnr_global, d.psnr), "{ctx} psnr");

                let h = ed_histogram(&g, Some(1)).unwrap();
                assert_eq!(h.total_count, 256);
                for (lo, count) in &h.bins {
                    assert_eq!(*count, d.tally.get(lo).copied().unwrap_or(0), "{ctx} bin {lo}");
                }
                let h3 = ed_histogram(&g, Some(3)).unwrap();
                for (lo, count) in &h3.bins {
                    let want: u64 = d.tally.range(*lo..lo + 3).map(|(_, c)| c).sum();
                    assert_eq!(*count, want);
                }
            }
        }
    }
}

#[test]
fn four_bit_cluster_cells_equal_direct_recomputation() {
    let lib = test_library();
    for name in ["ZERO", "R1", "R2"] {
        for degree in [0, 3, 5, 8] {
            let g = grid(&lib, 4, name, degree, Architecture::RippleCarry);
            for size in [1u64, 2, 4, 8, 16] {
                for peak in [PsnrPeak::ClusterPmax, PsnrPeak::Fixed255] {
                    let spec = ClusterSpec::new(4, size).unwrap().with_psnr_peak(peak);
                    let report = cluster_sweep(&g, &spec).unwrap();
                    let side = 16 / size;
                    assert_eq!(report.cells.len() as u64, side * side);
                    for ia in 0..side {
                        for ib in 0..side {
                            let (mut sum, mut sq, mut max) = (0u128, 0u128, 0u64);
                            for x in ia * size..(ia + 1) * size {
                                for y in ib * size..(ib + 1) * size {
                                    let ed = (x * y).abs_diff(g.product(x, y));
                                    sum += u128::from(ed);
                                    sq += u128::from(ed * ed);
                                    max = max.max(ed);
                                }
                            }
                            let cnt = (size * size) as f64;
                            let pmax = ((ia + 1) * size - 1) * ((ib + 1) * size - 1);
                            let cell = report.cell(ia, ib);
                            assert_eq!((cell.sum_ed, cell.sum_ed_sq, cell.max_ed), (sum, sq, max));
                            assert_eq!(cell.pmax_cluster, pmax);
                            let mean = sum as f64 / cnt;
                            let mse = sq as f64 / cnt;
                            assert!(rel_close(cell.mean_ed, mean));
                            assert!(rel_close(cell.mse, mse));
                            if pmax > 0 {
                                assert!(rel_close(cell.ned, mean / pmax as f64));
                            }
                            let peak_sq = match peak {
                                PsnrPeak::ClusterPmax => (pmax * pmax) as f64,
                                PsnrPeak::Fixed255 => 65025.0,
                            };
                            let psnr = if mse == 0.0 { f64::INFINITY } else { 10.0 * (peak_sq / mse).log10() };
                            assert!(rel_close(cell.psnr, psnr) || (psnr.is_nan() && cell.psnr.is_nan()));
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn two_bit_exhaustive_by_hand() {
    let lib = test_library();
    // With every cell approximated by ZERO, only the unadded partial products survive.
    for arch in [Architecture::RippleCarry, Architecture::CarrySave] {
        let g = grid(&lib, 2, "ZERO", 4, arch);
        for x in 0..4u64 {
            for y in 0..4u64 {
                let p = g.product(x, y);
                assert_eq!(p & 1, x & y & 1, "{arch} {x}*{y}");
            }
        }
        let exact = grid(&lib, 2, "ZERO", 0, arch);
        for x in 0..4u64 {
            for y in 0..4u64 {
                assert_eq!(exact.product(x, y), x * y);
            }
        }
    }
}

#[test]
fn zero_adder_full_degree_leaves_only_the_first_partial_product() {
    let lib = test_library();
    for n in 2..=8u32 {
        let g = grid(&lib, n, "ZERO", 2 * n, Architecture::CarrySave);
        let span = 1u64 << n;
        for x in 0..span {
            for y in 0..span {
                assert_eq!(g.product(x, y), x & y & 1);
            }
        }
        let acc = exhaustive_sweep(&g);
        let want: u128 = (0..span)
            .flat_map(|x| (0..span).map(move |y| u128::from(x * y - (x & y & 1))))
            .sum();
        assert_eq!(acc.sum_ed, want);
    }
}

#[test]
fn count_weighted_cluster_means_reproduce_global_sums() {
    let lib = test_library();
    for name in ["R1", "AMA1", "AMA5"] {
        for degree in [7u32, 16] {
            let g = grid(&lib, 8, name, degree, Architecture::RippleCarry);
            let acc = exhaustive_sweep(&g);
            let report = cluster_sweep(&g, &ClusterSpec::new(8, 16).unwrap()).unwrap();
            let sum: u128 = report.cells.iter().map(|c| c.sum_ed).sum();
            let sq: u128 = report.cells.iter().map(|c| c.sum_ed_sq).sum();
            let count: u64 = report.cells.iter().map(|c| c.count).sum();
            assert_eq!((sum, sq, count), (acc.sum_ed, acc.sum_ed_sq, acc.count));
            let max = report.cells.iter().map(|c| c.max_ed).max().unwrap();
            assert_eq!(max, acc.max_ed);
        }
    }
}
