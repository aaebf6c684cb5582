use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::kernel::sorted::tau_b_sorted;

fn backends() -> Vec<Backend> {
    Backend::available()
}

fn sorted_vec(rng: &mut ChaCha8Rng, len: usize, range: i32) -> Vec<i32> {
    let mut v: Vec<i32> = (0..len).map(|_| rng.random_range(0..range)).collect();
    v.sort();
    v
}

fn merged(a: &[i32], b: &[i32]) -> Vec<i32> {
    let mut all = [a, b].concat();
    all.sort();
    all
}

fn brute_cross(a: &[i32], b: &[i32]) -> u64 {
    a.iter()
        .map(|&x| b.iter().filter(|&&y| y < x).count() as u64)
        .sum()
}

fn run_merge(backend: Backend, a: &[i32], b: &[i32], opts: MergeOptions) -> (Vec<i32>, u64) {
    let input = [a, b].concat();
    let mut out = vec![-1; input.len()];
    let n_d = vse_merge(backend, &input, &mut out, 0, a.len(), input.len(), opts);
    (out, n_d)
}

#[test]
fn merge_examples() {
    for backend in backends() {
        let (out, n_d) = run_merge(
            backend,
            &[1, 2, 3, 4],
            &[5, 6, 7, 8],
            MergeOptions::default(),
        );
        assert_eq!(out, vec![1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(n_d, 0);

        let (out, n_d) = run_merge(
            backend,
            &[10, 20, 30],
            &[5, 15, 25],
            MergeOptions::default(),
        );
        assert_eq!(out, vec![5, 10, 15, 20, 25, 30]);
        assert_eq!(n_d, 6);

        let (out, n_d) = run_merge(backend, &[1, 1], &[1, 1], MergeOptions::default());
        assert_eq!(out, vec![1, 1, 1, 1]);
        assert_eq!(n_d, 0);
    }
}

#[test]
fn merge_matches_scalar_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for backend in backends() {
        for _ in 0..3000 {
            let la = rng.random_range(0..80);
            let lb = rng.random_range(0..80);
            let range = *[2, 50, 1 << 20].get(rng.random_range(0..3)).unwrap();
            let a = sorted_vec(&mut rng, la, range);
            let b = sorted_vec(&mut rng, lb, range);
            for fast in [true, false] {
                let opts = MergeOptions {
                    count: true,
                    fast_paths: fast,
                };
                let (out, n_d) = run_merge(backend, &a, &b, opts);
                assert_eq!(out, merged(&a, &b), "{backend} a={a:?} b={b:?}");
                assert_eq!(n_d, brute_cross(&a, &b));
            }
        }
    }
}

#[test]
fn merge_handles_extreme_values() {
    for backend in backends() {
        let a = vec![i32::MIN, -5, 0, 7, i32::MAX, i32::MAX];
        let b: Vec<i32> = (0..40)
            .map(|x| if x > 30 { i32::MAX } else { x - 20 })
            .collect();
        let (out, _) = run_merge(backend, &a, &b, MergeOptions::default());
        assert_eq!(out, merged(&a, &b));
        let a: Vec<i32> = (0..33).collect();
        let (out, _) = run_merge(backend, &a, &b, MergeOptions::default());
        assert_eq!(out, merged(&a, &b));
    }
}

#[test]
fn merge_writes_only_its_range() {
    for backend in backends() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = sorted_vec(&mut rng, 37, 100);
        let b = sorted_vec(&mut rng, 21, 100);
        let mut input = vec![999; 5];
        input.extend(&a);
        input.extend(&b);
        input.extend([999; 7]);
        let mut out = vec![-7; input.len()];
        let (left, mid, right) = (5, 5 + a.len(), 5 + a.len() + b.len());
        vse_merge(
            backend,
            &input,
            &mut out,
            left,
            mid,
            right,
            MergeOptions::default(),
        );
        assert!(out[..left].iter().all(|&x| x == -7));
        assert!(out[right..].iter().all(|&x| x == -7));
        assert_eq!(&out[left..right], &merged(&a, &b)[..]);
    }
}

#[test]
fn leftover_examples() {
    // left run exhausted, right remainder [9, 10], pending (1, 2, 3, 4)
    let input = [9, 10];
    let mut out = [0; 6];
    let cursors = LeftoverCursors {
        l: 0,
        mid: 0,
        r: 0,
        right: 2,
        p: 0,
    };
    for fast in [true, false] {
        let end = merge_leftover(&input, &mut out, cursors, LaneVector([1, 2, 3, 4]), 4, fast);
        assert_eq!(end, 6);
        assert_eq!(out, [1, 2, 3, 4, 9, 10]);
    }

    // interleaving remainder
    let input = [0, 3, 5];
    let mut out = [0; 7];
    let cursors = LeftoverCursors {
        l: 0,
        mid: 0,
        r: 0,
        right: 3,
        p: 0,
    };
    let end = merge_leftover(&input, &mut out, cursors, LaneVector([1, 2, 4, 6]), 4, true);
    assert_eq!(end, 7);
    assert_eq!(out, [0, 1, 2, 3, 4, 5, 6]);

    // both runs empty: pending values come out verbatim
    let mut out = [0; 4];
    let cursors = LeftoverCursors {
        l: 0,
        mid: 0,
        r: 0,
        right: 0,
        p: 0,
    };
    merge_leftover(&[], &mut out, cursors, LaneVector([4, 5, 6, 7]), 4, true);
    assert_eq!(out, [4, 5, 6, 7]);
}

#[test]
fn leftover_padding_never_reaches_output() {
    let input = [1, 2, 3, 8, 9];
    let mut out = [-1; 8];
    // left run [0..3), right run [3..5), two pending values
    let cursors = LeftoverCursors {
        l: 0,
        mid: 3,
        r: 3,
        right: 5,
        p: 0,
    };
    let pending = LaneVector([0, 5, i32::MAX, i32::MAX]);
    let end = merge_leftover(&input, &mut out, cursors, pending, 2, false);
    assert_eq!(end, 7);
    assert_eq!(out, [0, 1, 2, 3, 5, 8, 9, -1]);
}

#[test]
fn sort_packed_sorts_and_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for backend in backends() {
        for &n in &[1usize, 2, 15, 16, 17, 31, 33, 100, 257, 1000] {
            let data: Vec<i32> = (0..n).map(|_| rng.random_range(0..40)).collect();
            let mut expected_inv = 0u64;
            for i in 0..n {
                for j in i + 1..n {
                    if data[j] < data[i] {
                        expected_inv += 1;
                    }
                }
            }
            let mut sorted = data.clone();
            let mut buf = vec![0; n];
            let inv = sort_packed(backend, &mut sorted, &mut buf, MergeOptions::default());
            let mut expected = data.clone();
            expected.sort();
            assert_eq!(sorted, expected);
            assert_eq!(inv, expected_inv, "{backend} n={n}");
        }
    }
}

#[test]
fn kernel_examples() {
    for backend in backends() {
        let mut s = VectorScratch::default();
        let id: Vec<u32> = (0..16).collect();
        let r = tau_b_vectorized_with(&id, &id, &mut s, backend).unwrap();
        assert_eq!(r.tau_b, 1.0);
        let r = tau_b_vectorized_with(&[1, 1, 2], &[1, 2, 2], &mut s, backend).unwrap();
        assert_eq!(r.tau_b, 0.5);
    }
}

#[test]
fn kernel_errors() {
    assert!(matches!(
        tau_b_vectorized(&[0], &[0]),
        Err(Error::InvalidInput(_))
    ));
    let long = vec![0u32; 32768];
    assert!(matches!(
        tau_b_vectorized(&long, &long),
        Err(Error::CapacityExceeded(_))
    ));
    assert!(matches!(
        tau_b_vectorized(&[0, 40000], &[0, 1]),
        Err(Error::CapacityExceeded(_))
    ));
}

#[test]
fn matches_sorted_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let sizes = [2usize, 3, 15, 16, 17, 31, 33, 255, 1000];
    for backend in backends() {
        let mut scratch = VectorScratch::default();
        for &n in &sizes {
            for &tie in &[0.0, 0.3, 1.0] {
                for _ in 0..8 {
                    let k = ((n as f64 * (1.0 - tie)).ceil() as u32).max(1);
                    let u: Vec<u32> = (0..n).map(|_| rng.random_range(0..k)).collect();
                    let v: Vec<u32> = (0..n).map(|_| rng.random_range(0..k)).collect();
                    let expected = tau_b_sorted(&u, &v).unwrap().counts;
                    let got = tau_b_vectorized_with(&u, &v, &mut scratch, backend)
                        .unwrap()
                        .counts;
                    assert_eq!(got, expected, "{backend} n={n} tie={tie}");
                }
            }
        }
    }
}

#[test]
fn whole_equal_runs_add_no_discordance() {
    for backend in backends() {
        let n = 64;
        let u: Vec<u32> = (0..n).map(|i| i / 32).collect();
        let v = vec![3u32; n as usize];
        let r = tau_b_vectorized_with(&u, &v, &mut VectorScratch::default(), backend).unwrap();
        assert_eq!(r.counts.n_d, 0);
        assert!(!r.defined_b);
    }
}
