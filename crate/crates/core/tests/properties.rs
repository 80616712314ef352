use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tensor_mmse::linalg::{inner, kron};
use tensor_mmse::metrics::sinr;
use tensor_mmse::tensor::{
    flat_index, kronecker_complement, mode_contract, multi_index, unfolding_column, ComplexTensor,
    CpFilter,
};
use tensor_mmse::CMatrix;

fn values(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            C64::new(
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
            )
        })
        .collect()
}

fn close(a: C64, b: C64, scale: f64) -> bool {
    (a - b).norm() <= 1e-10 * scale.max(1.0)
}

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=4, 1..=4)
}

proptest! {
    #[test]
    fn reshape_round_trips(dims in dims_strategy(), seed in any::<u64>()) {
        let n: usize = dims.iter().product();
        let v = values(n, seed);
        let t = ComplexTensor::from_vector(v.clone(), &dims).unwrap();
        prop_assert_eq!(t.vectorize(), v.clone());
        for (flat, &value) in v.iter().enumerate() {
            let idx = multi_index(&dims, flat);
            prop_assert_eq!(flat_index(&dims, &idx).unwrap(), flat);
            prop_assert_eq!(t.get(&idx).unwrap(), value);
        }
    }

    #[test]
    fn unfolding_is_a_permutation(dims in dims_strategy(), seed in any::<u64>()) {
        let n: usize = dims.iter().product();
        let t = ComplexTensor::from_vector(values(n, seed), &dims).unwrap();
        for mode in 0..dims.len() {
            let m = t.unfold(mode).unwrap();
            prop_assert_eq!(m.shape(), (dims[mode], n / dims[mode]));
            let mut seen = vec![false; n];
            for flat in 0..n {
                let idx = multi_index(&dims, flat);
                let col = unfolding_column(&dims, mode, &idx);
                let slot = idx[mode] + dims[mode] * col;
                prop_assert!(!seen[slot]);
                seen[slot] = true;
                prop_assert_eq!(m[(idx[mode], col)], t.data()[flat]);
            }
        }
    }

    #[test]
    fn contraction_is_unfolding_times_conjugated_kronecker(
        dims in dims_strategy(),
        k in 1usize..4,
        seed in any::<u64>(),
    ) {
        let n: usize = dims.iter().product();
        let data = values(n * k, seed);
        let mut full = dims.clone();
        full.push(k);
        let t = ComplexTensor::from_vector(data.clone(), &full).unwrap();
        for mode in 0..dims.len() {
            let vs: Vec<Vec<C64>> = (0..dims.len())
                .filter(|&q| q != mode)
                .map(|q| values(dims[q], seed ^ (q as u64 + 1)))
                .collect();
            let refs: Vec<&[C64]> = vs.iter().map(Vec::as_slice).collect();
            let u = mode_contract(&t, mode, &refs).unwrap();
            let wbar: Vec<C64> = kronecker_complement(&dims, mode, &refs)
                .iter()
                .map(|z| z.conj())
                .collect();
            for s in 0..k {
                let slice = ComplexTensor::from_vector(data[s * n..(s + 1) * n].to_vec(), &dims).unwrap();
                let expect = slice.unfold(mode).unwrap().matvec(&wbar).unwrap();
                for i in 0..dims[mode] {
                    prop_assert!(close(u[(i, s)], expect[i], expect[i].norm()));
                }
            }
        }
    }

    #[test]
    fn contraction_is_linear_in_the_data(
        dims in prop::collection::vec(1usize..=4, 2..=3),
        seed in any::<u64>(),
        a_re in -2.0f64..2.0,
        b_im in -2.0f64..2.0,
    ) {
        let n: usize = dims.iter().product();
        let mut full = dims.clone();
        full.push(2);
        let x = values(2 * n, seed);
        let y = values(2 * n, seed.wrapping_add(1));
        let a = C64::new(a_re, 0.5);
        let b = C64::new(-0.25, b_im);
        let z: Vec<C64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let vs: Vec<Vec<C64>> = dims[1..].iter().enumerate().map(|(i, &d)| values(d, seed ^ (i as u64 + 7))).collect();
        let refs: Vec<&[C64]> = vs.iter().map(Vec::as_slice).collect();
        let ux = mode_contract(&ComplexTensor::from_vector(x, &full).unwrap(), 0, &refs).unwrap();
        let uy = mode_contract(&ComplexTensor::from_vector(y, &full).unwrap(), 0, &refs).unwrap();
        let uz = mode_contract(&ComplexTensor::from_vector(z, &full).unwrap(), 0, &refs).unwrap();
        for (i, got) in uz.data().iter().enumerate() {
            let want = a * ux.data()[i] + b * uy.data()[i];
            prop_assert!(close(*got, want, want.norm() + 10.0));
        }
    }

    #[test]
    fn cp_vector_is_sum_of_rank_one_terms(
        dims in dims_strategy(),
        rank in 1usize..=4,
        seed in any::<u64>(),
    ) {
        let factors: Vec<Vec<Vec<C64>>> = dims
            .iter()
            .enumerate()
            .map(|(d, &n)| (0..rank).map(|r| values(n, seed ^ ((d * 8 + r) as u64))).collect())
            .collect();
        let f = CpFilter::new(factors.clone()).unwrap();
        let v = f.vectorize();
        let mut sum = vec![C64::new(0.0, 0.0); v.len()];
        for r in 0..rank {
            let mut term = vec![C64::new(1.0, 0.0)];
            for factor in &factors {
                term = kron(&factor[r], &term);
            }
            prop_assert_eq!(&term, &f.rank_one_term(r));
            for (s, t) in sum.iter_mut().zip(term) {
                *s += t;
            }
        }
        for (a, b) in v.iter().zip(&sum) {
            prop_assert!(close(*a, *b, b.norm()));
        }
    }

    #[test]
    fn filter_output_is_linear_in_each_mode_block(
        rank in 1usize..=3,
        seed in any::<u64>(),
    ) {
        let dims = [2usize, 3, 2];
        let factors: Vec<Vec<Vec<C64>>> = dims
            .iter()
            .enumerate()
            .map(|(d, &n)| (0..rank).map(|r| values(n, seed ^ ((d * 8 + r) as u64))).collect())
            .collect();
        let x = values(12, seed.wrapping_mul(3));
        for mode in 0..3 {
            let mut f = CpFilter::new(factors.clone()).unwrap();
            let block = f.mode_block(mode);
            let y1 = inner(&f.vectorize(), &x);
            let doubled: Vec<C64> = block.iter().map(|z| z * 2.0).collect();
            f.set_mode_block(mode, &doubled).unwrap();
            let y2 = inner(&f.vectorize(), &x);
            prop_assert!(close(y2, y1 * 2.0, y1.norm()));
        }
    }

    #[test]
    fn sinr_ignores_filter_scaling(
        seed in any::<u64>(),
        re in 0.1f64..10.0,
        im in -10.0f64..10.0,
    ) {
        let n = 4;
        let a = CMatrix::from_col_major(n, n, values(n * n, seed)).unwrap();
        let mut r_ii = a.matmul(&a.conj_transpose()).unwrap();
        r_ii.add_diagonal(0.01);
        let mut r_bb = CMatrix::zeros(n, n);
        r_bb.add_diagonal(0.3);
        let h = CMatrix::from_column(&values(n, seed ^ 9));
        let r_xx = h.matmul(&h.conj_transpose()).unwrap().add(&r_ii).unwrap().add(&r_bb).unwrap();
        let w = values(n, seed ^ 5);
        let base = sinr(&w, &r_xx, &r_ii, &r_bb).unwrap();
        let scaled: Vec<C64> = w.iter().map(|z| z * C64::new(re, im)).collect();
        let other = sinr(&scaled, &r_xx, &r_ii, &r_bb).unwrap();
        prop_assert!((base - other).abs() <= 1e-9 * base);
        prop_assert!(base >= 1.0 - 1e-12);
    }
}
