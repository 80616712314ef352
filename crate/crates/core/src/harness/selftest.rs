//! Quick oracle checks runnable from the command line.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::equalize::{lr_tmmse_train, mmse_sample, Init, Loading, LrTmmseConfig};
use crate::linalg::{CMatrix, C64};
use crate::metrics::{count_lr_tmmse, count_mmse, SolveTail};
use crate::sysmodel::complex_gaussian;
use crate::tensor::{multi_index, ComplexTensor, CpFilter};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64) -> Check {
    Check {
        name,
        passed: worst <= tol,
        detail: format!("worst deviation {worst:.3e} (tolerance {tol:.0e})"),
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| complex_gaussian(rng, 1.0)).collect()
}

/// Unfolding against a direct walk over every index tuple.
fn unfold_check(rng: &mut ChaCha8Rng) -> Check {
    let dims = [3, 4, 5];
    let t = ComplexTensor::from_vector(random_vec(rng, 60), &dims).expect("valid dims");
    let mut worst = 0.0f64;
    for mode in 0..3 {
        let m = t.unfold(mode).expect("valid mode");
        for flat in 0..60 {
            let idx = multi_index(&dims, flat);
            let mut col = 0;
            let mut stride = 1;
            for q in (0..3).filter(|&q| q != mode) {
                col += idx[q] * stride;
                stride *= dims[q];
            }
            worst = worst.max((m[(idx[mode], col)] - t.data()[flat]).norm());
        }
    }
    check("unfold matches index map", worst, 0.0)
}

fn cp_check(rng: &mut ChaCha8Rng) -> Check {
    let dims = [3, 2, 4];
    let factors = dims
        .iter()
        .map(|&n| (0..3).map(|_| random_vec(rng, n)).collect())
        .collect();
    let f = CpFilter::new(factors).expect("consistent factors");
    let v = f.vectorize();
    let worst = (0..v.len())
        .map(|flat| {
            let e = f.element(&multi_index(&dims, flat)).expect("in range");
            (e - v[flat]).norm() / e.norm().max(1e-300)
        })
        .fold(0.0, f64::max);
    check(
        "vectorized CP filter matches elementwise form",
        worst,
        1e-12,
    )
}

fn reduction_check(rng: &mut ChaCha8Rng) -> Check {
    let x = CMatrix::from_fn(8, 32, |_, _| complex_gaussian(rng, 1.0));
    let s = random_vec(rng, 32);
    let cfg = LrTmmseConfig {
        dims: vec![8],
        rank: 1,
        max_iters: 1,
        loading: Loading::NONE,
        init: Init::Canonical,
        ..Default::default()
    };
    let worst = match (
        lr_tmmse_train(&x, &s, &cfg),
        mmse_sample(&x, &s, 0, Loading::NONE),
    ) {
        (Ok(a), Ok(b)) => {
            let scale = b.w_vec.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            a.w_vec
                .iter()
                .zip(&b.w_vec)
                .map(|(p, q)| (p - q).norm() / scale)
                .fold(0.0, f64::max)
        }
        _ => f64::INFINITY,
    };
    check(
        "single-mode rank-one filter equals sample MMSE",
        worst,
        1e-9,
    )
}

fn count_check() -> Check {
    let a = count_mmse(512, 600);
    let b = count_lr_tmmse(&[8, 8, 8], 3, 2, 600, SolveTail::Linear);
    Check {
        name: "closed-form product counts at N=512, K=600",
        passed: a == 292_073_472 && b == 11_321_520,
        detail: format!("benchmark {a}, tensor {b}"),
    }
}

pub fn run() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
    vec![
        unfold_check(&mut rng),
        cp_check(&mut rng),
        reduction_check(&mut rng),
        count_check(),
    ]
}
